"""Scenario configuration: strict parsing, defaults, and run assembly.

A scenario is one JSON object naming the gas, the far-field state, the
reference wave, the grid, the run parameters, and the initial
perturbation.  Parsing is strict: unknown keys anywhere in the tree,
missing required keys, and wrongly typed values all raise ConfigError
before any computation starts.  Defaults are filled at parse time, so the
normalized configuration embedded in output files is complete.

Two values may stay symbolic after parsing: the grid length L ("auto")
and the perturbation width (absent).  Both need the constructed wave, and
materialize() resolves them: auto L covers the layer extent, the smoothed
fan tail, and the distance any signal can travel before t_end; auto width
is L/10.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .boundary_layer import BlSetup, classify_existence
from .composite import CompositeWave, build_composite, connect_zm, v_m_from_strength
from .errors import (
    ConfigError,
    InadmissibleBoundaryValue,
    InvalidWaveOrdering,
)
from .gas import EulerState, GasParams
from .rarefaction import fan_tail_cover
from .solver import Grid, PerturbationSpec, SimConfig

# Mass fraction of the data ramp allowed to fall off the right edge of an
# auto-sized grid.
FAN_TAIL_MASS = 1e-12

DEFAULT_N = 1024
DEFAULT_T_END = 200.0
DEFAULT_Q = 20.0
DEFAULT_PERT_KIND = "psi_bump"
DEFAULT_PERT_AMPLITUDE = 1e-2

# Wave-construction failures that mean the configuration itself is bad.
_PRECONDITION_ERRORS = (ValueError, InvalidWaveOrdering, InadmissibleBoundaryValue)

_REQUIRED = object()


def _fail(path: str, msg: str) -> None:
    raise ConfigError(f"{path}: {msg}")


def _check_keys(obj: Any, allowed: tuple[str, ...], path: str) -> dict:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        _fail(path, "unknown key(s): " + ", ".join(unknown))
    return obj


def _number(obj: dict, key: str, path: str, default: Any = _REQUIRED) -> Any:
    if key not in obj:
        if default is _REQUIRED:
            _fail(path, f"missing required key '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(f"{path}.{key}", "expected a number")
    return float(val)


def _integer(obj: dict, key: str, path: str, default: Any = _REQUIRED) -> Any:
    if key not in obj:
        if default is _REQUIRED:
            _fail(path, f"missing required key '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(f"{path}.{key}", "expected an integer")
    return val


def _string(obj: dict, key: str, path: str, default: Any = _REQUIRED) -> Any:
    if key not in obj:
        if default is _REQUIRED:
            _fail(path, f"missing required key '{key}'")
        return default
    val = obj[key]
    if not isinstance(val, str):
        _fail(f"{path}.{key}", "expected a string")
    return val


@dataclass(frozen=True)
class ClassifySweep:
    """Classification sweep request: grid of far speeds and gas exponents.

    u_range None means the per-gamma default band
    [0.5*sqrt(R*theta+), 1.5*sqrt(gamma*R*theta+)], which brackets both
    sonic edges for any gamma.  gammas empty means the scenario's own gas.
    """

    u_points: int = 1
    u_range: tuple[float, float] | None = None
    gammas: tuple[float, ...] = ()


@dataclass(frozen=True)
class Scenario:
    """Normalized scenario: every default filled, nothing computed yet."""

    gas: GasParams
    z_plus: EulerState
    wave_kind: str  # "bl" | "rarefaction" | "composite"
    theta_minus: float | None  # None: pure fan, trivial layer at z_m
    v_m: float | None  # at most one of v_m / delta_r is set
    delta_r: float | None
    eps: float
    q: float
    grid_L: float | None  # None: auto
    grid_N: int
    sim: SimConfig
    pert_kind: str
    pert_amplitude: float
    pert_width: float | None  # None: auto (L/10)
    seed: int
    sweep: ClassifySweep | None

    def to_dict(self) -> dict:
        """Normalized configuration as a JSON-ready tree."""
        fan: dict[str, Any] = {"eps": self.eps, "q": self.q}
        if self.delta_r is not None:
            fan["delta_r"] = self.delta_r
        elif self.v_m is not None:
            fan["v_m"] = self.v_m
        if self.wave_kind == "bl":
            wave: dict[str, Any] = {"bl": {"theta_minus": self.theta_minus}}
        elif self.wave_kind == "rarefaction":
            wave = {"rarefaction": fan}
        else:
            wave = {
                "composite": {
                    "bl": {"theta_minus": self.theta_minus},
                    "rarefaction": fan,
                }
            }
        out = {
            "gas": {
                "R": self.gas.R,
                "gamma": self.gas.gamma,
                "A": self.gas.A,
                "kappa": self.gas.kappa,
            },
            "z_plus": {
                "rho": self.z_plus.rho,
                "u": self.z_plus.u,
                "theta": self.z_plus.theta,
            },
            "wave": wave,
            "grid": {
                "L": "auto" if self.grid_L is None else self.grid_L,
                "N": self.grid_N,
            },
            "sim": {
                "t_end": self.sim.t_end,
                "cfl": self.sim.cfl,
                "output_stride": self.sim.output_stride,
                "decay_target": self.sim.decay_target,
            },
            "perturbation": (
                {"kind": "none"}
                if self.pert_kind == "none"
                else {
                    "kind": self.pert_kind,
                    "amplitude": self.pert_amplitude,
                    "width": "auto" if self.pert_width is None else self.pert_width,
                }
            ),
            "seed": self.seed,
        }
        if self.sweep is not None:
            out["classify"] = {
                "u_points": self.sweep.u_points,
                "u_range": (
                    "auto" if self.sweep.u_range is None else list(self.sweep.u_range)
                ),
                "gammas": list(self.sweep.gammas),
            }
        return out


def _parse_gas(obj: dict) -> GasParams:
    _check_keys(obj, ("R", "gamma", "A", "kappa"), "gas")
    try:
        return GasParams(
            R=_number(obj, "R", "gas", 1.0),
            gamma=_number(obj, "gamma", "gas", 1.4),
            A=_number(obj, "A", "gas", 1.0),
            kappa=_number(obj, "kappa", "gas", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"gas: {exc}") from exc


def _parse_z_plus(obj: dict) -> EulerState:
    _check_keys(obj, ("rho", "u", "theta"), "z_plus")
    try:
        return EulerState(
            rho=_number(obj, "rho", "z_plus"),
            u=_number(obj, "u", "z_plus"),
            theta=_number(obj, "theta", "z_plus"),
        )
    except ValueError as exc:
        raise ConfigError(f"z_plus: {exc}") from exc


def _parse_fan_block(obj: dict, path: str) -> tuple[float | None, float | None, float, float]:
    _check_keys(obj, ("v_m", "delta_r", "eps", "q"), path)
    has_vm = "v_m" in obj
    has_dr = "delta_r" in obj
    if has_vm == has_dr:
        _fail(path, "exactly one of 'v_m' and 'delta_r' is required")
    v_m = _number(obj, "v_m", path) if has_vm else None
    delta_r = _number(obj, "delta_r", path) if has_dr else None
    if v_m is not None and not (v_m > 0.0):
        _fail(f"{path}.v_m", "must be positive")
    if delta_r is not None and delta_r < 0.0:
        _fail(f"{path}.delta_r", "must be nonnegative")
    eps = _number(obj, "eps", path)
    q = _number(obj, "q", path, DEFAULT_Q)
    if not (0.0 < eps < 1.0):
        _fail(f"{path}.eps", "must lie in (0, 1)")
    if not (q > 16.0):
        _fail(f"{path}.q", "must exceed 16")
    return v_m, delta_r, eps, q


def _parse_bl_block(obj: dict, path: str) -> float:
    _check_keys(obj, ("theta_minus",), path)
    theta_minus = _number(obj, "theta_minus", path)
    if not (theta_minus > 0.0):
        _fail(f"{path}.theta_minus", "must be positive")
    return theta_minus


def _parse_wave(obj: dict) -> tuple[str, float | None, float | None, float | None, float, float]:
    _check_keys(obj, ("bl", "rarefaction", "composite"), "wave")
    present = [k for k in ("bl", "rarefaction", "composite") if k in obj]
    if len(present) != 1:
        _fail("wave", "exactly one of 'bl', 'rarefaction', 'composite' is required")
    kind = present[0]
    theta_minus: float | None = None
    v_m: float | None = None
    delta_r: float | None = None
    eps, q = 0.05, DEFAULT_Q  # harmless for the trivial fan of a pure layer
    if kind == "bl":
        theta_minus = _parse_bl_block(obj["bl"], "wave.bl")
    elif kind == "rarefaction":
        v_m, delta_r, eps, q = _parse_fan_block(obj["rarefaction"], "wave.rarefaction")
    else:
        comp = _check_keys(obj["composite"], ("bl", "rarefaction"), "wave.composite")
        for key in ("bl", "rarefaction"):
            if key not in comp:
                _fail("wave.composite", f"missing required key '{key}'")
        theta_minus = _parse_bl_block(comp["bl"], "wave.composite.bl")
        v_m, delta_r, eps, q = _parse_fan_block(
            comp["rarefaction"], "wave.composite.rarefaction"
        )
    return kind, theta_minus, v_m, delta_r, eps, q


def _parse_grid(obj: dict) -> tuple[float | None, int]:
    _check_keys(obj, ("L", "N"), "grid")
    L: float | None
    if "L" not in obj or obj["L"] == "auto":
        L = None
    else:
        L = _number(obj, "L", "grid")
        if not (L > 0.0):
            _fail("grid.L", "must be positive or 'auto'")
    N = _integer(obj, "N", "grid", DEFAULT_N)
    if N < 64:
        _fail("grid.N", "needs at least 64 cells")
    return L, N


def _parse_sim(obj: dict) -> SimConfig:
    _check_keys(obj, ("t_end", "cfl", "output_stride", "decay_target"), "sim")
    try:
        return SimConfig(
            t_end=_number(obj, "t_end", "sim", DEFAULT_T_END),
            cfl=_number(obj, "cfl", "sim", 0.4),
            output_stride=_integer(obj, "output_stride", "sim", 10),
            decay_target=_number(obj, "decay_target", "sim", 0.1),
        )
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc


def _parse_perturbation(obj: dict) -> tuple[str, float, float | None]:
    _check_keys(obj, ("kind", "amplitude", "width"), "perturbation")
    kind = _string(obj, "kind", "perturbation", DEFAULT_PERT_KIND)
    if kind == "none":
        for key in ("amplitude", "width"):
            if key in obj:
                _fail(f"perturbation.{key}", "meaningless for kind 'none'")
        return kind, 0.0, 0.0
    if kind != "psi_bump":
        _fail("perturbation.kind", f"unknown kind {kind!r}")
    amplitude = _number(obj, "amplitude", "perturbation", DEFAULT_PERT_AMPLITUDE)
    width: float | None = None
    if "width" in obj and obj["width"] != "auto":
        width = _number(obj, "width", "perturbation")
        if not (width > 0.0):
            _fail("perturbation.width", "must be positive")
    return kind, amplitude, width


def _parse_classify(obj: dict, gas: GasParams) -> ClassifySweep:
    _check_keys(obj, ("u_points", "u_range", "gammas"), "classify")
    u_points = _integer(obj, "u_points", "classify", 1)
    if u_points < 1:
        _fail("classify.u_points", "must be at least 1")
    u_range: tuple[float, float] | None = None
    if "u_range" in obj and obj["u_range"] != "auto":
        raw = obj["u_range"]
        if (
            not isinstance(raw, list)
            or len(raw) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in raw)
        ):
            _fail("classify.u_range", "expected [lo, hi] numbers or 'auto'")
        lo, hi = float(raw[0]), float(raw[1])
        if not (0.0 < lo < hi):
            _fail("classify.u_range", "requires 0 < lo < hi")
        u_range = (lo, hi)
    gammas: tuple[float, ...] = (gas.gamma,)
    if "gammas" in obj:
        raw = obj["gammas"]
        if (
            not isinstance(raw, list)
            or not raw
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in raw)
        ):
            _fail("classify.gammas", "expected a non-empty list of numbers")
        if any(x <= 1.0 for x in raw):
            _fail("classify.gammas", "adiabatic exponents must exceed 1")
        gammas = tuple(float(x) for x in raw)
    return ClassifySweep(u_points=u_points, u_range=u_range, gammas=gammas)


_TOP_KEYS = ("gas", "z_plus", "wave", "grid", "sim", "perturbation", "seed", "classify")


def scenario_from_dict(data: Any) -> Scenario:
    """Validate a parsed JSON tree and return the normalized scenario.

    Raises:
        ConfigError: unknown keys, missing required keys, wrong types, or
            values outside their module preconditions.
    """
    _check_keys(data, _TOP_KEYS, "config")
    for key in ("z_plus", "wave"):
        if key not in data:
            _fail("config", f"missing required key '{key}'")
    gas = _parse_gas(data.get("gas", {}))
    z_plus = _parse_z_plus(data["z_plus"])
    kind, theta_minus, v_m, delta_r, eps, q = _parse_wave(data["wave"])
    grid_L, grid_N = _parse_grid(data.get("grid", {}))
    sim = _parse_sim(data.get("sim", {}))
    pert_kind, pert_amplitude, pert_width = _parse_perturbation(
        data.get("perturbation", {})
    )
    seed = _integer(data, "seed", "config", 0)
    sweep = _parse_classify(data["classify"], gas) if "classify" in data else None
    return Scenario(
        gas=gas,
        z_plus=z_plus,
        wave_kind=kind,
        theta_minus=theta_minus,
        v_m=v_m,
        delta_r=delta_r,
        eps=eps,
        q=q,
        grid_L=grid_L,
        grid_N=grid_N,
        sim=sim,
        pert_kind=pert_kind,
        pert_amplitude=pert_amplitude,
        pert_width=pert_width,
        seed=seed,
        sweep=sweep,
    )


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ConfigError: unreadable file, invalid JSON, or invalid scenario.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_dict(data)


def build_wave(sc: Scenario) -> CompositeWave:
    """Construct the reference wave the scenario describes.

    Pure layers get the trivial fan (v_m = v_plus); pure fans get the
    trivial layer (theta_minus = theta_m).  Construction failures are
    configuration errors: the scenario asked for a wave that does not
    exist.

    Raises:
        ConfigError: the wave violates a module precondition.
    """
    g = sc.gas
    zp = sc.z_plus.to_lagrangian()
    try:
        if sc.wave_kind == "bl":
            v_m = zp.v
        elif sc.v_m is not None:
            v_m = sc.v_m
        else:
            assert sc.delta_r is not None
            v_m = v_m_from_strength(g, zp, sc.delta_r)
        theta_minus = sc.theta_minus
        if theta_minus is None:
            # pure fan: close the decomposition with the trivial layer
            theta_minus = connect_zm(zp, v_m, g).theta
        return build_composite(g, zp, v_m, theta_minus, eps=sc.eps, q=sc.q)
    except _PRECONDITION_ERRORS as exc:
        raise ConfigError(f"wave: {exc}") from exc


def resolve_grid(sc: Scenario, wave: CompositeWave, n_override: int | None = None) -> Grid:
    """Concrete grid, sizing L automatically when the scenario asks for it.

    Auto L is the largest of: the layer's sampled extent, the far signal
    cone 1.5*w_plus*(1 + t_end) plus the boundary drift |s_minus|*t_end,
    and (for a nontrivial fan) the data-ramp cover at tail mass
    FAN_TAIL_MASS plus the same cone and drift.
    """
    N = sc.grid_N if n_override is None else n_override
    if sc.grid_L is not None:
        return Grid(L=sc.grid_L, N=N)
    t_end = sc.sim.t_end
    w_p = wave.rare.w_plus
    drift = -wave.s_minus * t_end
    L = 1.5 * w_p * (1.0 + t_end) + drift
    if wave.rare.delta_r > 0.0:
        cover = fan_tail_cover(wave.rare, FAN_TAIL_MASS)
        L = max(L, cover + w_p * (1.0 + t_end) + drift)
    L = max(L, wave.bl.xi_cap)
    return Grid(L=L, N=N)


def resolve_perturbation(sc: Scenario, grid: Grid) -> PerturbationSpec:
    """Concrete perturbation; auto width becomes L/10."""
    if sc.pert_kind == "none":
        return PerturbationSpec("none")
    width = grid.L / 10.0 if sc.pert_width is None else sc.pert_width
    return PerturbationSpec(sc.pert_kind, amplitude=sc.pert_amplitude, width=width)


@dataclass(frozen=True)
class RunSetup:
    """Everything a command needs: wave, grid, perturbation, run config,
    and the fully resolved configuration for embedding in outputs."""

    scenario: Scenario
    wave: CompositeWave
    grid: Grid
    perturbation: PerturbationSpec
    sim: SimConfig
    resolved: dict


def materialize(
    sc: Scenario,
    n_override: int | None = None,
    t_end_override: float | None = None,
) -> RunSetup:
    """Apply overrides, build the wave, and resolve the symbolic values.

    Raises:
        ConfigError: invalid override or invalid wave.
    """
    if t_end_override is not None:
        try:
            sc = replace(sc, sim=replace(sc.sim, t_end=t_end_override))
        except ValueError as exc:
            raise ConfigError(f"t_end override: {exc}") from exc
    if n_override is not None and n_override < 64:
        raise ConfigError("grid override: needs at least 64 cells")
    wave = build_wave(sc)
    grid = resolve_grid(sc, wave, n_override)
    pert = resolve_perturbation(sc, grid)
    resolved = sc.to_dict()
    resolved["grid"] = {"L": grid.L, "N": grid.N}
    resolved["sim"]["t_end"] = sc.sim.t_end
    if pert.kind != "none":
        resolved["perturbation"]["width"] = pert.width
    return RunSetup(
        scenario=sc,
        wave=wave,
        grid=grid,
        perturbation=pert,
        sim=sc.sim,
        resolved=resolved,
    )


def _classify_row(
    gas: GasParams, rho: float, u: float, theta_plus: float, theta_minus: float
) -> dict:
    z = EulerState(rho=rho, u=u, theta=theta_plus)
    setup = BlSetup(gas, z, theta_minus)
    try:
        ex = classify_existence(setup, enforce_window=False)
        admits = setup.w2_0 == 1.0 or ex.admits(setup.w2_0)
    except InadmissibleBoundaryValue:
        # ratio beyond w2_sup: regime columns still exist, fill them from
        # the trivial ratio
        ex = classify_existence(BlSetup(gas, z, theta_plus), enforce_window=False)
        admits = False
    lo, hi = ex.window if ex.window is not None else (float("nan"), float("nan"))
    return {
        "gamma": gas.gamma,
        "u_plus": u,
        "theta_plus": theta_plus,
        "theta_minus": theta_minus,
        "case": ex.case.value,
        "subcase": ex.subcase.value,
        "w2_star": float("nan") if ex.w2_star is None else ex.w2_star,
        "w2_sup": ex.w2_sup,
        "window_lo": lo,
        "window_hi": hi,
        "admits_theta_minus": admits,
    }


def classify_rows(sc: Scenario, max_workers: int = 1) -> list[dict]:
    """Classification table rows for the scenario's classify request.

    Without a classify block this is the single configured point.  A sweep
    evaluates u_points far speeds per gamma; each (gamma, u) cell is
    independent, so the sweep may fan out across worker threads.  Rows
    come back in deterministic (gamma, u) order regardless of worker
    count.
    """
    sweep = sc.sweep if sc.sweep is not None else ClassifySweep()
    theta_plus = sc.z_plus.theta
    theta_minus = sc.theta_minus if sc.theta_minus is not None else theta_plus
    cells: list[tuple[GasParams, float]] = []
    for gamma in sweep.gammas or (sc.gas.gamma,):
        gas = GasParams(R=sc.gas.R, gamma=gamma, A=sc.gas.A, kappa=sc.gas.kappa)
        if sweep.u_points == 1 and sweep.u_range is None:
            us = [sc.z_plus.u]
        else:
            if sweep.u_range is not None:
                lo, hi = sweep.u_range
            else:
                lo = 0.5 * np.sqrt(gas.R * theta_plus)
                hi = 1.5 * np.sqrt(gas.gamma * gas.R * theta_plus)
            us = list(np.linspace(lo, hi, sweep.u_points))
        cells.extend((gas, float(u)) for u in us)

    def row(cell: tuple[GasParams, float]) -> dict:
        gas, u = cell
        return _classify_row(gas, sc.z_plus.rho, u, theta_plus, theta_minus)

    if max_workers <= 1:
        return [row(c) for c in cells]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(row, cells))
