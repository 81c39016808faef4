"""Delimited output files, their readers, and rendered report figures.

Every CSV starts with a two-line header: a schema line that also embeds
the fully resolved configuration as compact JSON, then the column names
with bracketed unit tags.  Floats are written with shortest round-trip
repr, so identical configurations produce byte-identical files.  The
model is nondimensional; the unit tags name the physical kind of each
quantity, with [-] for pure numbers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .boundary_layer import BlProfile, DecayReport
from .composite import CompositeWave, hat_state_grid, sources_grid
from .errors import ConfigError
from .solver import NormHistory, SimState

SCHEMA_VERSION = 1

# Relative slack allowed on the checkpoint monotonicity check.
CHECKPOINT_NOISE = 0.05
# Energy may grow to at most this multiple of its initial value.
ENERGY_GROWTH_BOUND = 2.0


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def schema_line(resolved: dict) -> str:
    """Header line carrying the schema version and the resolved config."""
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return f"# schema=inflow-waves-csv/{SCHEMA_VERSION} config={blob}"


def write_table(path: str, columns: list[str], rows, resolved: dict) -> str:
    """Write one CSV with the two-line header.  Returns the path."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(schema_line(resolved) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


@dataclass(frozen=True)
class TableData:
    """A CSV read back: embedded config, bare column names, and columns."""

    config: dict
    columns: list[str]
    data: dict[str, np.ndarray | list[str]]


def read_table(path: str) -> TableData:
    """Parse a file written by write_table.

    Numeric columns come back as float arrays, everything else as string
    lists.  Raises ConfigError when the header does not match the schema.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if len(lines) < 2 or not lines[0].startswith("# schema="):
        raise ConfigError(f"{path}: missing schema header")
    marker = " config="
    at = lines[0].find(marker)
    if at < 0:
        raise ConfigError(f"{path}: schema line has no embedded config")
    try:
        config = json.loads(lines[0][at + len(marker):])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: embedded config is not valid JSON") from exc
    names = [c.split(" [")[0] for c in lines[1].split(",")]
    cells = [ln.split(",") for ln in lines[2:] if ln]
    data: dict[str, np.ndarray | list[str]] = {}
    for j, name in enumerate(names):
        col = [row[j] for row in cells]
        try:
            data[name] = np.array([float(x) for x in col])
        except ValueError:
            data[name] = col
    return TableData(config=config, columns=names, data=data)


# ----------------------------------------------------------- file writers


def time_tag(t: float) -> str:
    return f"{t:g}"


def write_bl_profile(out_dir: str, profile: BlProfile, resolved: dict) -> str:
    """bl_profile.csv: layer samples in the stationary coordinate."""
    res_mass, res_mom = profile.first_integral_residuals()
    columns = [
        "xi [length]",
        "w2 [-]",
        "v [volume]",
        "u [speed]",
        "theta [temp]",
        "residual_mass [-]",
        "residual_momentum [-]",
    ]
    rows = zip(profile.xi, profile.w2, profile.v, profile.u, profile.theta,
               res_mass, res_mom)
    return write_table(os.path.join(out_dir, "bl_profile.csv"), columns, rows, resolved)


def write_bl_decay(out_dir: str, report: DecayReport, resolved: dict) -> str:
    """bl_decay.csv: one row comparing the fitted tail to the analytic rate."""
    columns = [
        "kind [enum]",
        "measured_rate [1/length]",
        "expected_rate [1/length]",
        "rel_err [-]",
        "fit_r_squared [-]",
        "logfit_r_squared [-]",
        "n_tail [-]",
        "ok [bool]",
    ]
    row = (
        report.kind.value,
        report.measured_rate,
        report.expected_rate,
        report.rel_err,
        report.fit_r_squared,
        float("nan") if report.logfit_r_squared is None else report.logfit_r_squared,
        report.n_tail,
        report.ok,
    )
    return write_table(os.path.join(out_dir, "bl_decay.csv"), columns, [row], resolved)


def write_wave_fields(
    out_dir: str, wave: CompositeWave, t: float, xi: np.ndarray, resolved: dict
) -> str:
    """wave_t<T>.csv: superposed reference state and its residual sources."""
    v, u, th = hat_state_grid(t, xi, wave)[:3]
    g1, g2 = sources_grid(t, xi, wave)
    columns = [
        "xi [mass]",
        "v_hat [volume]",
        "u_hat [speed]",
        "theta_hat [temp]",
        "G1 [momentum/time]",
        "G2 [energy/time]",
    ]
    path = os.path.join(out_dir, f"wave_t{time_tag(t)}.csv")
    return write_table(path, columns, zip(xi, v, u, th, g1, g2), resolved)


def write_norms(out_dir: str, history: NormHistory, resolved: dict) -> str:
    """norms.csv: perturbation norms and boundary traces over the run."""
    columns = [
        "t [time]",
        "L2 [-]",
        "H1 [-]",
        "H2 [-]",
        "Linf [-]",
        "energy [energy]",
        "bnd_phi_xi [volume/mass]",
        "bnd_psi_xi [speed/mass]",
        "bnd_zeta_xi [temp/mass]",
    ]
    rows = (
        (r.t, r.l2, r.h1, r.h2, r.linf, r.energy,
         r.bnd_phi_xi, r.bnd_psi_xi, r.bnd_zeta_xi)
        for r in history.records
    )
    return write_table(os.path.join(out_dir, "norms.csv"), columns, rows, resolved)


def write_snapshot(
    out_dir: str, state: SimState, wave: CompositeWave, resolved: dict,
    t_label: float | None = None,
) -> str:
    """snapshot_t<T>.csv: solution fields and their perturbation parts.

    t_label overrides the filename tag (the solver may stop a rounding
    error short of the requested horizon).
    """
    xi = state.grid.xi
    hv, hu, hth = hat_state_grid(state.t, xi, wave)[:3]
    columns = [
        "xi [mass]",
        "v [volume]",
        "u [speed]",
        "theta [temp]",
        "phi [volume]",
        "psi [speed]",
        "zeta [temp]",
    ]
    tag = time_tag(state.t if t_label is None else t_label)
    path = os.path.join(out_dir, f"snapshot_t{tag}.csv")
    rows = zip(xi, state.v, state.u, state.theta,
               state.v - hv, state.u - hu, state.theta - hth)
    return write_table(path, columns, rows, resolved)


def write_classify(out_dir: str, rows: list[dict], resolved: dict) -> str:
    """classify.csv: one row per (gamma, u_plus) classification cell."""
    columns = [
        "gamma [-]",
        "u_plus [speed]",
        "theta_plus [temp]",
        "theta_minus [temp]",
        "case [enum]",
        "subcase [enum]",
        "w2_star [-]",
        "w2_sup [-]",
        "window_lo [-]",
        "window_hi [-]",
        "admits_theta_minus [bool]",
    ]
    keys = [c.split(" [")[0] for c in columns]
    data = ([row[k] for k in keys] for row in rows)
    return write_table(os.path.join(out_dir, "classify.csv"), columns, data, resolved)


# ------------------------------------------------------- run aggregation


@dataclass(frozen=True)
class CheckResult:
    """One pass/fail acceptance check with its measured value."""

    name: str
    value: float
    threshold: float
    passed: bool


def _checkpoints(t: np.ndarray) -> list[int]:
    """Indices of the records nearest the quarter points of the run."""
    t_end = float(t[-1])
    idx = []
    for frac in (0.25, 0.5, 0.75, 1.0):
        idx.append(int(np.argmin(np.abs(t - frac * t_end))))
    return sorted(set(idx))


def evaluate_run(norms: TableData) -> list[CheckResult]:
    """Acceptance checks over a simulate run's norms table.

    Checks: final sup-norm decay against the configured target, sup-norm
    monotonicity at the quarter-point checkpoints within CHECKPOINT_NOISE,
    energy nonnegativity, and (for a perturbed run) energy growth below
    ENERGY_GROWTH_BOUND times the initial value.
    """
    t = norms.data["t"]
    linf = norms.data["Linf"]
    energy = norms.data["energy"]
    target = float(norms.config["sim"]["decay_target"])

    checks = []
    ratio = 0.0 if linf[0] == 0.0 else float(linf[-1] / linf[0])
    checks.append(CheckResult("sup_norm_decay", ratio, target, ratio <= target))

    worst = 0.0
    cps = _checkpoints(t)
    for a, b in zip(cps, cps[1:]):
        if linf[a] > 0.0:
            worst = max(worst, float(linf[b] / linf[a]))
    checks.append(
        CheckResult(
            "checkpoint_monotone", worst, 1.0 + CHECKPOINT_NOISE,
            worst <= 1.0 + CHECKPOINT_NOISE,
        )
    )

    e_min = float(energy.min())
    checks.append(CheckResult("energy_nonnegative", e_min, 0.0, e_min >= 0.0))
    if energy[0] > 0.0:
        growth = float(energy.max() / energy[0])
        checks.append(
            CheckResult(
                "energy_bounded", growth, ENERGY_GROWTH_BOUND,
                growth <= ENERGY_GROWTH_BOUND,
            )
        )
    return checks


def write_report(out_dir: str, checks: list[CheckResult], resolved: dict) -> str:
    """report.csv: one row per acceptance check."""
    columns = ["check [name]", "value [-]", "threshold [-]", "passed [bool]"]
    rows = ((c.name, c.value, c.threshold, c.passed) for c in checks)
    return write_table(os.path.join(out_dir, "report.csv"), columns, rows, resolved)


# ---------------------------------------------------------------- figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


_SAVE_OPTS = {"dpi": 110, "metadata": {"Software": None}}


def render_norms_figure(out_dir: str, norms: TableData) -> str:
    """norms.png: sup and L2 norm decay with the target line."""
    plt = _pyplot()
    t = norms.data["t"]
    target = float(norms.config["sim"]["decay_target"])
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    for name in ("Linf", "L2", "H1"):
        ax0.plot(t, norms.data[name], label=name)
    ax0.set_yscale("log")
    ax0.set_xlabel("t")
    ax0.set_ylabel("perturbation norm")
    first = float(norms.data["Linf"][0])
    if first > 0.0:
        ax0.axhline(target * first, color="gray", ls="--", lw=0.8,
                    label="decay target")
    ax0.legend(fontsize=8)
    ax1.plot(t, norms.data["energy"], color="tab:red")
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy functional")
    fig.tight_layout()
    path = os.path.join(out_dir, "norms.png")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def render_snapshot_figure(out_dir: str, snapshots: list[TableData],
                           labels: list[str]) -> str:
    """snapshots.png: fields and perturbations of each snapshot file."""
    plt = _pyplot()
    fig, axes = plt.subplots(2, 3, figsize=(11.0, 5.6), sharex=True)
    fields = ("v", "u", "theta")
    perts = ("phi", "psi", "zeta")
    for snap, label in zip(snapshots, labels):
        xi = snap.data["xi"]
        for j, name in enumerate(fields):
            axes[0, j].plot(xi, snap.data[name], lw=0.9, label=label)
        for j, name in enumerate(perts):
            axes[1, j].plot(xi, snap.data[name], lw=0.9, label=label)
    for j, name in enumerate(fields):
        axes[0, j].set_ylabel(name)
    for j, name in enumerate(perts):
        axes[1, j].set_ylabel(name)
        axes[1, j].set_xlabel("xi")
    axes[0, 0].legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "snapshots.png")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def render_profile_figure(out_dir: str, profile: TableData) -> str:
    """bl_profile.png: temperature ratio and state components of the layer."""
    plt = _pyplot()
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    xi = profile.data["xi"]
    ax0.plot(xi, profile.data["w2"], color="tab:blue")
    ax0.set_xlabel("xi")
    ax0.set_ylabel("w2")
    for name in ("v", "u", "theta"):
        ax1.plot(xi, profile.data[name], label=name, lw=0.9)
    ax1.set_xlabel("xi")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "bl_profile.png")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def render_wave_figure(out_dir: str, waves: list[TableData],
                       labels: list[str]) -> str:
    """wave_fields.png: reference fields and source terms over time."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(11.0, 3.2))
    for snap, label in zip(waves, labels):
        xi = snap.data["xi"]
        axes[0].plot(xi, snap.data["theta_hat"], lw=0.9, label=label)
        axes[1].plot(xi, np.abs(snap.data["G1"]) + 1e-300, lw=0.9, label=label)
        axes[2].plot(xi, np.abs(snap.data["G2"]) + 1e-300, lw=0.9, label=label)
    axes[0].set_ylabel("theta_hat")
    axes[1].set_ylabel("|G1|")
    axes[1].set_yscale("log")
    axes[2].set_ylabel("|G2|")
    axes[2].set_yscale("log")
    for ax in axes:
        ax.set_xlabel("xi")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, "wave_fields.png")
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path
