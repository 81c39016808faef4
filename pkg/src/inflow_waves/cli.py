"""Scenario-driven command line: classification, profiles, waves, runs,
and aggregated reports.

Subcommands: classify, profile, wave, simulate, report.  Every command
reads one JSON scenario (--config) and writes delimited files into an
output directory (--out).  Configuration problems exit with 2 before any
output file is created; numerical failures exit with 3; everything else,
including failed acceptance checks in a report, exits 0 because measured
failures are data.

INFLOW_WAVES_THREADS caps the worker threads of classification sweeps.
Output bytes do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import report as rpt
from .boundary_layer import BlSetup, ProfileGrid, integrate_profile, verify_decay
from .errors import (
    CompatibilityViolated,
    ConfigError,
    InflowWavesError,
    PositivityViolated,
)
from .scenario import Scenario, build_wave, classify_rows, load_scenario, materialize
from .solver import init, run

PROFILE_SAMPLES = 2001


def _thread_cap() -> int:
    raw = os.environ.get("INFLOW_WAVES_THREADS")
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigError(
            f"INFLOW_WAVES_THREADS must be an integer, got {raw!r}"
        ) from exc
    if val < 1:
        raise ConfigError("INFLOW_WAVES_THREADS must be at least 1")
    return val


def _say(ns: argparse.Namespace, msg: str) -> None:
    if not ns.quiet:
        print(msg)


def _ensure_out(ns: argparse.Namespace) -> str:
    os.makedirs(ns.out, exist_ok=True)
    return ns.out


def cmd_classify(ns: argparse.Namespace) -> None:
    sc = load_scenario(ns.config)
    rows = classify_rows(sc, max_workers=_thread_cap())
    out = _ensure_out(ns)
    path = rpt.write_classify(out, rows, sc.to_dict())
    _say(ns, f"classify: {len(rows)} row(s) -> {path}")


def _nontrivial_layer_setup(sc: Scenario) -> BlSetup:
    wave = build_wave(sc)
    if wave.bl.delta_bar == 0.0:
        raise ConfigError(
            "profile: the scenario's layer is trivial (theta_minus equals "
            "the intermediate temperature)"
        )
    return wave.bl.setup


def cmd_profile(ns: argparse.Namespace) -> None:
    sc = load_scenario(ns.config)
    setup = _nontrivial_layer_setup(sc)
    n = PROFILE_SAMPLES if ns.n is None else ns.n
    if n < 2:
        raise ConfigError("profile: --n needs at least two samples")
    profile = integrate_profile(setup, ProfileGrid(n=n))
    decay = verify_decay(profile)
    out = _ensure_out(ns)
    resolved = sc.to_dict()
    path = rpt.write_bl_profile(out, profile, resolved)
    rpt.write_bl_decay(out, decay, resolved)
    _say(
        ns,
        f"profile: {profile.xi.size} samples, {decay.kind.value} tail, "
        f"rate {decay.measured_rate:.6g} vs {decay.expected_rate:.6g} "
        f"({'ok' if decay.ok else 'MISMATCH'}) -> {path}",
    )


def cmd_wave(ns: argparse.Namespace) -> None:
    sc = load_scenario(ns.config)
    rs = materialize(sc, n_override=ns.n, t_end_override=ns.t_end)
    t_end = rs.sim.t_end
    times = sorted({0.0, 0.25 * t_end, 0.5 * t_end, 0.75 * t_end, t_end})
    out = _ensure_out(ns)
    for t in times:
        path = rpt.write_wave_fields(out, rs.wave, t, rs.grid.xi, rs.resolved)
        _say(ns, f"wave: t={rpt.time_tag(t)} -> {path}")


def cmd_simulate(ns: argparse.Namespace) -> None:
    sc = load_scenario(ns.config)
    rs = materialize(sc, n_override=ns.n, t_end_override=ns.t_end)
    try:
        state = init(rs.wave, rs.grid, rs.perturbation, rs.sim)
    except (CompatibilityViolated, PositivityViolated) as exc:
        raise ConfigError(f"initial data: {exc}") from exc
    out = _ensure_out(ns)
    rpt.write_snapshot(out, state, rs.wave, rs.resolved)
    history = run(state, rs.wave)
    rpt.write_norms(out, history, rs.resolved)
    rpt.write_snapshot(out, state, rs.wave, rs.resolved, t_label=rs.sim.t_end)
    _say(
        ns,
        f"simulate: {history.n_steps} steps to t={state.t:g}, "
        f"decay ratio {history.decay_ratio:.4g} "
        f"({'decayed' if history.decayed else 'not decayed'}) -> {out}",
    )


def cmd_report(ns: argparse.Namespace) -> None:
    load_scenario(ns.config)  # validate; a malformed config must exit 2
    norms_path = os.path.join(ns.out, "norms.csv")
    if not os.path.exists(norms_path):
        raise ConfigError(
            f"report: no norms.csv under {ns.out}; run simulate first"
        )
    norms = rpt.read_table(norms_path)
    checks = rpt.evaluate_run(norms)
    path = rpt.write_report(ns.out, checks, norms.config)
    rpt.render_norms_figure(ns.out, norms)

    def tagged(prefix: str) -> tuple[list[rpt.TableData], list[str]]:
        found = []
        for name in os.listdir(ns.out):
            if name.startswith(prefix) and name.endswith(".csv"):
                try:
                    tag = float(name[len(prefix):-4])
                except ValueError:
                    continue
                found.append((tag, name))
        found.sort()
        tables = [rpt.read_table(os.path.join(ns.out, name)) for _, name in found]
        labels = [f"t={rpt.time_tag(tag)}" for tag, _ in found]
        return tables, labels

    snaps, snap_labels = tagged("snapshot_t")
    if snaps:
        rpt.render_snapshot_figure(ns.out, snaps, snap_labels)
    waves, wave_labels = tagged("wave_t")
    if waves:
        rpt.render_wave_figure(ns.out, waves, wave_labels)
    for c in checks:
        _say(
            ns,
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: "
            f"{c.value:.6g} (threshold {c.threshold:g})",
        )
    _say(ns, f"report: {sum(c.passed for c in checks)}/{len(checks)} checks "
             f"passed -> {path}")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inflow-waves",
        description="Inflow-problem wave toolkit: classification, layer "
        "profiles, composite reference waves, and perturbation runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str, n: bool = False, t_end: bool = False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress summary lines")
        if n:
            p.add_argument("--n", type=int, default=None, help="grid override")
        if t_end:
            p.add_argument("--t-end", dest="t_end", type=float, default=None,
                           help="horizon override")
        p.set_defaults(func=func)
        return p

    add("classify", cmd_classify, "write the layer-existence table")
    add("profile", cmd_profile, "integrate and check the boundary layer",
        n=True)
    add("wave", cmd_wave, "write reference-wave fields and sources",
        n=True, t_end=True)
    add("simulate", cmd_simulate, "run the perturbed initial-value problem",
        n=True, t_end=True)
    add("report", cmd_report, "aggregate a prior run into pass/fail checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = _parser().parse_args(argv)
    try:
        ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InflowWavesError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
