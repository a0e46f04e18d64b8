"""Command line: ``capssc build-data | simulate | verify``.

Exit codes: 0 pass, 1 suite failure or aborted run, 2 construction
constraint (profile or resolution), 64 usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .checkpoint import checkpoint_read, checkpoint_time, checkpoint_write
from .config import ConfigError, RunConfig, load_config
from .diagnostics import ResolutionError
from .disk_poisson import QuarterDiskSolver
from .evolve import CFLError, NonFiniteError, SimState, Stepper
from .fields import ORIENTATION, QuarterField
from .init_data import ConstraintError, ProfileSpec, non_plateau_measure
from . import reports, suites
from .runner import constants_from_run, run, run_checks, trajectory_measurements

EXIT_OK, EXIT_FAIL, EXIT_CONSTRAINT, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("capssc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file (default: $CAPSSC_CONFIG)")
    for f in fields(RunConfig):
        p.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar=f.name.upper(), default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="capssc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, text in (("build-data", "write the initial profile, stream function and velocity"),
                       ("simulate", "run the flow and the trajectory diagnostics"),
                       ("verify", "run certification suites")):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        if name == "verify":
            p.add_argument("--suite", default="all", choices=suites.SUITES + ("all",))
    return parser


def _config(args) -> RunConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return load_config(args.config, overrides)


def _stem(cfg: RunConfig, what: str) -> Path:
    return cfg.out / f"{cfg.run_id}_{what}"


def _manifest(cfg: RunConfig, checks, constants: dict, started: float, **extra) -> reports.RunManifest:
    m = reports.RunManifest(cfg.to_dict(), constants, reports.version_string(), time.perf_counter() - started,
                            reports.acceptance_rows(checks), extra)
    m.write(_stem(cfg, "manifest.json"))
    return m


# ---------------------------------------------------------------------------


def cmd_build_data(cfg: RunConfig) -> int:
    started = time.perf_counter()
    w0 = suites.initial_vorticity(cfg)
    stream = QuarterDiskSolver(cfg.n, cfg.radius, n_boundary=cfg.n_boundary).solve(w0, ORIENTATION)
    psi = QuarterField(stream.psi_grid(), extent=cfg.radius)
    u1, u2 = stream.velocity_grid()
    names = {"f": w0, "psi": psi, "u0_1": u1, "u0_2": u2}
    for key, fld in names.items():
        checkpoint_write(fld, _stem(cfg, f"{key}.ckpt"), time=0.0)
    st = Stepper(cfg.n, cfg.radius, n_boundary=cfg.n_boundary)
    s = SimState(w0)
    st.record(s)
    spec_measure = non_plateau_measure(
        ProfileSpec(cfg.eta, cfg.epsilon, cfg.a_exponent, cfg.blend_width, cfg.radius))
    info = {"K0": s.ledger.kinetic[0], "non_plateau_measure": spec_measure, "eta": cfg.eta,
            "files": sorted(str(_stem(cfg, f"{k}.ckpt")) for k in names)}
    reports.write_json(info, _stem(cfg, "initial.json"))
    _manifest(cfg, [], {}, started, initial=info)
    print(f"K(0) = {info['K0']:.10g}; non-plateau measure {spec_measure:.6g} <= eta = {cfg.eta:g}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    started = time.perf_counter()
    ckpt_dir = cfg.out / "checkpoints"
    result = run(cfg, progress=print, checkpoint_dir=ckpt_dir)
    cfg.out.mkdir(parents=True, exist_ok=True)
    reports.write_csv(result.rows, _stem(cfg, "series.csv"), reports.SERIES_COLUMNS)
    reports.write_csv([s.row() for s in result.trajectory], _stem(cfg, "trajectory.csv"))
    if result.final.step_index == 0:
        _manifest(cfg, [], {}, started, stop_reason=result.stop_reason, steps=0)
        print("no steps taken")
        return EXIT_OK
    for k, w in enumerate(result.snapshots):
        checkpoint_write(w, ckpt_dir / f"{cfg.run_id}_snapshot_{k:03d}.ckpt")
    measured = trajectory_measurements(result)
    checks = run_checks(result, measured)
    constants = constants_from_run(result, measured)
    growth = result.growth()
    hd = measured["hyperbola"]
    summary = {
        "case_flag": growth.case_flag, "fit_rate": growth.fit_rate, "horizon": result.horizon,
        "exit_time": result.exit_time, "exit_edge": measured["exit_edge"], "steps": result.final.step_index,
        "constants": constants.to_dict(), "a_check": constants.compare_a(cfg.a_exponent),
        "drift": result.drift(), "symmetry": result.symmetry,
        "transported": measured["transported"], "axis": measured["axis"],
        "signs": {k: v for k, v in measured["signs"].items() if not k.startswith("margin_")},
        "hyperbola": None if hd is None else {"sup_rate": hd.sup_rate, "two_c2": hd.two_c2,
                                              "rms": hd.fitted_bound, "phi1_exit_log": hd.phi1_exit_log,
                                              "phi1_exit_bound": hd.phi1_exit_bound},
        "growth": growth.to_dict(),
    }
    reports.write_json(summary, _stem(cfg, "summary.json"))
    reports.plot_growth(growth.times, growth.sup_grad_box, growth.sup_hess, _stem(cfg, "growth.svg"), cfg.epsilon)
    reports.plot_trajectory(result.rows, np.exp(-cfg.epsilon * result.horizon), _stem(cfg, "trajectory.svg"))
    sg = measured["signs"]
    reports.plot_margins([np.array(sg["margin_u1"]) * -1 - 1 / 48, np.array(sg["margin_u2"]) - 1 / 48],
                         ["-u1/(Phi1 eps log 1/eta) - 1/48", "u2/(Phi2 eps log 1/eta) - 1/48"],
                         _stem(cfg, "sign_margins.svg"))
    _manifest(cfg, checks, constants.to_dict(), started, stop_reason=result.stop_reason,
              steps=result.final.step_index)
    for c in checks:
        print(c.line())
    return EXIT_OK


def _stored_snapshots(cfg: RunConfig, count: int = 5):
    """Up to ``count`` evenly spaced stored snapshots after ``t = 0`` from an earlier simulate."""
    files = sorted((cfg.out / "checkpoints").glob(f"{cfg.run_id}_snapshot_*.ckpt"))
    files = [f for f in files if checkpoint_time(f) > 0]
    if not files:
        return []
    pick = np.unique(np.linspace(0, len(files) - 1, min(count, len(files))).round().astype(int))
    return [checkpoint_read(files[i]) for i in pick]


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    started = time.perf_counter()
    chosen = suites.SUITES if suite == "all" else (suite,)
    results = []
    for name in chosen:
        if name == "geometry":
            res = suites.geometry_suite(cfg.geometry_polygons, cfg.geometry_curves, cfg.seed)
        elif name == "harmonic":
            res = suites.harmonic_suite(cfg.harmonic_fields, cfg.seed)
        else:
            snaps = _stored_snapshots(cfg)
            vels = None
            if snaps:
                solver = QuarterDiskSolver(cfg.n, cfg.radius, n_boundary=cfg.n_boundary)
                vels = [solver.solve(w, ORIENTATION).velocity for w in [suites.initial_vorticity(cfg)] + snaps]
            res = suites.bs_law_suite(cfg, snaps, vels)
        results.append(res)
        stem = name.replace("-", "_")
        reports.write_json({"suite": name, "passed": res.passed, "seconds": res.seconds,
                            "checks": reports.acceptance_rows(res.checks), "summary": res.summary},
                           _stem(cfg, f"{stem}.json"))
        reports.write_csv(res.records, _stem(cfg, f"{stem}.csv"))
        _plot_suite(cfg, res, _stem(cfg, f"{stem}_margins.svg"))
        for c in res.checks:
            print(f"[{name}] {c.line()}")
    checks = [c for r in results for c in r.checks]
    _manifest(cfg, checks, {}, started, suites=list(chosen))
    failing = [f"{r.name}: {n}" for r in results for n in r.failing()]
    if failing:
        print("failing invariants: " + "; ".join(failing), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _plot_suite(cfg, res, path) -> None:
    recs = res.records
    if res.name == "geometry":
        poly = [r["margin"] for r in recs if r["kind"] == "polygon"]
        sq = [r["squared_margin"] for r in recs if r["kind"] == "polygon"]
        gap = [r["gap_bound"] + 1e-4 - r["R_minus_rho"] for r in recs if r["kind"] == "curve"]
        reports.plot_margins([poly, sq, gap], ["deficit - pi^2 (R - rho)", "deficit - pi^2 (R - rho)^2",
                                               "9 delta/pi - (R - rho)"], path, "geometry")
    elif res.name == "harmonic":
        C = res.summary["constant"]
        reports.plot_margins([[C - r["c1_ratio"] for r in recs], [C - r["pointwise_ratio"] for r in recs]],
                             ["gradient", "pointwise"], path, "harmonic error")
    else:
        reports.plot_margins([[r["bound1"] - abs(r["b1"]) for r in recs], [r["bound2"] - abs(r["b2"]) for r in recs]],
                             ["B_1", "B_2"], path, "remainder")


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cfg = _config(args)
    except (UsageError, ConfigError) as exc:
        print(f"capssc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "build-data":
            return cmd_build_data(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_verify(cfg, args.suite)
    except (ConstraintError, ResolutionError) as exc:
        print(f"capssc: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (NonFiniteError, CFLError) as exc:
        print(f"capssc: run aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
