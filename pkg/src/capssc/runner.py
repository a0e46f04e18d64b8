"""One simulation run: initial data, time stepping, tracking and measurements.

The run goes until the tracked point leaves ``[0, e^{-eps T}]^2`` (or until
``t_end`` when one is configured).  Time series are sampled every
``sample_interval`` steps, full vorticity snapshots are kept every
``snapshot_interval`` steps, and the exit state is always sampled.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import checkpoint_write
from .config import RunConfig
from .diagnostics import (ConstantLedger, GrowthReport, TrajectoryState, TrajectoryTracker,
                          axis_gradient_check, exponential_rate, hessian_norm, horizon_for_grid,
                          hyperbola_drift, sign_bounds_check, transported_value_check)
from .evolve import NonFiniteError, SimState, Stepper
from .fields import VorticityField, box_sup
from .init_data import ProfileSpec, build_profile

log = logging.getLogger(__name__)


@dataclass
class GrowthSample:
    t: float
    sup_grad: float
    sup_hess: float
    where: tuple


def growth_sample(omega: VorticityField, side: float) -> GrowthSample:
    g, H = hessian_norm(omega)
    k = min(omega.n, int(math.floor(side / omega.spacing + 1e-9))) + 1
    i, j = np.unravel_index(np.argmax(H[:k, :k]), (k, k))
    return GrowthSample(omega.time, box_sup(g, omega, side), box_sup(H, omega, side),
                        (float(omega.nodes[i]), float(omega.nodes[j])))


@dataclass
class RunResult:
    config: RunConfig
    horizon: float
    k0: float
    initial: VorticityField
    final: SimState
    trajectory: list[TrajectoryState]
    rows: list[dict]
    growth_samples: list[GrowthSample]
    snapshots: list[VorticityField]
    symmetry: dict
    stop_reason: str
    wall_clock: float
    stepper: Stepper = field(repr=False)

    @property
    def exit_time(self) -> float | None:
        return self.trajectory[-1].exit_time if self.trajectory and self.trajectory[-1].exited else None

    def growth(self, transient_fraction: float = 0.1) -> GrowthReport:
        """Growth over the pre-exit window."""
        cfg = self.config
        end = self.exit_time if self.exit_time is not None else math.inf
        gs = [g for g in self.growth_samples if g.t <= end + 1e-12]
        t = np.array([g.t for g in gs])
        sg = np.array([g.sup_grad for g in gs])
        sh = np.array([g.sup_hess for g in gs])
        side = 2.0 * math.exp(-cfg.epsilon * self.horizon)
        flag = "case1" if sg.max() > 2.0 * cfg.epsilon * math.exp(cfg.epsilon * t[-1]) else "case2"
        if len(t) >= 2 and cfg.epsilon > 0:
            slope, mono = exponential_rate(t, sh, transient_fraction)
            rate = slope / cfg.epsilon
        else:
            rate, mono = math.nan, False
        return GrowthReport(t, sg, sh, flag, rate, side, mono, transient_fraction, [g.where for g in gs])

    def drift(self) -> dict:
        return self.final.ledger.drift()


def _symmetry_probe(stepper: Stepper, state: SimState, count: int = 64) -> dict:
    """Axis values of ``omega`` and the parity defects of ``u`` on the axes."""
    w = state.omega.values
    s = np.linspace(0.0, 0.99 * stepper.radius, count)
    zero = np.zeros_like(s)
    on_x1 = stepper.velocity_probe(state, np.stack([s, zero], axis=1))
    on_x2 = stepper.velocity_probe(state, np.stack([zero, s], axis=1))
    return {
        "omega_axis_max": float(max(np.abs(w[0]).max(), np.abs(w[:, 0]).max())),
        "u2_on_x1_axis": float(np.abs(on_x1[:, 1]).max()),
        "u1_on_x2_axis": float(np.abs(on_x2[:, 0]).max()),
        "u_at_origin": float(np.abs(on_x1[0]).max()),
    }


def _merge_symmetry(a: dict, b: dict) -> dict:
    return {k: max(a.get(k, 0.0), b[k]) for k in b}


def run(config: RunConfig, progress=None, checkpoint_dir=None) -> RunResult:
    """Run the configured experiment; ``progress`` receives one line per sample."""
    t_wall = time.perf_counter()
    cfg = config
    spec = ProfileSpec(cfg.eta, cfg.epsilon, cfg.a_exponent, cfg.blend_width, cfg.radius)
    omega0 = VorticityField(cfg.epsilon * build_profile(spec, cfg.n).values, extent=cfg.radius)
    if cfg.T_horizon is not None:
        horizon = cfg.T_horizon
    elif cfg.epsilon > 0:
        horizon = horizon_for_grid(cfg.epsilon, cfg.a_exponent, cfg.spacing)
    else:
        horizon = 0.0
    tracker = TrajectoryTracker(cfg.epsilon, cfg.a_exponent, horizon,
                                spacing=cfg.spacing if horizon > 0 else None, radius=cfg.radius)
    stepper = Stepper(cfg.n, cfg.radius, cfl=cfg.cfl, workers=cfg.workers, n_boundary=cfg.n_boundary)
    state = SimState(omega0)
    stepper.record(state)
    k0 = state.ledger.kinetic[0]
    side = 2.0 * math.exp(-cfg.epsilon * horizon)
    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None

    def vel(s):
        return lambda p: stepper.velocity_probe(s, p)

    def omega_at(s):
        return lambda p: s.omega.sample(np.atleast_2d(p))[0]

    tracker.start(0.0, vel(state), omega_at(state))
    rows, growth, snaps = [], [], [omega0]
    symmetry = _symmetry_probe(stepper, state)

    def sample(s: SimState, dt: float):
        g = growth_sample(s.omega, side)
        growth.append(g)
        tr = tracker.states[-1]
        row = {**tr.row(), "step": s.step_index, "t": s.time, "dt": dt, "t_phi": tr.t,
               "sup_grad": g.sup_grad, "sup_hess": g.sup_hess,
               "K": s.ledger.kinetic[-1], "omega_inf": s.ledger.sup_omega[-1]}
        rows.append(row)
        if progress is not None:
            progress(f"step {s.step_index:5d}  t {s.time:9.4f}  dt {dt:.4e}  "
                     f"sup|w| {row['omega_inf']:.6e}  K {row['K']:.6e}")

    sample(state, 0.0)
    if ckpt is not None and cfg.checkpoint_interval:
        checkpoint_write(state.omega, ckpt / f"{cfg.run_id}_omega_{0:06d}.ckpt")

    reason = "t_end"
    stop_now = horizon == 0.0 or (cfg.t_end is not None and cfg.t_end == 0.0)
    while not stop_now:
        if cfg.t_end is not None and state.time >= cfg.t_end * (1 - 1e-12):
            reason = "t_end"
            break
        if cfg.t_end is None and tracker.exited:
            reason = "exit"
            break
        if state.step_index >= cfg.max_steps:
            reason = "max_steps"
            log.warning("stopped at max_steps = %d before the exit", cfg.max_steps)
            break
        dt = cfg.dt if cfg.dt is not None else stepper.stable_dt(state)
        if not math.isfinite(dt):
            dt = cfg.t_end - state.time if cfg.t_end is not None else 1.0
        if cfg.t_end is not None:
            dt = min(dt, cfg.t_end - state.time)
        try:
            new = stepper.step(state, dt)
        except NonFiniteError:
            if ckpt is not None:
                checkpoint_write(state.omega, ckpt / f"{cfg.run_id}_omega_last_finite.ckpt")
            raise
        stepper.record(new)
        tracker.advance(dt, vel(state), vel(new), omega_at(new))
        state = new
        k = state.step_index
        last = tracker.exited and cfg.t_end is None
        if k % cfg.sample_interval == 0 or last:
            sample(state, dt)
        if k % cfg.snapshot_interval == 0 or last:
            snaps.append(state.omega)
            symmetry = _merge_symmetry(symmetry, _symmetry_probe(stepper, state))
        if ckpt is not None and cfg.checkpoint_interval and k % cfg.checkpoint_interval == 0:
            checkpoint_write(state.omega, ckpt / f"{cfg.run_id}_omega_{k:06d}.ckpt")
    if rows[-1]["step"] != state.step_index:
        sample(state, rows[-1]["dt"])
        snaps.append(state.omega)
        symmetry = _merge_symmetry(symmetry, _symmetry_probe(stepper, state))
    return RunResult(cfg, horizon, k0, omega0, state, tracker.states, rows, growth, snaps, symmetry,
                     reason, time.perf_counter() - t_wall, stepper)


# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.6g} (limit {self.limit:.6g}) {self.detail}".rstrip()


def trajectory_measurements(result: RunResult) -> dict:
    cfg, T = result.config, result.horizon
    states = result.trajectory
    out = {
        "transported": transported_value_check(states, cfg.epsilon, cfg.a_exponent, T),
        "signs": sign_bounds_check(states, cfg.epsilon, cfg.eta, cfg.a_exponent, T),
        "axis": axis_gradient_check(result.snapshots, cfg.eta),
        "exit_edge": states[-1].exit_edge,
        "exit_time": result.exit_time,
    }
    out["hyperbola"] = hyperbola_drift(states, cfg.epsilon, cfg.a_exponent, T) if len(states) >= 3 else None
    return out


def constants_from_run(result: RunResult, measured: dict | None = None) -> ConstantLedger:
    measured = measured or trajectory_measurements(result)
    cfg = result.config
    led = ConstantLedger()
    note = f"n={cfg.n}, run {cfg.run_id}"
    if cfg.epsilon > 0 and result.k0 > 0:
        led.set("C1", result.k0 / cfg.epsilon**2, note)
    hd = measured["hyperbola"]
    if hd is not None and hd.c2 > 0:
        led.set("C2", hd.c2, note)
    c2 = measured["transported"]["c2"]
    if c2 > 0:
        led.set("c2", c2, note)
    return led


def run_checks(result: RunResult, measured: dict | None = None) -> list[Check]:
    """Conservation, symmetry, trajectory and growth checks on a finished run."""
    cfg = result.config
    m = measured or trajectory_measurements(result)
    drift = result.drift()
    checks = [Check(f"conservation {k} drift", drift[k] <= 0.01, drift[k], 0.01)
              for k in ("Linf", "L1", "L2", "K")]
    sym = result.symmetry
    checks.append(Check("symmetry omega on axes", sym["omega_axis_max"] == 0.0, sym["omega_axis_max"], 0.0))
    vel_defect = max(sym["u2_on_x1_axis"], sym["u1_on_x2_axis"], sym["u_at_origin"])
    checks.append(Check("symmetry velocity parity on axes", vel_defect <= 1e-10, vel_defect, 1e-10))
    checks.append(Check("trajectory exit edge", m["exit_edge"] == "top", float(m["exit_edge"] == "top"), 1.0,
                        f"edge={m['exit_edge']}"))
    hd = m["hyperbola"]
    lim = 0.2 * cfg.epsilon
    if hd is None:
        checks.append(Check("hyperbola drift", False, math.nan, lim, "too few samples"))
    else:
        checks.append(Check("hyperbola drift", hd.sup_rate <= lim and hd.consistent, hd.sup_rate, lim,
                            f"2C2={hd.two_c2:.4g} rms={hd.fitted_bound:.4g}"))
    tv = m["transported"]["max_drift"]
    checks.append(Check("transported value drift", tv <= 0.02, tv, 0.02))
    sg = m["signs"]
    et = sg["exit_time"] if sg["exit_time"] is not None else math.inf
    checks.append(Check("exit time bound", et <= sg["exit_time_bound"], et, sg["exit_time_bound"]))
    ax = m["axis"]["normalized_max"]
    checks.append(Check("axis gradient", ax <= 1e-4, ax, 1e-4))
    gr = result.growth()
    checks.append(Check("growth monotone after transient", gr.monotone_after_transient,
                        float(gr.monotone_after_transient), 1.0))
    checks.append(Check("growth rate / epsilon", gr.fit_rate >= 0.5, gr.fit_rate, 0.5))
    return checks
