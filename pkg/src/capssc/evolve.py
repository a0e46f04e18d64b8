"""Semi-Lagrangian 2D Euler on the fixed disk with odd-odd symmetry.

Vorticity lives on the quarter grid; each step

1. solves for the stream function of ``omega^n`` and samples ``u^n`` on the grid,
2. traces characteristics backward with third-order Runge-Kutta and
   interpolates ``omega^n`` at the departure points (predictor),
3. re-solves with the predicted field and retraces through the velocity
   interpolated linearly in time between ``u^n`` and ``u^*`` (corrector).

Interpolation is Keys cubic convolution with an optional clip into the range of the
surrounding cell, which keeps ``max |omega|`` from growing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .disk_poisson import QuarterDiskSolver, QuarterStream
from .fields import ORIENTATION, QuarterField, VorticityField, sample_many

log = logging.getLogger(__name__)


class CFLError(RuntimeError):
    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NonFiniteError(RuntimeError):
    pass


@dataclass
class ConservationLedger:
    times: list = field(default_factory=list)
    sup_omega: list = field(default_factory=list)
    lp_norms: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)

    def append(self, t: float, norms: dict, kinetic: float) -> None:
        self.times.append(float(t))
        self.sup_omega.append(norms["Linf"])
        self.lp_norms.append(dict(norms))
        self.kinetic.append(float(kinetic))

    def drift(self) -> dict[str, float]:
        """Largest relative deviation from the first entry, per quantity."""
        if not self.times:
            return {}
        out = {}
        for key in ("L1", "L2", "Linf"):
            series = np.array([n[key] for n in self.lp_norms])
            out[key] = _rel_drift(series)
        out["K"] = _rel_drift(np.array(self.kinetic))
        return out


def _rel_drift(series: np.ndarray) -> float:
    ref = series[0]
    if ref == 0.0:
        return float(np.abs(series).max())
    return float(np.abs(series - ref).max() / abs(ref))


@dataclass
class SimState:
    omega: VorticityField
    time: float = 0.0
    step_index: int = 0
    ledger: ConservationLedger = field(default_factory=ConservationLedger)
    stream: QuarterStream | None = field(default=None, repr=False)


class Stepper:
    """Owns the solver and the per-grid constants for one run."""

    def __init__(self, n: int, radius: float = 2.0, cfl: float = 0.5, corrector: bool = True,
                 limiter: bool = True, workers: int = 1, n_boundary: int = 256):
        self.solver = QuarterDiskSolver(n, radius, n_boundary=n_boundary, workers=workers)
        self.n = n
        self.radius = radius
        self.cfl = cfl
        self.corrector = corrector
        self.limiter = limiter
        x = self.solver.nodes
        X, Y = np.meshgrid(x, x, indexing="ij")
        self._inside = X**2 + Y**2 < radius**2
        self._pts = np.stack([X[self._inside], Y[self._inside]], axis=-1)

    @property
    def spacing(self) -> float:
        return self.radius / self.n

    def stream(self, state: SimState) -> QuarterStream:
        if state.stream is None or state.stream.time_tag != state.time:
            state.stream = self.solver.solve(state.omega, ORIENTATION)
        return state.stream

    def energy(self, omega: VorticityField, stream: QuarterStream) -> float:
        """``K = -1/2 int psi Delta psi`` (integration by parts, ``psi = 0`` on the circle)."""
        psi = stream.psi_grid()
        w = np.ones(self.n + 1)
        w[0] = w[-1] = 0.5
        W = np.outer(w, w) * self.spacing**2 * self._inside
        return float(-0.5 * ORIENTATION * 4.0 * np.sum(W * psi * omega.values))

    def record(self, state: SimState) -> None:
        stream = self.stream(state)
        state.ledger.append(state.time, state.omega.lp_norms(self.radius),
                            self.energy(state.omega, stream))

    def max_speed(self, u: tuple[QuarterField, QuarterField]) -> float:
        s2 = u[0].values ** 2 + u[1].values ** 2
        return float(math.sqrt(s2[self._inside].max()))

    def stable_dt(self, state: SimState) -> float:
        u = self.stream(state).velocity_grid()
        vmax = self.max_speed(u)
        return math.inf if vmax == 0 else self.cfl * self.spacing / vmax

    def _trace(self, dt, u_start, u_end):
        # integrate dX/ds = u(X, s) backward from s = dt to s = 0
        def vel(X, frac):
            if u_end is None or frac == 0.0:
                return sample_many(u_start, X)
            if frac == 1.0:
                return sample_many(u_end, X)
            return (1.0 - frac) * sample_many(u_start, X) + frac * sample_many(u_end, X)

        X0 = self._pts
        h = -dt
        k1 = vel(X0, 1.0)
        k2 = vel(X0 + 0.5 * h * k1, 0.5)
        k3 = vel(X0 - h * k1 + 2.0 * h * k2, 0.0)
        return X0 + h * (k1 + 4.0 * k2 + k3) / 6.0

    def _advect(self, omega: VorticityField, departure: np.ndarray, t_new: float) -> VorticityField:
        vals = np.zeros_like(omega.values)
        vals[self._inside] = omega.sample(departure, limit=self.limiter)
        return VorticityField(vals, extent=omega.extent, time=t_new)

    def step(self, state: SimState, dt: float) -> SimState:
        if not dt > 0:
            raise ValueError("dt must be positive")
        u_n = self.stream(state).velocity_grid()
        vmax = self.max_speed(u_n)
        if vmax > 0 and dt * vmax / self.spacing > self.cfl * (1 + 1e-12):
            suggested = self.cfl * self.spacing / vmax
            raise CFLError(f"dt = {dt:g} violates CFL {self.cfl}; use dt <= {suggested:g}", suggested)
        t_new = state.time + dt
        u_end = None
        if self.corrector:
            pred = self._advect(state.omega, self._trace(dt, u_n, None), t_new)
            u_end = self.solver.solve(pred, ORIENTATION).velocity_grid()
            omega = self._advect(state.omega, self._trace(dt, u_n, u_end), t_new)
        else:
            omega = self._advect(state.omega, self._trace(dt, u_n, None), t_new)
        if not np.all(np.isfinite(omega.values)):
            raise NonFiniteError(f"non-finite vorticity after step {state.step_index + 1}")
        return SimState(omega, t_new, state.step_index + 1, state.ledger)

    def velocity_probe(self, state: SimState, points) -> np.ndarray:
        return self.stream(state).velocity(points)
