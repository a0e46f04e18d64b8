"""Measurements on a running odd-odd flow: the tracked hyperbolic trajectory,
its exit, drift of ``log(Phi_1 Phi_2)``, gradient and Hessian growth near the
origin, the axis gradient, and the constants the run implies.

The tracked point starts at ``Phi(0) = (e^{-eps T}, e^{-a eps T})`` and is
followed until it leaves the box ``[0, e^{-eps T}]^2``.  Velocities come from
the caller as callables ``points -> vectors``; between two simulation steps
the velocity is interpolated linearly in time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .fields import QuarterField, box_sup, derivatives

EDGES = ("top", "right", "bottom", "left", "none")


class ResolutionError(ValueError):
    def __init__(self, message: str, required_n: int | None = None):
        super().__init__(message)
        self.required_n = required_n


class InsufficientDataError(ValueError):
    pass


def threshold_time(epsilon: float, eta: float) -> float:
    """``|log(eta / 4)| / epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return abs(math.log(eta / 4.0)) / epsilon


def horizon_for_grid(epsilon: float, a_exponent: float, spacing: float, factor: float = 8.0) -> float:
    """Largest ``T`` with ``e^{-a eps T} >= factor * spacing``."""
    if factor * spacing >= 1.0:
        raise ResolutionError("grid too coarse for any positive horizon")
    return math.log(1.0 / (factor * spacing)) / (a_exponent * epsilon)


def initial_point(epsilon: float, a_exponent: float, horizon: float) -> np.ndarray:
    return np.array([math.exp(-epsilon * horizon), math.exp(-a_exponent * epsilon * horizon)])


def check_resolvable(epsilon: float, a_exponent: float, horizon: float, spacing: float,
                     radius: float = 2.0) -> None:
    """Require ``h < e^{-a eps T} / 4``; the error names the smallest grid that works."""
    limit = 0.25 * math.exp(-a_exponent * epsilon * horizon)
    if not spacing < limit:
        need = math.floor(radius / limit) + 1
        raise ResolutionError(
            f"spacing {spacing:.4g} does not resolve Phi_2(0) = {4 * limit:.4g}; "
            f"use at least {need} cells per quadrant side", need)


@dataclass
class TrajectoryState:
    phi: np.ndarray
    t: float
    log_product: float
    omega_along: float
    exited: bool = False
    exit_time: float | None = None
    exit_edge: str = "none"
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def row(self) -> dict:
        return {"t": self.t, "phi1": float(self.phi[0]), "phi2": float(self.phi[1]),
                "log_product": self.log_product, "omega_along": self.omega_along,
                "u1": float(self.velocity[0]), "u2": float(self.velocity[1])}


def _state(phi, t, vel, omega_at, **kw) -> TrajectoryState:
    phi = np.asarray(phi, dtype=float)
    lp = math.log(phi[0]) + math.log(phi[1]) if np.all(phi > 0) else -math.inf
    w = float(omega_at(phi)) if omega_at is not None else math.nan
    return TrajectoryState(phi.copy(), float(t), lp, w, velocity=np.asarray(vel, dtype=float), **kw)


def _probe(vel, p):
    return np.asarray(vel(np.atleast_2d(p)), dtype=float).reshape(2)


class TrajectoryTracker:
    """Fourth-order Runge-Kutta for ``Phi' = u(t, Phi)`` synchronised with a stepper.

    Call :meth:`start` once and :meth:`advance` after every accepted step
    with the velocities at both ends of the step.  Once the point leaves the
    box the last state is the crossing point, located by cubic Hermite
    interpolation of the step, and further calls are ignored.
    """

    def __init__(self, epsilon: float, a_exponent: float, horizon: float,
                 spacing: float | None = None, radius: float = 2.0):
        if spacing is not None:
            check_resolvable(epsilon, a_exponent, horizon, spacing, radius)
        self.epsilon = epsilon
        self.a_exponent = a_exponent
        self.horizon = horizon
        self.box = math.exp(-epsilon * horizon)
        self.phi0 = initial_point(epsilon, a_exponent, horizon)
        self.states: list[TrajectoryState] = []

    @property
    def exited(self) -> bool:
        return bool(self.states) and self.states[-1].exited

    def start(self, t0: float, velocity, omega_at=None) -> TrajectoryState:
        self.states = [_state(self.phi0, t0, _probe(velocity, self.phi0), omega_at)]
        return self.states[0]

    def advance(self, dt: float, vel_start, vel_end, omega_at=None) -> TrajectoryState:
        if not self.states:
            raise RuntimeError("call start() first")
        last = self.states[-1]
        if last.exited:
            return last
        p, t0 = last.phi, last.t

        def um(q):
            return 0.5 * (_probe(vel_start, q) + _probe(vel_end, q))

        k1 = last.velocity
        k2 = um(p + 0.5 * dt * k1)
        k3 = um(p + 0.5 * dt * k2)
        k4 = _probe(vel_end, p + dt * k3)
        q = p + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        uq = _probe(vel_end, q)
        edge = self._edge(q)
        if edge == "none":
            st = _state(q, t0 + dt, uq, omega_at)
        else:
            s, x = self._crossing(p, k1, q, uq, dt)
            ux = (1.0 - s) * k1 + s * uq
            st = _state(x, t0 + s * dt, ux, omega_at, exited=True, exit_time=t0 + s * dt,
                        exit_edge=self._edge(x, strict=False) or edge)
        self.states.append(st)
        return st

    def _edge(self, x, strict: bool = True) -> str | None:
        L = self.box
        if strict:
            viol = {"top": x[1] - L, "right": x[0] - L, "bottom": -x[1], "left": -x[0]}
            worst = max(viol, key=viol.get)
            return worst if viol[worst] > 0 else "none"
        d = {"top": abs(x[1] - L), "right": abs(x[0] - L), "bottom": abs(x[1]), "left": abs(x[0])}
        return min(d, key=d.get)

    def _crossing(self, p, up, q, uq, dt):
        """First ``s in (0, 1]`` where the Hermite path leaves the box, and the point there."""
        def path(s):
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            return h00 * p + h10 * dt * up + h01 * q + h11 * dt * uq

        L = self.box
        best = 1.0
        for g in (lambda s: path(s)[1] - L, lambda s: path(s)[0] - L,
                  lambda s: -path(s)[1], lambda s: -path(s)[0]):
            if g(1.0) > 0 and g(0.0) <= 0:
                best = min(best, brentq(g, 0.0, 1.0, xtol=1e-15))
        return best, path(best)


def track_trajectory(velocity, epsilon: float, a_exponent: float, horizon: float, dt: float,
                     t_end: float, omega_at=None, spacing: float | None = None) -> list[TrajectoryState]:
    """Track ``Phi`` through a prescribed field ``velocity(t, points)`` with fixed ``dt``.

    Stops at the exit or at ``t_end``.  ``omega_at(t, point)`` is recorded
    along the way when given.
    """
    tr = TrajectoryTracker(epsilon, a_exponent, horizon, spacing)
    at = (lambda t: (lambda p: omega_at(t, p))) if omega_at is not None else (lambda t: None)
    tr.start(0.0, lambda p: velocity(0.0, p), at(0.0))
    t = 0.0
    while t < t_end - 1e-12 * max(1.0, t_end) and not tr.exited:
        step = min(dt, t_end - t)
        t0, t1 = t, t + step
        tr.advance(step, lambda p, t0=t0: velocity(t0, p), lambda p, t1=t1: velocity(t1, p), at(t1))
        t = t1
    return tr.states


# ---------------------------------------------------------------------------
# checks on a recorded trajectory


def transported_value_check(states: list[TrajectoryState], epsilon: float, a_exponent: float,
                            horizon: float, omega_initial: float | None = None) -> dict:
    """Relative drift of ``omega`` along ``Phi`` and the core-formula constant ``c_2``.

    ``omega_initial`` is ``omega_0(Phi(0))``; it defaults to the first sample.
    ``c_2 = sin^3(z) sin(w) e^{(3 + a) eps T}`` at ``(z, w) = Phi(0)``.
    """
    z, w = initial_point(epsilon, a_exponent, horizon)
    c2 = math.sin(z) ** 3 * math.sin(w) * math.exp((3.0 + a_exponent) * epsilon * horizon)
    vals = np.array([s.omega_along for s in states], dtype=float)
    ref = vals[0] if omega_initial is None else omega_initial
    if ref == 0.0:
        drift = float(np.abs(vals).max()) if len(vals) else 0.0
    else:
        drift = float(np.abs(vals - ref).max() / abs(ref)) if len(vals) else 0.0
    return {"max_drift": drift, "omega_initial": float(ref), "c2": c2}


@dataclass
class HyperbolaDrift:
    times: np.ndarray
    rates: np.ndarray
    sup_rate: float
    fitted_bound: float  # root mean square of the rates
    two_c2: float  # sup_rate / epsilon
    phi1_exit_log: float | None = None
    phi1_exit_bound: float | None = None

    @property
    def c2(self) -> float:
        return 0.5 * self.two_c2

    @property
    def consistent(self) -> bool:
        """No single rate exceeds twice the fitted level."""
        return bool(self.sup_rate <= 2.0 * self.fitted_bound)

    @property
    def phi1_bound_holds(self) -> bool | None:
        if self.phi1_exit_log is None:
            return None
        return bool(self.phi1_exit_log <= self.phi1_exit_bound + 1e-9)


def hyperbola_drift(states: list[TrajectoryState], epsilon: float, a_exponent: float | None = None,
                    horizon: float | None = None) -> HyperbolaDrift:
    """Differentiate ``log(Phi_1 Phi_2)`` in time over the samples up to the exit.

    With ``a_exponent`` and ``horizon`` and an exited trajectory, also
    compares ``log Phi_1(T')`` with ``2 C_2 eps T' - a eps T``, using the
    measured ``2 C_2``.
    """
    if len(states) < 3:
        raise InsufficientDataError("need at least three samples before the exit")
    t = np.array([s.t for s in states])
    lp = np.array([s.log_product for s in states])
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * max(1.0, t[-1])])
    t, lp = t[keep], lp[keep]
    if len(t) < 3:
        raise InsufficientDataError("need at least three distinct sample times")
    rates = np.gradient(lp, t, edge_order=2)
    sup = float(np.abs(rates).max())
    out = HyperbolaDrift(t, rates, sup, float(np.sqrt(np.mean(rates**2))), sup / epsilon)
    last = states[-1]
    if last.exited and a_exponent is not None and horizon is not None:
        out.phi1_exit_log = math.log(last.phi[0])
        out.phi1_exit_bound = out.two_c2 * epsilon * last.t - a_exponent * epsilon * horizon
    return out


def sign_bounds_check(states: list[TrajectoryState], epsilon: float, eta: float, a_exponent: float,
                      horizon: float) -> dict:
    """Margins ``u_1 / (Phi_1 eps log(1/eta))`` and ``u_2 / (Phi_2 eps log(1/eta))`` against ``-/+ 1/48``.

    Also compares the exit time with ``48 (a - 1) T / log(1/eta)``.
    """
    scale = epsilon * math.log(1.0 / eta)
    m1, m2, bad = [], [], []
    for s in states:
        if s.exited:
            continue
        a = s.velocity[0] / (s.phi[0] * scale)
        b = s.velocity[1] / (s.phi[1] * scale)
        m1.append(float(a))
        m2.append(float(b))
        if a > -1.0 / 48.0 or b < 1.0 / 48.0:
            bad.append(s.t)
    bound = 48.0 * (a_exponent - 1.0) * horizon / math.log(1.0 / eta)
    exit_time = states[-1].exit_time if states and states[-1].exited else None
    return {
        "margin_u1": m1, "margin_u2": m2,
        "max_margin_u1": max(m1) if m1 else math.nan,
        "min_margin_u2": min(m2) if m2 else math.nan,
        "violation_times": bad,
        "exit_time": exit_time, "exit_time_bound": bound,
        "exit_within_bound": exit_time is not None and exit_time <= bound,
    }


# ---------------------------------------------------------------------------
# growth of derivatives near the origin


@dataclass
class GrowthReport:
    times: np.ndarray
    sup_grad_box: np.ndarray
    sup_hess: np.ndarray
    case_flag: str
    fit_rate: float  # exponent of the fitted exponential divided by epsilon
    box_side: float
    monotone_after_transient: bool = False
    transient_fraction: float = 0.1
    argmax_hess: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("times", "sup_grad_box", "sup_hess"):
            d[k] = [float(v) for v in d[k]]
        d["argmax_hess"] = [[float(a), float(b)] for a, b in self.argmax_hess]
        return d


def hessian_norm(omega: QuarterField) -> tuple[np.ndarray, np.ndarray]:
    """``(|grad omega|, |Hess omega|_F)`` on the grid."""
    d = derivatives(omega)
    g = np.hypot(d["1"], d["2"])
    H = np.sqrt(d["11"] ** 2 + 2.0 * d["12"] ** 2 + d["22"] ** 2)
    return g, H


def exponential_rate(times, values, transient_fraction: float = 0.1) -> tuple[float, bool]:
    """Least-squares slope of ``log values`` after the transient, and whether the tail is nondecreasing."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 2:
        raise InsufficientDataError("need at least two snapshots")
    start = t[0] + transient_fraction * (t[-1] - t[0])
    m = t >= start
    if m.sum() < 2 or np.any(v[m] <= 0):
        return math.nan, False
    slope = float(np.polyfit(t[m], np.log(v[m]), 1)[0])
    tail = v[m]
    monotone = bool(np.all(np.diff(tail) >= -1e-9 * np.abs(tail[:-1])))
    return slope, monotone


def growth_metrics(snapshots, epsilon: float, horizon: float, box_side: float | None = None,
                   transient_fraction: float = 0.1, min_cells: int = 16) -> GrowthReport:
    """Sups of ``|grad omega|`` and ``|Hess omega|`` on ``[0, 2 e^{-eps T}]^2`` per snapshot.

    Case 1 holds when the gradient sup ever exceeds ``2 eps e^{eps T'}`` with
    ``T'`` the last snapshot time.  ``fit_rate`` is the exponent of the
    Hessian sup fitted after the transient, in units of ``epsilon``.
    """
    snapshots = list(snapshots)
    if not snapshots:
        raise InsufficientDataError("no snapshots")
    side = 2.0 * math.exp(-epsilon * horizon) if box_side is None else box_side
    times, sg, sh, where = [], [], [], []
    for w in snapshots:
        if side < min_cells * w.spacing:
            raise ResolutionError(f"box side {side:.4g} spans fewer than {min_cells} cells of {w.spacing:.4g}",
                                  math.ceil(min_cells * w.extent / side))
        g, H = hessian_norm(w)
        times.append(getattr(w, "time", 0.0))
        sg.append(box_sup(g, w, side))
        sh.append(box_sup(H, w, side))
        k = min(w.n, int(math.floor(side / w.spacing + 1e-9))) + 1
        i, j = np.unravel_index(np.argmax(H[:k, :k]), H[:k, :k].shape)
        where.append((w.nodes[i], w.nodes[j]))
    times, sg, sh = np.array(times), np.array(sg), np.array(sh)
    t_last = times[-1]
    flag = "case1" if sg.max() > 2.0 * epsilon * math.exp(epsilon * t_last) else "case2"
    if len(times) < 2:
        rate, mono = math.nan, False
        flag = "undecided" if flag == "case2" else flag
    else:
        slope, mono = exponential_rate(times, sh, transient_fraction)
        rate = slope / epsilon if epsilon > 0 else math.nan
    return GrowthReport(times, sg, sh, flag, rate, side, mono, transient_fraction, where)


def axis_gradient(omega: QuarterField, half_width: float) -> np.ndarray:
    """``d_1 omega(0, x_2)`` at nodes with ``x_2 < half_width``, one-sided fourth order."""
    v = omega.values
    h = omega.spacing
    m = omega.nodes < half_width
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    return c @ v[:5, m]


def axis_gradient_check(snapshots, eta: float) -> dict:
    """Largest ``|d_1 omega(t, 0, x_2)|`` for ``|x_2| < eta / 2``, relative to ``sup |grad omega|``."""
    worst, raw, at = 0.0, 0.0, None
    for w in snapshots:
        g = axis_gradient(w, 0.5 * eta)
        gsup = float(hessian_norm(w)[0].max())
        val = float(np.abs(g).max()) if g.size else 0.0
        ratio = val / gsup if gsup > 0 else 0.0
        if ratio >= worst:
            worst, raw, at = ratio, val, w.time
    return {"normalized_max": worst, "max_axis_gradient": raw, "time": at}


# ---------------------------------------------------------------------------


@dataclass
class ConstantLedger:
    """Constants measured by the run; ``None`` until measured."""

    C0: float | None = None
    C1: float | None = None
    C2: float | None = None
    c2: float | None = None
    C_e: float | None = None
    notes: dict = field(default_factory=dict)

    def set(self, name: str, value: float, note: str = "") -> None:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite, got {value}")
        setattr(self, name, float(value))
        if note:
            self.notes[name] = note

    @property
    def a_formula_value(self) -> float | None:
        """``4 + 4 C_2 - log c_2``."""
        if self.C2 is None or self.c2 is None:
            return None
        return 4.0 + 4.0 * self.C2 - math.log(self.c2)

    def compare_a(self, configured: float, tolerance: float = 0.1) -> dict:
        """Flag whether the formula value matches the configured ``a`` within a relative tolerance."""
        a = self.a_formula_value
        if a is None:
            return {"a_formula": None, "a_configured": configured, "consistent": None}
        return {"a_formula": a, "a_configured": configured,
                "consistent": abs(a - configured) <= tolerance * configured}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a_formula_value"] = self.a_formula_value
        return d
