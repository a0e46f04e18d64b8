"""Corner-box integral, remainder extraction and the fitted remainder constant.

Near the origin an odd-odd velocity field is compared with

    u_j(x) = (-1)^j (4/pi) (I(x) + B_j(x)) x_j,
    I(x)   = int_{[2x_1, 1] x [2x_2, 1]} y_1 y_2 / |y|^4 omega(y) dy,

where the vorticity is clockwise-positive (see ``fields.ORIENTATION``).
:func:`extract_remainder` inverts this relation for ``B_j`` and
:func:`certify_bs_law` fits the smallest constant ``C_0`` for which the
measured remainders stay below :func:`remainder_bound`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .checkpoint import atomic_write
from .disk_poisson import DiskSpec, DomainError, poisson_solve
from .fields import ORIENTATION, QuarterField, VorticityField, box_sup, derivatives

MAIN_RADIUS = math.sqrt(2.0)
_GAUSS = np.polynomial.legendre.leggauss(4)


def corner_box_closed_form(a: float, b: float) -> float:
    """``int_{[a,1] x [b,1]} y_1 y_2 / |y|^4 dy`` for ``0 <= a, b <= 1`` (not both zero)."""
    if a >= 1.0 or b >= 1.0:
        return 0.0
    return 0.25 * (math.log1p(a * a) - math.log(2.0) - math.log(a * a + b * b) + math.log1p(b * b))


def _axis_panels(lo: float, scale: float, breaks: np.ndarray | None) -> np.ndarray:
    """Panel edges on ``[lo, 1]``, graded so every panel is shorter than 0.3 times its distance scale."""
    edges = [lo, 1.0]
    if breaks is not None:
        edges += [b for b in breaks if lo < b < 1.0]
    edges = np.unique(edges)
    out = [edges[0]]
    floor = max(scale, 1e-12)
    for a, b in zip(edges[:-1], edges[1:]):
        p = a
        while p < b:
            step = 0.3 * max(p, floor)
            q = min(b, p + step)
            if b - q < 0.25 * step:
                q = b
            out.append(q)
            p = q
    return np.asarray(out)


def _gauss_nodes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t, w = _GAUSS
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (t + 1.0)).ravel(), (half * w).ravel()


def main_integral(omega, x) -> float:
    """``int_{Q(2x)} y_1 y_2 / |y|^4 omega(y) dy`` with ``Q(p) = [p_1, 1] x [p_2, 1]``.

    ``omega`` is a :class:`VorticityField` (panels then follow the grid
    lines, so the interpolant is integrated cell by cell) or a callable on
    arrays ``(Y1, Y2)``.  An empty box gives 0.
    """
    x = np.asarray(x, dtype=float)
    a, b = 2.0 * x[0], 2.0 * x[1]
    if a >= 1.0 or b >= 1.0:
        return 0.0
    if a < 0.0 or b < 0.0:
        raise DomainError("the corner must lie in the closed first quadrant")
    corner = math.hypot(a, b)
    if corner == 0.0:
        raise DomainError("the box Q(0) carries a non-integrable singularity")
    if isinstance(omega, QuarterField):
        breaks = omega.nodes
        sample = lambda Y1, Y2: omega.sample(np.stack([Y1, Y2], axis=-1))  # noqa: E731
    else:
        breaks = None
        sample = omega
    y1, w1 = _gauss_nodes(_axis_panels(a, corner, breaks))
    y2, w2 = _gauss_nodes(_axis_panels(b, corner, breaks))
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    r2 = Y1 * Y1 + Y2 * Y2
    vals = Y1 * Y2 / (r2 * r2) * sample(Y1, Y2)
    return float(w1 @ vals @ w2)


@dataclass
class BSRemainder:
    x: tuple[float, float]
    b1: float
    b2: float
    bound1: float = math.nan
    bound2: float = math.nan

    @property
    def within(self) -> bool:
        return bool(abs(self.b1) <= self.bound1 and abs(self.b2) <= self.bound2)


def extract_remainder(u_probe, omega, x, integral: float | None = None) -> BSRemainder:
    """Solve ``u_j = (-1)^j (4/pi) (I + B_j) x_j`` for ``B_1, B_2``."""
    x = np.asarray(x, dtype=float)
    if x[0] <= 0.0 or x[1] <= 0.0:
        raise ZeroDivisionError("remainders need x_1 > 0 and x_2 > 0; use the axis diagnostics")
    u = np.asarray(u_probe, dtype=float)
    I = main_integral(omega, x) if integral is None else integral
    b1 = -0.25 * math.pi * u[0] / x[0] - I
    b2 = 0.25 * math.pi * u[1] / x[1] - I
    return BSRemainder((float(x[0]), float(x[1])), float(b1), float(b2))


def bound_brackets(x, omega_sup: float, grad_sup_local, k0: float) -> tuple[float, float]:
    """The two bounds of :func:`remainder_bound` divided by ``C_0``."""
    x = np.asarray(x, dtype=float)
    g = np.broadcast_to(np.asarray(grad_sup_local, dtype=float), (2,))
    if omega_sup < 0 or k0 < 0 or np.any(g < 0) or np.any(x < 0):
        raise ValueError("norms, energy and coordinates must be nonnegative")
    root = math.sqrt(k0)

    def one(mine, other, grad):
        if omega_sup == 0.0:
            return root
        if mine == 0.0:
            log_term = 0.0 if other == 0.0 else math.inf
        else:
            log_term = math.log1p(other / mine)
        return omega_sup * (1.0 + min(log_term, other * grad / omega_sup)) + root

    # B_1 uses the gradient on [0, 2 x_2]^2, B_2 the one on [0, 2 x_1]^2
    return one(x[0], x[1], g[0]), one(x[1], x[0], g[1])


def remainder_bound(x, omega_sup: float, grad_sup_local, k0: float, c0_const: float) -> tuple[float, float]:
    """``C_0 (|omega_0|_inf (1 + min{log(1 + x_2/x_1), x_2 |grad omega| / |omega_0|_inf}) + sqrt(K_0))``.

    ``grad_sup_local`` is either one number or the pair (sup over
    ``[0, 2x_2]^2``, sup over ``[0, 2x_1]^2``); the second bound swaps the
    roles of ``x_1`` and ``x_2``.
    """
    if not c0_const > 0:
        raise ValueError("C_0 must be positive")
    p1, p2 = bound_brackets(x, omega_sup, grad_sup_local, k0)
    return c0_const * p1, c0_const * p2


@dataclass
class BSReport:
    c0: float
    omega_sup: float
    k0: float
    samples: list = field(default_factory=list)
    resolution: dict = field(default_factory=dict)

    @property
    def all_within(self) -> bool:
        return all(s.within for s in self.samples)

    def margins(self) -> np.ndarray:
        return np.array([[s.bound1 - abs(s.b1), s.bound2 - abs(s.b2)] for s in self.samples])

    def to_json(self, path) -> None:
        doc = {
            "c0": self.c0, "omega_sup": self.omega_sup, "k0": self.k0, "resolution": self.resolution,
            "samples": [dict(asdict(s), within=s.within) for s in self.samples],
        }
        atomic_write(path, json.dumps(doc, indent=1))

    def to_csv(self, path) -> None:
        lines = ["x1,x2,b1,b2,bound1,bound2,within"]
        for s in self.samples:
            lines.append(f"{s.x[0]!r},{s.x[1]!r},{s.b1!r},{s.b2!r},{s.bound1!r},{s.bound2!r},{int(s.within)}")
        atomic_write(path, "\n".join(lines) + "\n")


def quadrant_samples(n: int, radius: float = 0.5, skip: int = 1) -> np.ndarray:
    """``n`` Halton points mapped into the open quarter disk of the given radius."""
    h = qmc.Halton(d=2, scramble=False).random(n + skip)[skip:]
    r = radius * np.sqrt(h[:, 0]) * (1.0 - 1e-9)
    th = 0.5 * math.pi * (0.02 + 0.96 * h[:, 1])
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def main_term_velocity(omega: VorticityField, disk: DiskSpec | None = None):
    """Velocity of the fixed-disk problem on ``B_sqrt2`` for the clockwise-positive ``omega``."""
    disk = disk or DiskSpec(MAIN_RADIUS, 128, 256)
    stream = poisson_solve(omega, disk, omega.time, sign=ORIENTATION)
    return stream.velocity


def certify_bs_law(omega: VorticityField, disk: DiskSpec | None, sample_points, k0: float,
                   omega_sup: float | None = None, velocity=None) -> BSReport:
    """Measure ``B_j`` at each sample, fit the smallest ``C_0`` and fill in the bounds.

    The velocity defaults to the main term on ``B_sqrt2``; pass ``velocity``
    (points -> vectors) to certify another field such as the simulated one.
    ``omega_sup`` defaults to the sup of the given field.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if np.any(pts <= 0.0) or np.any(np.hypot(pts[:, 0], pts[:, 1]) >= 0.5):
        raise DomainError("sample points must lie in the open first-quadrant part of B_1/2")
    if omega_sup is None:
        omega_sup = float(np.abs(omega.values).max())
    vel = velocity if velocity is not None else main_term_velocity(omega, disk)
    u = vel(pts)
    d = derivatives(omega)
    grad = np.hypot(d["1"], d["2"])
    samples, ratios = [], []
    for p, up in zip(pts, u):
        rem = extract_remainder(up, omega, p)
        g = (box_sup(grad, omega, 2 * p[1]), box_sup(grad, omega, 2 * p[0]))
        q1, q2 = bound_brackets(p, omega_sup, g, k0)
        ratios += [abs(rem.b1) / q1 if q1 > 0 else (math.inf if rem.b1 else 0.0),
                   abs(rem.b2) / q2 if q2 > 0 else (math.inf if rem.b2 else 0.0)]
        rem.bound1, rem.bound2 = q1, q2  # rescaled below
        samples.append(rem)
    c0 = float(max(ratios)) if ratios else 0.0
    for s in samples:
        s.bound1 *= c0
        s.bound2 *= c0
    res = {"n": omega.n}
    if velocity is None:
        disk = disk or DiskSpec(MAIN_RADIUS, 128, 256)
        res.update(n_radial=disk.n_radial, n_angular=disk.n_angular)
    return BSReport(c0, omega_sup, k0, samples, res)
