"""Metrics of closed polygonal curves and the annulus confinement certificate.

Polygons stand in for smooth Jordan curves.  Every inequality check carries
an explicit absolute tolerance, reported alongside the result.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .checkpoint import atomic_write

DEFAULT_TOL = 1e-6


class CurveError(ValueError):
    """The vertex loop is not a simple, positively oriented polygon."""


class PreconditionError(ValueError):
    pass


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _find_crossing(v: np.ndarray, block: int = 256):
    """Return a pair of non-adjacent edges that touch or cross, or None."""
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    d = b - a
    idx = np.arange(n)
    for start in range(0, n, block):
        i = idx[start:start + block, None]
        j = idx[None, :]
        # each unordered pair once; skip identical and adjacent edges
        mask = (j > i) & (j != i + 1) & ~((i == 0) & (j == n - 1))
        if not mask.any():
            continue
        ai, di = a[start:start + block, None, :], d[start:start + block, None, :]
        aj, dj = a[None, :, :], d[None, :, :]
        o1 = _cross(di[..., 0], di[..., 1], aj[..., 0] - ai[..., 0], aj[..., 1] - ai[..., 1])
        o2 = _cross(di[..., 0], di[..., 1], aj[..., 0] + dj[..., 0] - ai[..., 0],
                    aj[..., 1] + dj[..., 1] - ai[..., 1])
        o3 = _cross(dj[..., 0], dj[..., 1], ai[..., 0] - aj[..., 0], ai[..., 1] - aj[..., 1])
        o4 = _cross(dj[..., 0], dj[..., 1], ai[..., 0] + di[..., 0] - aj[..., 0],
                    ai[..., 1] + di[..., 1] - aj[..., 1])
        hit = (o1 * o2 <= 0) & (o3 * o4 <= 0)
        # collinear edges only count if their projections overlap
        col = (o1 == 0) & (o2 == 0)
        if col.any():
            t0 = np.einsum("...k,...k", aj - ai, di)
            t1 = np.einsum("...k,...k", aj + dj - ai, di)
            dd = np.einsum("...k,...k", di, di)
            overlap = (np.maximum(t0, t1) >= 0) & (np.minimum(t0, t1) <= dd)
            hit = np.where(col, overlap, hit)
        hit &= mask
        if hit.any():
            ii, jj = np.argwhere(hit)[0]
            return int(ii + start), int(jj)
    return None


@dataclass(frozen=True)
class PlanarCurve:
    """Closed simple polygon with counter-clockwise vertex order."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise CurveError("a closed curve needs at least 3 vertices given as (x, y) rows")
        if not np.all(np.isfinite(v)):
            raise CurveError("vertices must be finite")
        if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
            raise CurveError("consecutive vertices must be distinct")
        if _signed_area(v) <= 0:
            raise CurveError("vertices must be ordered counter-clockwise")
        pair = _find_crossing(v)
        if pair is not None:
            raise CurveError(f"edges {pair[0]} and {pair[1]} intersect")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points) -> "PlanarCurve":
        """Build a curve, reversing the order if the points run clockwise."""
        v = np.asarray(points, dtype=float)
        if v.ndim == 2 and len(v) >= 3 and _signed_area(v) < 0:
            v = v[::-1]
        return cls(v)

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def is_convex(self) -> bool:
        a, b = self.edges
        d = b - a
        turn = _cross(d[:, 0], d[:, 1], np.roll(d[:, 0], -1), np.roll(d[:, 1], -1))
        return bool(np.all(turn >= -1e-14 * np.max(np.abs(d)) ** 2))

    def contains(self, points) -> np.ndarray:
        """Even-odd test; points exactly on the boundary may go either way."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a, b = self.edges
        inside = np.zeros(len(p), dtype=bool)
        for s in range(0, len(p), 4096):
            x = p[s:s + 4096, 0:1]
            y = p[s:s + 4096, 1:2]
            straddle = (a[None, :, 1] > y) != (b[None, :, 1] > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = a[None, :, 0] + (y - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                    b[None, :, 1] - a[None, :, 1])
            inside[s:s + 4096] = (np.count_nonzero(straddle & (x < xc), axis=1) % 2) == 1
        return inside

    def boundary_distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the polygon boundary."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a, b = self.edges
        d = b - a
        dd = np.einsum("ij,ij->i", d, d)
        out = np.empty(len(p))
        chunk = max(1, 2_000_000 // len(a))
        for s in range(0, len(p), chunk):
            q = p[s:s + chunk, None, :] - a[None, :, :]
            t = np.clip(np.einsum("pij,ij->pi", q, d) / dd, 0.0, 1.0)
            r = q - t[..., None] * d[None, :, :]
            out[s:s + chunk] = np.sqrt(np.min(np.einsum("pij,pij->pi", r, r), axis=1))
        return out

    def densified(self, per_edge: int) -> np.ndarray:
        """Vertices plus ``per_edge - 1`` evenly spaced points inside every edge."""
        a, b = self.edges
        t = np.arange(per_edge) / per_edge
        return (a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)


def curve_length(curve: PlanarCurve) -> float:
    a, b = curve.edges
    return float(np.sum(np.hypot(*(b - a).T)))


def enclosed_area(curve: PlanarCurve) -> float:
    return _signed_area(curve.vertices)


# ---------------------------------------------------------------------------
# smallest enclosing circle


def _circle_two(p, q):
    c = 0.5 * (p + q)
    return c, 0.5 * math.hypot(*(p - q))


def _circle_three(p, q, r):
    ax, ay = q - p
    bx, by = r - p
    d = 2.0 * (ax * by - ay * bx)
    if d == 0.0:
        # collinear: the widest pair decides
        best = max((_circle_two(p, q), _circle_two(p, r), _circle_two(q, r)), key=lambda t: t[1])
        return best
    a2, b2 = ax * ax + ay * ay, bx * bx + by * by
    ux = (by * a2 - ay * b2) / d
    uy = (ax * b2 - bx * a2) / d
    return p + np.array([ux, uy]), math.hypot(ux, uy)


def _inside(c, r, p, tol):
    return math.hypot(*(p - c)) <= r * (1.0 + tol) + tol


def circumradius(curve: PlanarCurve, seed: int = 0) -> tuple[float, np.ndarray]:
    """Smallest enclosing circle of the vertices (randomized incremental, expected O(n))."""
    pts = np.unique(curve.vertices, axis=0)
    pts = pts[np.random.default_rng(seed).permutation(len(pts))]
    tol = 1e-14
    c, r = pts[0].copy(), 0.0
    for i in range(1, len(pts)):
        if _inside(c, r, pts[i], tol):
            continue
        c, r = pts[i].copy(), 0.0
        for j in range(i):
            if _inside(c, r, pts[j], tol):
                continue
            c, r = _circle_two(pts[i], pts[j])
            for k in range(j):
                if not _inside(c, r, pts[k], tol):
                    c, r = _circle_three(pts[i], pts[j], pts[k])
    # tighten: the radius is the actual farthest vertex from the center found
    r = float(np.max(np.hypot(*(pts - c).T)))
    return r, np.asarray(c, dtype=float)


# ---------------------------------------------------------------------------
# largest inscribed circle


def _chebyshev_center(curve: PlanarCurve) -> tuple[float, np.ndarray]:
    a, b = curve.edges
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]  # outward for CCW
    offset = np.einsum("ij,ij->i", normal, a)
    A = np.hstack([normal, np.ones((len(a), 1))])
    res = optimize.linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=offset,
                           bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0:
        raise CurveError(f"inscribed-circle program failed: {res.message}")
    return float(res.x[2]), res.x[:2].copy()


def inradius(curve: PlanarCurve, pitch: float | None = None, refine: int = 8) -> tuple[float, np.ndarray]:
    """Largest inscribed circle: radius and center.

    Convex polygons are solved exactly as a linear program.  Otherwise the
    distance to the boundary is maximized over an interior lattice of the
    given pitch (default: 1/200 of the bounding box) and the best ``refine``
    lattice points are polished by a local search; without the polish the
    radius is accurate to within ``pitch``.
    """
    if curve.is_convex():
        return _chebyshev_center(curve)
    v = curve.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    if pitch is None:
        pitch = float(np.max(hi - lo)) / 200.0
    xs = np.arange(lo[0] + 0.5 * pitch, hi[0], pitch)
    ys = np.arange(lo[1] + 0.5 * pitch, hi[1], pitch)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    lattice = np.stack([X.ravel(), Y.ravel()], axis=1)
    lattice = lattice[curve.contains(lattice)]
    if len(lattice) == 0:
        raise CurveError(f"no interior lattice point at pitch {pitch:g}; use a finer pitch")
    dist = curve.boundary_distance(lattice)
    order = np.argsort(dist)[::-1][:refine]
    best_r, best_c = float(dist[order[0]]), lattice[order[0]].copy()

    def neg(p):
        if not curve.contains(p[None, :])[0]:
            return 0.0
        return -curve.boundary_distance(p[None, :])[0]

    for k in order:
        res = optimize.minimize(neg, lattice[k], method="Nelder-Mead",
                                options={"xatol": 1e-12 * max(1.0, pitch), "fatol": 1e-14,
                                         "initial_simplex": lattice[k] + pitch * np.array(
                                             [[0, 0], [0.5, 0], [0, 0.5]])})
        if -res.fun > best_r:
            best_r, best_c = float(-res.fun), res.x.copy()
    return best_r, best_c


# ---------------------------------------------------------------------------
# isoperimetric deficit


@dataclass(frozen=True)
class CurveMetrics:
    length: float
    area: float
    circumradius: float
    inradius: float
    deficit: float
    bonnesen_rhs: float  # pi^2 (R - rho)
    holds: bool
    tol: float

    @property
    def margin(self) -> float:
        return self.deficit - self.bonnesen_rhs

    @property
    def squared_rhs(self) -> float:
        """``pi^2 (R - rho)^2``, the scale-invariant form of the bound."""
        return math.pi**2 * (self.circumradius - self.inradius) ** 2

    @property
    def squared_margin(self) -> float:
        return self.deficit - self.squared_rhs


def bonnesen_check(curve: PlanarCurve, tol: float = DEFAULT_TOL) -> CurveMetrics:
    """Compare ``L^2 - 4 pi A`` with ``pi^2 (R - rho)``.

    The right-hand side is linear in the scale while the deficit is
    quadratic, so the comparison fails for small enough copies of any
    non-circular curve; :attr:`CurveMetrics.squared_margin` gives the
    scale-invariant version.
    """
    L = curve_length(curve)
    A = enclosed_area(curve)
    R, _ = circumradius(curve)
    rho, _ = inradius(curve)
    deficit = L * L - 4.0 * math.pi * A
    rhs = math.pi**2 * (R - rho)
    return CurveMetrics(L, A, R, rho, deficit, rhs, deficit >= rhs - tol, tol)


@dataclass(frozen=True)
class AnnulusCertificate:
    delta: float
    inner_radius: float
    outer_radius: float
    contained: bool
    radius_gap: float  # R - rho of the curve
    gap_bound: float  # 9 delta / pi
    min_vertex_radius: float
    max_vertex_radius: float

    @property
    def gap_ok(self) -> bool:
        return self.radius_gap < self.gap_bound

    @property
    def squared_gap_bound(self) -> float:
        """``R - rho`` allowed by the squared deficit inequality: ``sqrt(8 pi delta + delta^2) / pi``."""
        return math.sqrt(8.0 * math.pi * self.delta + self.delta**2) / math.pi


ANNULUS_INNER = 27.0 / math.pi
ANNULUS_OUTER = 9.0 / math.pi
DELTA_LIMIT = 2.0 * math.pi / 27.0


def annulus_certify(curve: PlanarCurve, delta: float, base_radius: float = 2.0) -> AnnulusCertificate:
    """Check that every vertex lies in ``[2 - 27 delta/pi, 2 + 9 delta/pi]`` (radii about the origin)."""
    if not 0.0 < delta < DELTA_LIMIT:
        raise PreconditionError(f"delta must lie in (0, 2 pi/27), got {delta}")
    inner = base_radius - ANNULUS_INNER * delta
    outer = base_radius + ANNULUS_OUTER * delta
    r = np.hypot(*curve.vertices.T)
    R, _ = circumradius(curve)
    rho, _ = inradius(curve)
    return AnnulusCertificate(delta, inner, outer, bool(np.all((r >= inner) & (r <= outer))),
                              R - rho, ANNULUS_OUTER * delta, float(r.min()), float(r.max()))


def reflective_symmetry_defect(curve: PlanarCurve, per_edge: int = 4) -> float:
    """Hausdorff distance between the curve and its mirror images in both axes (the larger one).

    Edges are sampled at ``per_edge`` points, so the result is exact for
    symmetric vertex sets and accurate to the sampling otherwise.
    """
    pts = curve.densified(per_edge)
    worst = 0.0
    for flip in (np.array([-1.0, 1.0]), np.array([1.0, -1.0])):
        mirror = PlanarCurve.from_points(curve.vertices * flip)
        d1 = mirror.boundary_distance(pts).max()
        d2 = curve.boundary_distance(pts * flip).max()
        worst = max(worst, float(d1), float(d2))
    return worst


# ---------------------------------------------------------------------------
# generators and CSV


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> PlanarCurve:
    th = phase + 2.0 * math.pi * np.arange(n) / n
    return PlanarCurve(np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1))


def random_convex_polygon(rng: np.random.Generator, n_points: int = 12) -> PlanarCurve:
    """Convex hull of random points in the unit square, affinely stretched."""
    from scipy.spatial import ConvexHull

    while True:
        p = rng.random((n_points, 2)) * rng.uniform(0.2, 3.0, size=2)
        try:
            hull = ConvexHull(p)
        except Exception:  # degenerate sample
            continue
        return PlanarCurve(p[hull.vertices])  # qhull lists 2D hull vertices counter-clockwise


def symmetric_perturbed_circle(rng: np.random.Generator, delta: float, n_vertices: int = 512,
                               area: float = 4.0 * math.pi, modes: int = 4) -> PlanarCurve:
    """Curve symmetric in both axes with the given area and length at most ``2 sqrt(pi A) + delta``.

    The radius is ``1 + s * sum_k c_k cos(2k theta)``; the amplitude ``s`` is
    bisected so that the length of the area-normalized polygon exceeds the
    circle's by a random fraction of ``delta``.
    """
    th = 2.0 * math.pi * np.arange(n_vertices) / n_vertices
    c = rng.normal(size=modes) / (1.0 + np.arange(modes)) ** 2
    shape = np.cos(np.outer(th, 2 * np.arange(1, modes + 1))) @ c

    def polygon(s):
        r = 1.0 + s * shape
        v = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        return v * math.sqrt(area / _signed_area(v))

    def excess(s):
        v = polygon(s)
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    circle = 2.0 * math.sqrt(math.pi * area)
    target = circle + delta * rng.uniform(0.05, 1.0)
    if excess(0.0) >= target:
        raise PreconditionError(f"{n_vertices} vertices cannot resolve a length excess of {delta:g}")
    hi = 1.0 / max(np.abs(shape).max(), 1e-12) * 0.5
    if excess(hi) < target:
        return PlanarCurve(polygon(hi))
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if excess(mid) < target:
            lo = mid
        else:
            hi = mid
    return PlanarCurve(polygon(lo))


def write_curve_csv(curve: PlanarCurve, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in curve.vertices:
        w.writerow([repr(float(x)), repr(float(y))])
    atomic_write(path, buf.getvalue())


def read_curve_csv(path) -> PlanarCurve:
    rows = []
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "x":
                continue
            rows.append((float(row[0]), float(row[1])))
    return PlanarCurve(np.array(rows))
