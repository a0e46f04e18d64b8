"""Dirichlet Poisson problems on a disk.

Two solvers share the contract ``Delta psi = omega`` in ``B_R``, ``psi = 0``
on ``|x| = R``:

* :class:`PolarDiskSolver` -- Fourier modes in the angle, Chebyshev
  collocation in the radius (one dense two-point boundary value problem per
  mode).  The radial grid is the positive half of a Chebyshev grid on
  ``[-R, R]``, so ``r = 0`` is never a node and each mode ``m`` inherits the
  parity ``(-1)^m`` across the origin.
* :class:`QuarterDiskSolver` -- works directly on the odd-odd quarter grid
  used by the time stepper: a sine-series solve on the square ``[-R, R]^2``
  followed by a harmonic correction ``Im sum b_k (z/R)^{2k}`` that cancels
  the square solution on the circle.

Closed-form pieces (image points, the Green's function, its gradient and the
four-fold symmetrised velocity kernel) live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from ._kernels import harmonic_series
from .fields import QuarterField, VorticityField, quarter_nodes, EVEN, ODD

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """A point or parameter lies outside the domain where a formula is valid."""


# ---------------------------------------------------------------------------
# closed forms


def image_point(y, R: float) -> np.ndarray:
    """Kelvin image ``R^2 y / |y|^2`` of ``y`` with respect to ``|x| = R``."""
    y = np.asarray(y, dtype=float)
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    if np.any(r2 == 0.0):
        raise DomainError("the image of the origin is at infinity")
    return R * R * y / r2


def green_function(x, y, R: float) -> np.ndarray:
    """Dirichlet Green's function of ``B_R`` (``Delta_x G = delta_y``).

    ``G(x, y) = (log|x - y| - log(|y|/R |x - y*|)) / 2pi``, with the limit
    ``log(|x|/R) / 2pi`` at ``y = 0``.  Broadcasts over leading axes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.linalg.norm(x - y, axis=-1)
    if np.any(d == 0.0):
        raise DomainError("Green's function is singular at x = y")
    ry = np.linalg.norm(y, axis=-1)
    rx = np.linalg.norm(x, axis=-1)
    # |y| |x - y*| / R == | |y| x / R - R y / |y| |, finite as y -> 0
    with np.errstate(divide="ignore", invalid="ignore"):
        yhat = np.where(ry[..., None] > 0, y / np.where(ry > 0, ry, 1.0)[..., None], 0.0)
    far = np.linalg.norm(ry[..., None] * x / R - R * yhat, axis=-1)
    far = np.where(ry > 0, far, R)
    out = (np.log(d) - np.log(far)) / TWO_PI
    return np.where(ry > 0, out, np.log(rx / R) / TWO_PI)


def green_gradient(x, y, R: float) -> np.ndarray:
    """Gradient of :func:`green_function` with respect to ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    d2 = np.sum(d * d, axis=-1, keepdims=True)
    if np.any(d2 == 0.0):
        raise DomainError("Green's function is singular at x = y")
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    safe = np.where(r2 > 0, r2, 1.0)
    e = x - R * R * y / safe
    e2 = np.sum(e * e, axis=-1, keepdims=True)
    far = np.where(r2 > 0, e / e2, 0.0)
    return (d / d2 - far) / TWO_PI


def _pair_terms(x1, x2, y1, y2):
    # four-source combinations after odd-odd reflection (see module docs)
    xm = (x1 - y1) ** 2 + (x2 - y2) ** 2  # |x - y|^2
    xp = (x1 + y1) ** 2 + (x2 + y2) ** 2  # |x + y|^2
    xt = (x1 + y1) ** 2 + (x2 - y2) ** 2  # |x - y~|^2, y~ = (-y1, y2)
    xb = (x1 - y1) ** 2 + (x2 + y2) ** 2  # |x - y-|^2, y- = (y1, -y2)
    a = y1 * (x2 - y2) / (xm * xt) - y1 * (x2 + y2) / (xp * xb)
    b = y2 * (x1 - y1) / (xm * xb) - y2 * (x1 + y1) / (xp * xt)
    return a, b


def symmetrized_velocity_kernel(x, y, R: float) -> np.ndarray:
    """Per-unit-vorticity kernel ``(k1, k2)`` of the odd-odd reduced Biot-Savart law.

    For an odd-odd ``omega`` the main term on ``B_R`` satisfies
    ``U_1(x) = x_1 * int_{B_R cap Q_1} k1(x, y) omega(y) dy`` and
    ``U_2(x) = x_2 * int k2(x, y) omega(y) dy``.  Each entry is the sum of
    ``grad-perp G`` over the four reflected sources (divided by ``x_j``),
    written so that no cancellation occurs at small ``x_j``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    y1, y2 = y[..., 0], y[..., 1]
    if np.any((x1 == y1) & (x2 == y2)):
        raise DomainError("kernel is singular at x = y")
    a, b = _pair_terms(x1, x2, y1, y2)
    ys = image_point(y, R)
    a_s, b_s = _pair_terms(x1, x2, ys[..., 0], ys[..., 1])
    k1 = -(2.0 / math.pi) * (a - a_s)
    k2 = (2.0 / math.pi) * (b - b_s)
    return np.stack([k1, k2], axis=-1)


# ---------------------------------------------------------------------------
# polar solver


def _cheb(N: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


@dataclass(frozen=True)
class DiskSpec:
    radius: float
    n_radial: int = 128
    n_angular: int = 256

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("disk radius must be positive")
        if self.n_radial < 16:
            raise DomainError("n_radial must be at least 16")
        m = self.n_angular
        if m < 32 or m & (m - 1):
            raise DomainError("n_angular must be a power of two >= 32")


def _as_source(omega):
    if omega is None:
        return lambda X, Y: np.zeros_like(X)
    if isinstance(omega, QuarterField):
        return lambda X, Y: omega.sample(np.stack([X, Y], axis=-1))
    if callable(omega):
        return omega
    raise TypeError(f"unsupported vorticity source {type(omega)!r}")


class PolarDiskSolver:
    """Fourier-Chebyshev Dirichlet solver on ``B_R``; operators are built once per spec."""

    def __init__(self, disk: DiskSpec):
        self.disk = disk
        nr, M = disk.n_radial, disk.n_angular
        N = 2 * nr + 1
        D, xc = _cheb(N)
        self._D = D
        self._xc = xc
        pos = np.arange(1, nr + 1)
        mirror = N - pos
        self.x = xc[pos]
        self.r = disk.radius * self.x
        self.theta = TWO_PI * np.arange(M) / M
        self.m = np.arange(M // 2 + 1)
        D2 = D @ D
        R2 = disk.radius**2
        ops = []
        for m in self.m:
            s = -1.0 if m % 2 else 1.0
            d1 = D[np.ix_(pos, pos)] + s * D[np.ix_(pos, mirror)]
            d2 = D2[np.ix_(pos, pos)] + s * D2[np.ix_(pos, mirror)]
            L = (d2 + d1 / self.x[:, None]) / R2 - np.diag(m * m / self.r**2)
            ops.append(L)
        self._ops = np.array(ops)
        self._pos = pos
        self._mirror = mirror
        w = (-1.0) ** np.arange(N + 1)
        w[0] *= 0.5
        w[-1] *= 0.5
        self._bary = w

    def grid_points(self) -> np.ndarray:
        """Collocation nodes ``(n_radial, n_angular, 2)`` in Cartesian form."""
        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)

    def transform(self, omega) -> np.ndarray:
        f = _as_source(omega)
        P = self.grid_points()
        vals = f(P[..., 0], P[..., 1])
        return fft.rfft(vals, axis=1) / self.disk.n_angular

    def solve(self, omega, time_tag: float = 0.0, sign: float = 1.0) -> "StreamSolution":
        """Solve ``Delta psi = sign * omega`` with ``psi = 0`` on the circle."""
        rhs = sign * self.transform(omega)  # (nr, M/2+1)
        modes = np.linalg.solve(self._ops, rhs.T[..., None])[..., 0].T
        return StreamSolution(self.disk, modes, time_tag, sign, _solver=self)

    def apply_laplacian(self, modes: np.ndarray) -> np.ndarray:
        return np.einsum("mij,jm->im", self._ops, modes)

    def full_modes(self, modes: np.ndarray) -> np.ndarray:
        N = len(self._xc) - 1
        F = np.zeros((N + 1, modes.shape[1]), dtype=complex)
        sign = np.where(self.m % 2, -1.0, 1.0)
        F[self._pos] = modes
        F[self._mirror] = modes * sign
        return F

    def bary_matrix(self, xq: np.ndarray) -> np.ndarray:
        xc = self._xc
        diff = xq[:, None] - xc[None, :]
        hit = diff == 0.0
        diff[hit] = 1.0
        W = self._bary / diff
        W /= W.sum(axis=1, keepdims=True)
        rows = hit.any(axis=1)
        if rows.any():
            W[rows] = hit[rows].astype(float)
        return W


@dataclass
class StreamSolution:
    """Stream function held as radial profiles of its angular Fourier modes."""

    disk: DiskSpec
    modes: np.ndarray
    time_tag: float = 0.0
    sign: float = 1.0
    _solver: PolarDiskSolver | None = field(default=None, repr=False)

    @property
    def solver(self) -> PolarDiskSolver:
        if self._solver is None:
            self._solver = PolarDiskSolver(self.disk)
        return self._solver

    @property
    def psi_values(self) -> np.ndarray:
        """Stream function on the polar collocation grid."""
        M = self.disk.n_angular
        return fft.irfft(self.modes * M, n=M, axis=1)

    def _evaluate(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        R = self.disk.radius
        r = np.hypot(p[:, 0], p[:, 1])
        if np.any(r > R * (1 + 1e-12)):
            raise DomainError("probe point outside the disk")
        th = np.arctan2(p[:, 1], p[:, 0])
        s = self.solver
        F = s.full_modes(self.modes)
        dF = s._D @ F / R
        B = s.bary_matrix(np.minimum(r / R, 1.0))
        f, df = B @ F, B @ dF
        M = self.disk.n_angular
        wm = np.full(len(s.m), 2.0)
        wm[0] = 1.0
        wm[-1] = 1.0 if M % 2 == 0 else 2.0
        e = np.exp(1j * np.outer(th, s.m)) * wm
        psi = np.real(np.sum(f * e, axis=1))
        pr = np.real(np.sum(df * e, axis=1))
        pth = np.real(np.sum(1j * s.m * f * e, axis=1))
        small = r < 1e-10
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.cos(th) * pr - np.sin(th) * pth / r
            gy = np.sin(th) * pr + np.cos(th) * pth / r
        if small.any():
            # only the m = 1 mode has a nonzero gradient at the origin
            d1 = (s.bary_matrix(np.zeros(1)) @ dF)[0, 1] * 2.0
            gx[small] = d1.real
            gy[small] = -d1.imag
        return psi, np.stack([gx, gy], axis=-1)

    def psi(self, points) -> np.ndarray:
        return self._evaluate(points)[0]

    def gradient(self, points) -> np.ndarray:
        return self._evaluate(points)[1]

    def velocity(self, points) -> np.ndarray:
        g = self.gradient(points)
        return np.stack([-g[:, 1], g[:, 0]], axis=-1)

    def laplacian_residual(self, omega) -> float:
        """Relative l2 mismatch between ``L psi`` and the sampled source modes."""
        s = self.solver
        rhs = self.sign * s.transform(omega)
        lap = s.apply_laplacian(self.modes)
        scale = np.linalg.norm(rhs)
        return float(np.linalg.norm(lap - rhs) / (scale if scale > 0 else 1.0))


_POLAR_CACHE: dict[DiskSpec, PolarDiskSolver] = {}


def polar_solver(disk: DiskSpec) -> PolarDiskSolver:
    if disk not in _POLAR_CACHE:
        _POLAR_CACHE[disk] = PolarDiskSolver(disk)
    return _POLAR_CACHE[disk]


def poisson_solve(omega, disk: DiskSpec, time_tag: float = 0.0, sign: float = 1.0) -> StreamSolution:
    """Dirichlet solve on ``disk`` for a callable or quarter-grid vorticity.

    A :class:`~capssc.fields.VorticityField` must cover the disk: its
    extent has to be at least the disk radius.
    """
    if isinstance(omega, QuarterField) and omega.extent < disk.radius * (1 - 1e-12):
        raise DomainError(
            f"vorticity grid extent {omega.extent} does not cover disk radius {disk.radius}")
    return polar_solver(disk).solve(omega, time_tag, sign)


def velocity_from_stream(psi, points) -> np.ndarray:
    """Velocity ``grad-perp psi = (-d2 psi, d1 psi)`` at points of the closed disk."""
    return psi.velocity(np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# quarter-grid solver


class QuarterDiskSolver:
    """Odd-odd Dirichlet solver on ``B_R`` working on the quarter grid over ``[0, R]^2``."""

    def __init__(self, n: int, radius: float = 2.0, n_boundary: int = 256, workers: int = 1):
        if n < 8:
            raise DomainError("quarter grid too coarse")
        self.n = n
        self.radius = radius
        self.workers = workers
        self.k = np.arange(1, n) * math.pi / radius
        self.eig = -(self.k[:, None] ** 2 + self.k[None, :] ** 2)
        M = n_boundary
        self.n_boundary = M
        th = np.arange(1, M) * math.pi / (2 * M)
        self._bsx = np.sin(np.outer(radius * np.cos(th), self.k))
        self._bsy = np.sin(np.outer(radius * np.sin(th), self.k))
        self.nodes = quarter_nodes(n, radius)

    def solve(self, omega: VorticityField, sign: float = 1.0) -> "QuarterStream":
        """Solve ``Delta psi = sign * omega``; ``sign = -1`` gives clockwise-positive vorticity."""
        if omega.n != self.n or abs(omega.extent - self.radius) > 1e-12:
            raise DomainError(
                f"vorticity grid (n={omega.n}, extent={omega.extent}) does not match "
                f"solver (n={self.n}, radius={self.radius})")
        w = omega.values[1:-1, 1:-1]
        a = fft.dstn(w, type=1, norm="ortho", workers=self.workers)
        psi_hat = sign * a / self.eig
        # psi_s(x, y) = (2/n) sum psi_hat_kl sin(k x) sin(l y)
        trace = -(2.0 / self.n) * np.sum((self._bsx @ psi_hat) * self._bsy, axis=1)
        b = fft.dst(trace, type=1) / self.n_boundary
        big = np.abs(b).max() if b.size else 0.0
        keep = np.nonzero(np.abs(b) > 1e-16 * max(big, 1e-300))[0]
        K = keep[-1] + 1 if keep.size else 0
        return QuarterStream(self, psi_hat, b[:K], omega.time)


@dataclass
class QuarterStream:
    solver: QuarterDiskSolver
    psi_hat: np.ndarray
    harmonic: np.ndarray
    time_tag: float = 0.0
    _on_grid: tuple | None = field(default=None, init=False, repr=False)
    _velocity: tuple | None = field(default=None, init=False, repr=False)

    def _grid_harmonic(self):
        if self._on_grid is None:
            s = self.solver
            X, Y = np.meshgrid(s.nodes, s.nodes, indexing="ij")
            # far outside nodes are never reached by an interpolation stencil
            near = X**2 + Y**2 < (s.radius + 3.0 * s.radius / s.n) ** 2
            him = np.zeros(X.shape)
            dG = np.zeros(X.shape, dtype=complex)
            him[near], dG[near] = self._harmonic(X[near] + 1j * Y[near], clip=True)
            self._on_grid = (him, dG)
        return self._on_grid

    # harmonic part: h = Im P(w), w = (z/R)^2, P(w) = sum_k b_k w^k
    def _harmonic(self, z: np.ndarray, clip: bool):
        z = np.ascontiguousarray(np.asarray(z, dtype=complex).ravel())
        b = np.ascontiguousarray(self.harmonic, dtype=complex)
        return harmonic_series(b, z, self.solver.radius, clip, 1e-10)

    def _sine_grid(self, along_x_cos: bool) -> np.ndarray:
        s = self.solver
        n = s.n
        A = self.psi_hat * (s.k[:, None] if along_x_cos else s.k[None, :])
        cos_axis = 0 if along_x_cos else 1
        sin_axis = 1 - cos_axis
        pad = [(0, 0), (0, 0)]
        pad[cos_axis] = (1, 1)
        C = fft.dct(np.pad(A, pad), type=1, axis=cos_axis, workers=s.workers)
        S = fft.dst(C, type=1, axis=sin_axis, workers=s.workers)
        pad = [(0, 0), (0, 0)]
        pad[sin_axis] = (1, 1)
        return np.pad(S, pad) * (2.0 / n) / 4.0

    def psi_grid(self) -> np.ndarray:
        s = self.solver
        out = np.zeros((s.n + 1, s.n + 1))
        out[1:-1, 1:-1] = fft.idstn(self.psi_hat, type=1, norm="ortho", workers=s.workers)
        return out + self._grid_harmonic()[0]

    def velocity_grid(self) -> tuple[QuarterField, QuarterField]:
        """Velocity components on the quarter grid (with their reflection parities).

        Nodes in a three-cell band outside the disk carry the harmonic
        correction evaluated at the radial projection onto the circle; farther
        nodes get the sine-series part only.
        """
        if self._velocity is None:
            s = self.solver
            dpx = self._sine_grid(True)
            dpy = self._sine_grid(False)
            dG = self._grid_harmonic()[1]
            u1 = -dpy - dG.real
            u2 = dpx + dG.imag
            self._velocity = (QuarterField(u1, s.radius, (ODD, EVEN)),
                              QuarterField(u2, s.radius, (EVEN, ODD)))
        return self._velocity

    def _sine_eval(self, p: np.ndarray):
        s = self.solver
        kx = np.outer(p[:, 0], s.k)
        ky = np.outer(p[:, 1], s.k)
        sx, sy = np.sin(kx), np.sin(ky)
        cx, cy = np.cos(kx) * s.k, np.cos(ky) * s.k
        c = 2.0 / s.n
        A = sx @ self.psi_hat
        psi = c * np.sum(A * sy, axis=1)
        dy = c * np.sum(A * cy, axis=1)
        dx = c * np.sum((cx @ self.psi_hat) * sy, axis=1)
        return psi, dx, dy

    def psi(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        psi, _, _ = self._sine_eval(p)
        return psi + self._harmonic(p[:, 0] + 1j * p[:, 1], clip=False)[0]

    def velocity(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if np.any(np.hypot(p[:, 0], p[:, 1]) > self.solver.radius * (1 + 1e-12)):
            raise DomainError("probe point outside the disk")
        _, dx, dy = self._sine_eval(p)
        _, dG = self._harmonic(p[:, 0] + 1j * p[:, 1], clip=False)
        return np.stack([-dy - dG.real, dx + dG.imag], axis=-1)
