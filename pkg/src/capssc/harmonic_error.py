"""The boundary-induced velocity ``e = u - U`` near the origin.

``U`` is the velocity of the fixed-disk problem on ``B_sqrt2`` and ``u`` any
odd-odd velocity defined on ``B_sqrt2`` with the same vorticity there, so
``e`` is divergence free, curl free and hence harmonic.  The checks measure
``sup |grad e|`` on ``B_1/2`` and ``|e_j(x)| / |x_j|`` against ``sqrt(K_0)``,
and the constant is fitted rather than assumed.

Derivatives of ``e`` are taken by fourth-order central differences of the
probe function; ``e`` is smooth on ``B_1/2`` so the step can be generous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import MAIN_RADIUS
from .disk_poisson import DiskSpec, DomainError, poisson_solve
from .fields import ORIENTATION
from .init_data import kinetic_energy

PROBE_RADIUS = 0.5


class SymmetryError(ValueError):
    pass


class InconsistencyError(ValueError):
    pass


def probe_lattice(n: int = 24, radius: float = PROBE_RADIUS) -> np.ndarray:
    """Lattice points of the closed quarter of ``B_radius``, axes included."""
    t = np.linspace(0.0, radius, n + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    keep = X**2 + Y**2 <= radius**2 * (1 + 1e-12)
    return np.stack([X[keep], Y[keep]], axis=1)


def _d1(func, pts, axis, s):
    e = np.zeros(2)
    e[axis] = s
    return (func(pts - 2 * e) - 8 * func(pts - e) + 8 * func(pts + e) - func(pts + 2 * e)) / (12 * s)


def _d2(func, pts, axis, s):
    e = np.zeros(2)
    e[axis] = s
    return (-func(pts - 2 * e) + 16 * func(pts - e) - 30 * func(pts) + 16 * func(pts + e)
            - func(pts + 2 * e)) / (12 * s * s)


def jacobian(func, pts, step: float = 1e-3) -> np.ndarray:
    """``J[p, i, j] = d e_i / d x_j`` at each point."""
    return np.stack([_d1(func, pts, 0, step), _d1(func, pts, 1, step)], axis=-1)


@dataclass
class ErrorField:
    func: object  # points (P, 2) -> vectors (P, 2)
    probes: np.ndarray
    samples: np.ndarray
    stream_l2: float  # |grad F|_{L^2(B_sqrt2)} = |e|_{L^2(B_sqrt2)}
    k0: float
    residuals: dict = field(default_factory=dict)

    def __call__(self, pts) -> np.ndarray:
        return self.func(np.atleast_2d(np.asarray(pts, dtype=float)))


def _l2_on_main_disk(func) -> float:
    return math.sqrt(2.0 * kinetic_energy(func, DiskSpec(MAIN_RADIUS, 128, 256), n_radial=96,
                                          n_angular=256, symmetric=True))


def harmonic_residuals(func, probes: np.ndarray, step: float = 8e-2) -> dict[str, float]:
    """Divergence, curl and Laplacian of ``func`` on interior probes, made dimensionless.

    First derivatives are scaled by ``sup |grad func|`` and the Laplacian by
    ``sup |func| / PROBE_RADIUS^2``.  The Laplacian stencil is wide because
    differences of two numerical solutions carry round-off that a narrow
    second difference amplifies.
    """
    J = jacobian(func, probes, step / 20)
    scale_grad = float(np.abs(J).max()) or 1.0
    lap = _d2(func, probes, 0, step) + _d2(func, probes, 1, step)
    scale = float(np.abs(func(probes)).max()) or 1.0
    return {
        "divergence": float(np.abs(J[:, 0, 0] + J[:, 1, 1]).max() / scale_grad),
        "curl": float(np.abs(J[:, 1, 0] - J[:, 0, 1]).max() / scale_grad),
        "laplacian": float(np.abs(lap).max() * PROBE_RADIUS**2 / scale),
    }


def build_error_field(u_full, omega, k0: float | None = None, disk: DiskSpec | None = None,
                      probes: np.ndarray | None = None) -> ErrorField:
    """``e = u_full - U`` with ``U`` from the ``B_sqrt2`` solve of ``omega``.

    ``omega`` is anything :func:`poisson_solve` accepts (``None`` for zero
    vorticity).  ``k0`` defaults to ``|e|^2_{L^2(B_sqrt2)} / 2``, the least
    energy compatible with the field.
    """
    disk = disk or DiskSpec(MAIN_RADIUS, 128, 256)
    U = poisson_solve(omega, disk, sign=ORIENTATION).velocity

    def e(p):
        p = np.atleast_2d(p)
        if np.any(np.hypot(p[:, 0], p[:, 1]) > MAIN_RADIUS * (1 + 1e-12)):
            raise DomainError("error-field probe outside B_sqrt2")
        return np.asarray(u_full(p)) - U(p)

    return _assemble(e, k0, probes)


def _assemble(e, k0, probes) -> ErrorField:
    probes = probe_lattice() if probes is None else np.asarray(probes, dtype=float)
    l2 = _l2_on_main_disk(e)
    if k0 is None:
        k0 = 0.5 * l2 * l2
    inner = probes[np.hypot(probes[:, 0], probes[:, 1]) < 0.45]
    inner = inner[(inner[:, 0] > 0.05) & (inner[:, 1] > 0.05)]
    res = harmonic_residuals(e, inner) if len(inner) else {}
    return ErrorField(e, probes, e(probes), l2, float(k0), res)


def error_from_potential(dP, k0: float | None = None, probes=None) -> ErrorField:
    """``e = grad-perp Im P`` for an analytic ``P`` given through ``P'`` (complex array -> complex)."""

    def e(p):
        p = np.atleast_2d(p)
        d = dP(p[:, 0] + 1j * p[:, 1])
        return np.stack([-d.real, d.imag], axis=-1)

    return _assemble(e, k0, probes)


def c1_bound_check(e: ErrorField, n: int = 40, step: float = 1e-3) -> tuple[float, float]:
    """``(sup_{B_1/2} |grad e|, that sup / sqrt(k0))``; ``|.|`` is the Frobenius norm."""
    pts = probe_lattice(n)
    # keep the difference stencil inside B_sqrt2
    J = jacobian(e.func, pts, step)
    measured = float(np.sqrt(np.sum(J * J, axis=(1, 2))).max())
    if e.k0 == 0.0:
        if measured > 1e-12:
            raise InconsistencyError("nonzero error field with zero energy")
        return measured, 0.0
    return measured, measured / math.sqrt(e.k0)


def odd_pointwise_check(e: ErrorField, min_offset: float = 1e-4, tol: float = 1e-8) -> float:
    """Worst ``|e_j(x)| / (sqrt(k0) |x_j|)`` over probes; axis values must vanish."""
    p, s = e.probes, e.samples
    scale = max(1.0, float(np.abs(s).max()))
    on_x2_axis = p[:, 0] == 0.0
    on_x1_axis = p[:, 1] == 0.0
    defect = max(np.abs(s[on_x2_axis, 0]).max(initial=0.0), np.abs(s[on_x1_axis, 1]).max(initial=0.0))
    if defect > tol * scale:
        raise SymmetryError(f"e_1 on the x2-axis or e_2 on the x1-axis is {defect:.3g}, not 0")
    if e.k0 == 0.0:
        return 0.0
    root = math.sqrt(e.k0)
    worst = 0.0
    for j in (0, 1):
        m = np.abs(p[:, j]) >= min_offset
        if m.any():
            worst = max(worst, float(np.max(np.abs(s[m, j]) / (root * np.abs(p[m, j])))))
    return worst


def mean_value_residual(e: ErrorField, radius: float = 0.05, n_circle: int = 64) -> float:
    """Max over interior probes of ``|e(x) - mean of e on the circle of given radius|``, relative to ``sup |e|``."""
    p = e.probes[np.hypot(e.probes[:, 0], e.probes[:, 1]) <= PROBE_RADIUS - radius]
    th = 2 * math.pi * np.arange(n_circle) / n_circle
    ring = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    avg = np.mean([e.func(p + r) for r in ring], axis=0)
    scale = float(np.abs(e.samples).max()) or 1.0
    return float(np.abs(avg - e.func(p)).max() / scale)


def orthogonality_defect(U, e, radius: float = MAIN_RADIUS) -> float:
    """``|int U . e| / (|U| |e|)`` over ``B_radius`` (polar Gauss-trapezoid quadrature)."""
    xg, wg = np.polynomial.legendre.leggauss(96)
    r = 0.5 * radius * (xg + 1.0)
    wr = 0.5 * radius * wg * r
    th = 2 * math.pi * np.arange(256) / 256
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
    W = (wr[:, None] * np.full(len(th), 2 * math.pi / len(th))[None, :]).ravel()
    a, b = np.asarray(U(pts)), np.asarray(e(pts))
    inner = np.sum(W * np.sum(a * b, axis=1))
    na = math.sqrt(np.sum(W * np.sum(a * a, axis=1)))
    nb = math.sqrt(np.sum(W * np.sum(b * b, axis=1)))
    return float(abs(inner) / (na * nb)) if na > 0 and nb > 0 else 0.0


# ---------------------------------------------------------------------------
# synthetic odd-odd harmonic family


def odd_harmonic_coefficients(rng: np.random.Generator, n_modes: int = 8, radius: float = MAIN_RADIUS):
    """Coefficients of ``F = Im sum_k c_k z^{2k}``, odd in both coordinates, with ``|grad F|_{L^2(B_R)} = 1``.

    Random boundary data ``sum_k a_k sin(2k theta)`` on ``|x| = R`` extend
    harmonically to ``sum_k a_k (r/R)^{2k} sin(2k theta)``.
    """
    k = np.arange(1, n_modes + 1)
    a = rng.normal(size=n_modes) / k
    c = a / radius ** (2 * k)
    norm2 = np.sum(math.pi * 2 * k * c**2 * radius ** (4 * k))
    return c / math.sqrt(norm2)


def harmonic_from_coefficients(c: np.ndarray):
    """``P'`` for ``P(z) = sum_k c_k z^{2k}``."""
    k = np.arange(1, len(c) + 1)

    def dP(z):
        z = np.asarray(z, dtype=complex)
        return np.sum(c * 2 * k * z[..., None] ** (2 * k - 1), axis=-1)

    return dP


def gradient_l2_squared(c: np.ndarray, radius: float = MAIN_RADIUS) -> float:
    """``|grad Im sum c_k z^{2k}|^2_{L^2(B_R)} = sum pi n c_n^2 R^{2n}`` with ``n = 2k``."""
    n = 2 * np.arange(1, len(c) + 1)
    return float(np.sum(math.pi * n * c**2 * radius ** (2 * n)))


@dataclass
class FamilyFit:
    constant: float
    c1_ratios: list
    pointwise_ratios: list
    mean_value: list
    passed: bool


def fit_family(fields: list[ErrorField]) -> FamilyFit:
    """One constant for both bounds over all fields: the max of every measured ratio."""
    c1 = [c1_bound_check(e)[1] for e in fields]
    pw = [odd_pointwise_check(e) for e in fields]
    mv = [mean_value_residual(e) for e in fields]
    C = max(c1 + pw) if fields else 0.0
    # |e_j(x)| <= |x_j| sup |d_j e_j| on the quarter disk, so each pointwise
    # ratio must sit below its own gradient ratio
    consistent = all(p <= c * (1 + 1e-6) + 1e-12 for p, c in zip(pw, c1))
    ok = consistent and all(m <= 1e-6 for m in mv)
    return FamilyFit(C, c1, pw, mv, ok)
