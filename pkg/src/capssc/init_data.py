"""Initial data: the odd-odd plateau profile, its stream function and energy.

The profile ``f`` on the first quadrant of ``B_2`` is

* ``sin(x1)^3 sin(x2)`` on the core box ``max(x1, x2) < eta/2``,
* ``1`` on the plateau, i.e. away from the axes, the core box and the circle,
* blended in between by C^2 smoothstep ramps of width ``blend_width``,

and is extended to the other quadrants as an odd function of each
coordinate.  The ramps cost measure; :func:`non_plateau_measure` computes the
area of ``{f != 1}`` in the quadrant and :func:`build_profile` refuses
profiles that exceed the ``eta`` budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .disk_poisson import DiskSpec, StreamSolution, poisson_solve
from .fields import ORIENTATION, VorticityField

DISK_RADIUS = 2.0


class ConstraintError(ValueError):
    """The requested profile violates a construction constraint."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


def smoothstep(t):
    """C^2 monotone ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True)
class ProfileSpec:
    eta: float = 1e-2
    epsilon: float = 0.1
    a_exponent: float = 5.0
    blend_width: float | None = None
    radius: float = DISK_RADIUS

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ConstraintError(f"eta must lie in (0, 1), got {self.eta}")
        if self.epsilon < 0.0:
            raise ConstraintError("epsilon must be nonnegative")
        if not self.a_exponent > 1.0:
            raise ConstraintError("a_exponent must exceed 1")
        if self.blend_width is not None and not self.blend_width > 0.0:
            raise ConstraintError("blend_width must be positive")

    @property
    def width(self) -> float:
        return self.eta / 8.0 if self.blend_width is None else self.blend_width

    @property
    def core_half_width(self) -> float:
        return self.eta / 2.0

    def exit_time_factor(self) -> float:
        """``48 (a - 1) / log(1/eta)``; the trajectory exits before ``T`` only if this is < 1."""
        return 48.0 * (self.a_exponent - 1.0) / math.log(1.0 / self.eta)


def profile(spec: ProfileSpec, x1, x2):
    """Evaluate ``f`` (unscaled, values in ``[-1, 1]``) at arbitrary points."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    s = np.sign(x1) * np.sign(x2)
    a1, a2 = np.abs(x1), np.abs(x2)
    w, c, R = spec.width, spec.core_half_width, spec.radius
    core = np.sin(a1) ** 3 * np.sin(a2)
    chi = (1.0 - smoothstep((a1 - c) / w)) * (1.0 - smoothstep((a2 - c) / w))
    r = np.hypot(a1, a2)
    collar = 1.0 - smoothstep((r - (R - w)) / w)
    plateau = smoothstep(a1 / w) * smoothstep(a2 / w) * collar
    return s * (chi * core + (1.0 - chi) * plateau)


def non_plateau_measure(spec: ProfileSpec) -> float:
    """Area of ``{f != 1}`` inside ``Q_1 cap B_R``, by 1D quadrature of exact sections."""
    w, c, R = spec.width, spec.core_half_width, spec.radius
    box = c + w

    def section(x):
        ymax = math.sqrt(max(R * R - x * x, 0.0))
        if x < w:
            return ymax
        low = box if x < box else w
        yc = math.sqrt(max((R - w) ** 2 - x * x, 0.0))
        return min(low, ymax) + max(0.0, ymax - max(yc, low))

    pts = sorted({w, box, R - w, min(R, math.sqrt(max((R - w) ** 2 - w * w, 0.0)))})
    val, _ = integrate.quad(section, 0.0, R, points=[p for p in pts if 0 < p < R], limit=200)
    return val


def build_profile(spec: ProfileSpec, n: int) -> VorticityField:
    """Unscaled profile ``f`` on the ``(n+1)^2`` quarter grid over ``[0, R]^2``.

    Raises :class:`ConstraintError` when the non-plateau measure exceeds ``eta``.
    """
    measure = non_plateau_measure(spec)
    if measure > spec.eta:
        raise ConstraintError(
            f"blend width {spec.width:g} leaves a non-plateau set of measure "
            f"{measure:.6g} > eta = {spec.eta:g}", achieved=measure)
    return VorticityField.from_function(lambda X, Y: profile(spec, X, Y), n, spec.radius)


def profile_source(spec: ProfileSpec):
    """Callable ``(X, Y) -> epsilon * f`` for solvers that sample on their own nodes."""
    return lambda X, Y: spec.epsilon * profile(spec, X, Y)


def kinetic_energy(velocity, disk: DiskSpec, n_radial: int = 160, n_angular: int = 512,
                   symmetric: bool = False) -> float:
    """``K = 1/2 int_{B_R} |u|^2`` by Gauss-Legendre in ``r`` and the trapezoid rule in ``theta``.

    ``velocity`` maps an ``(N, 2)`` array of points to ``(N, 2)`` vectors.
    With ``symmetric=True`` only the first quadrant is sampled and the
    result is multiplied by four.
    """
    R = disk.radius
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * R * (xg + 1.0)
    wr = 0.5 * R * wg * r
    span = 0.5 * math.pi if symmetric else 2.0 * math.pi
    if symmetric:
        th = (np.arange(n_angular) + 0.5) * span / n_angular
    else:
        th = np.arange(n_angular) * span / n_angular
    Rr, Tt = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([Rr * np.cos(Tt), Rr * np.sin(Tt)], axis=-1).reshape(-1, 2)
    u = np.asarray(velocity(pts)).reshape(len(r), len(th), 2)
    energy = 0.5 * np.sum(wr[:, None] * np.sum(u * u, axis=-1)) * span / n_angular
    return float(4.0 * energy if symmetric else energy)


@dataclass
class InitialData:
    spec: ProfileSpec
    stream: StreamSolution  # Delta psi = ORIENTATION * f, unscaled
    k0: float

    def velocity(self, points) -> np.ndarray:
        """``u_0 = epsilon * (-d2 psi, d1 psi)``."""
        return self.spec.epsilon * self.stream.velocity(points)


def build_initial_velocity(spec: ProfileSpec, disk: DiskSpec | None = None) -> InitialData:
    disk = disk or DiskSpec(DISK_RADIUS, 128, 512)
    if abs(disk.radius - spec.radius) > 1e-12:
        raise ConstraintError("initial data live on the disk of radius 2")
    stream = poisson_solve(lambda X, Y: profile(spec, X, Y), disk, sign=ORIENTATION)
    data = InitialData(spec, stream, 0.0)
    data.k0 = kinetic_energy(data.velocity, disk, symmetric=True)
    return data
