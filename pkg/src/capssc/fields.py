"""Quarter-grid fields with reflection parity.

A field on the closed first quadrant ``[0, L]^2`` is stored on the nodes
``(i*h, j*h)``, ``i, j = 0..n`` with ``h = L/n``.  Values in the other
quadrants are reconstructed by reflection: an *odd* axis flips the sign,
an *even* axis copies the value.  Vorticity is odd-odd; the velocity
components are (odd, even) and (even, odd).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import bicubic_sample

ODD = -1
EVEN = 1

# Vorticity in the simulation is clockwise-positive: the stream function
# solves Delta psi = ORIENTATION * omega and u = (-d2 psi, d1 psi).  With
# omega >= 0 in the first quadrant the origin is then a hyperbolic point with
# inflow along x1 and outflow along x2.
ORIENTATION = -1.0


class GridError(ValueError):
    """Raised when a field does not fit the grid it is used with."""


def quarter_nodes(n: int, extent: float) -> np.ndarray:
    return np.arange(n + 1) * (extent / n)


def sample_many(fields, points, limit: bool = False) -> np.ndarray:
    """Sample several fields on the same grid at once; returns shape ``(..., F)``."""
    p = np.asarray(points, dtype=float)
    shape = p.shape[:-1]
    p = np.ascontiguousarray(p.reshape(-1, 2))
    first = fields[0]
    for f in fields[1:]:
        if f.values.shape != first.values.shape or f.extent != first.extent:
            raise GridError("fields sampled together must share a grid")
    stack = np.ascontiguousarray(np.stack([f.values for f in fields]))
    parity = np.array([f.parity for f in fields], dtype=float)
    out = bicubic_sample(stack, parity, first.spacing, p, limit)
    return out.reshape(shape + (len(fields),))


@dataclass
class QuarterField:
    """Samples of a scalar on the quarter grid plus its reflection parity."""

    values: np.ndarray
    extent: float = 2.0
    parity: tuple[int, int] = (ODD, ODD)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise GridError(f"quarter grid must be square, got {self.values.shape}")
        if self.values.shape[0] < 5:
            raise GridError("quarter grid needs at least 5 nodes per side")

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    @property
    def nodes(self) -> np.ndarray:
        return quarter_nodes(self.n, self.extent)

    def sample(self, points, limit: bool = False) -> np.ndarray:
        """Bicubic (Keys) value at arbitrary points of shape ``(..., 2)``.

        With ``limit=True`` each value is clipped into the range of the four
        surrounding nodes, so interpolation never creates new extrema.
        Points beyond the square see zeros.
        """
        return sample_many([self], points, limit)[..., 0]

    def full(self) -> np.ndarray:
        """Assemble the field on the whole square ``[-L, L]^2`` (for plotting/tests)."""
        v = self.values
        px, py = self.parity
        top = np.concatenate([px * v[:0:-1], v], axis=0)
        return np.concatenate([py * top[:, :0:-1], top], axis=1)


@dataclass
class VorticityField(QuarterField):
    """Odd-odd vorticity on the quarter grid; axis values are zero by construction."""

    time: float = 0.0
    parity: tuple[int, int] = field(default=(ODD, ODD), init=False)

    def __post_init__(self):
        super().__post_init__()
        self.values[0, :] = 0.0
        self.values[:, 0] = 0.0

    @classmethod
    def from_function(cls, func, n: int, extent: float = 2.0, time: float = 0.0) -> "VorticityField":
        x = quarter_nodes(n, extent)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return cls(func(X, Y), extent=extent, time=time)

    def lp_norms(self, disk_radius: float | None = None) -> dict[str, float]:
        """L^1, L^2 and L^inf norms over the full (reflected) domain.

        Quadrature is the trapezoid rule on the quarter grid times four.
        """
        v = np.abs(self.values)
        w = np.ones(self.n + 1)
        w[0] = w[-1] = 0.5
        W = np.outer(w, w) * self.spacing**2
        if disk_radius is not None:
            x = self.nodes
            W = W * ((x[:, None] ** 2 + x[None, :] ** 2) <= disk_radius**2)
        return {
            "L1": 4.0 * float(np.sum(W * v)),
            "L2": float(np.sqrt(4.0 * np.sum(W * v * v))),
            "Linf": float(v.max()),
        }


def _ghosted(field: QuarterField, g: int = 2) -> np.ndarray:
    """Values padded by ``g`` reflected nodes on the low sides and zeros on the high sides."""
    v = field.values
    px, py = field.parity
    v = np.concatenate([px * v[g:0:-1], v, np.zeros((g, v.shape[1]))], axis=0)
    return np.concatenate([py * v[:, g:0:-1], v, np.zeros((v.shape[0], g))], axis=1)


def derivatives(field: QuarterField) -> dict[str, np.ndarray]:
    """First and second derivatives on the quarter grid by fourth-order central stencils.

    Keys ``"1", "2", "11", "12", "22"``; axis values use the reflection rule,
    so no one-sided stencils are needed there.
    """
    h = field.spacing
    G = _ghosted(field)
    n1 = field.n + 1
    c = slice(2, 2 + n1)

    def sh(di, dj):
        return G[2 + di:2 + di + n1, 2 + dj:2 + dj + n1]

    d1 = (sh(-2, 0) - 8 * sh(-1, 0) + 8 * sh(1, 0) - sh(2, 0)) / (12 * h)
    d2 = (sh(0, -2) - 8 * sh(0, -1) + 8 * sh(0, 1) - sh(0, 2)) / (12 * h)
    d11 = (-sh(-2, 0) + 16 * sh(-1, 0) - 30 * G[c, c] + 16 * sh(1, 0) - sh(2, 0)) / (12 * h * h)
    d22 = (-sh(0, -2) + 16 * sh(0, -1) - 30 * G[c, c] + 16 * sh(0, 1) - sh(0, 2)) / (12 * h * h)
    w = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
    d12 = np.zeros_like(d1)
    for a in range(5):
        for b in range(5):
            if w[a] and w[b]:
                d12 += w[a] * w[b] * sh(a - 2, b - 2)
    d12 /= 144 * h * h
    return {"1": d1, "2": d2, "11": d11, "12": d12, "22": d22}


def box_sup(values: np.ndarray, field: QuarterField, side: float) -> float:
    """Max of ``|values|`` over grid nodes in ``[0, side]^2``."""
    k = min(field.n, int(np.floor(side / field.spacing + 1e-9)))
    return float(np.abs(values[:k + 1, :k + 1]).max())
