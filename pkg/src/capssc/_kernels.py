"""Compiled inner loops (interpolation and harmonic series evaluation).

All loops are serial so results do not depend on the thread count.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _get(vals, i, j, px, py):
    n1 = vals.shape[0]
    s = 1.0
    if i < 0:
        i = -i
        s *= px
    if j < 0:
        j = -j
        s *= py
    if i >= n1 or j >= n1:
        return 0.0
    return s * vals[i, j]


@numba.njit(cache=True, inline="always")
def _keys(t, w):
    # Keys cubic convolution weights, a = -1/2
    t2 = t * t
    t3 = t2 * t
    w[0] = -0.5 * t3 + t2 - 0.5 * t
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w[3] = 0.5 * t3 - 0.5 * t2


@numba.njit(cache=True)
def bicubic_sample(fields, parity, h, pts, limit):
    """Sample quarter-grid fields at points with parity reflection.

    fields: (F, n+1, n+1); parity: (F, 2) of +-1; pts: (P, 2).
    Returns (P, F).
    """
    F = fields.shape[0]
    P = pts.shape[0]
    out = np.zeros((P, F))
    wx = np.empty(4)
    wy = np.empty(4)
    for p in range(P):
        x = pts[p, 0]
        y = pts[p, 1]
        sx = 1.0 if x >= 0 else -1.0
        sy = 1.0 if y >= 0 else -1.0
        fx = abs(x) / h
        fy = abs(y) / h
        i0 = int(math.floor(fx))
        j0 = int(math.floor(fy))
        _keys(fx - i0, wx)
        _keys(fy - j0, wy)
        for f in range(F):
            px = parity[f, 0]
            py = parity[f, 1]
            vals = fields[f]
            acc = 0.0
            for a in range(4):
                row = 0.0
                for b in range(4):
                    row += wy[b] * _get(vals, i0 - 1 + a, j0 - 1 + b, px, py)
                acc += wx[a] * row
            if limit:
                c00 = _get(vals, i0, j0, px, py)
                c10 = _get(vals, i0 + 1, j0, px, py)
                c01 = _get(vals, i0, j0 + 1, px, py)
                c11 = _get(vals, i0 + 1, j0 + 1, px, py)
                lo = min(min(c00, c10), min(c01, c11))
                hi = max(max(c00, c10), max(c01, c11))
                if acc < lo:
                    acc = lo
                elif acc > hi:
                    acc = hi
            sgn = 1.0
            if px < 0:
                sgn *= sx
            if py < 0:
                sgn *= sy
            out[p, f] = sgn * acc
    return out


@numba.njit(cache=True)
def harmonic_series(b, z, R, clip, tol):
    """Evaluate ``G(z) = P((z/R)^2)``, ``P(w) = sum_k b[k-1] w^k``: returns (Im G, G').

    The tail from term ``k`` on is dropped once ``max_{j>=k} |b_j| |w|^k`` falls
    below ``tol * max |b|``.
    """
    K = b.shape[0]
    P = z.shape[0]
    him = np.zeros(P)
    dG = np.zeros(P, dtype=np.complex128)
    tail = np.zeros(K + 1)
    for k in range(K - 1, -1, -1):
        tail[k] = max(tail[k + 1], abs(b[k]))
    cut = tol * tail[0]
    for p in range(P):
        w = (z[p] / R) ** 2
        aw = abs(w)
        if clip and aw > 1.0:
            w = w / aw
            aw = 1.0
        # smallest Kp with tail[Kp] * aw^(Kp+1) < cut; the bound is monotone in Kp
        lo = 0
        hi = K
        while lo < hi:
            mid = (lo + hi) // 2
            if tail[mid] * aw ** (mid + 1) < cut:
                hi = mid
            else:
                lo = mid + 1
        Kp = lo
        q = 0.0 + 0.0j
        dq = 0.0 + 0.0j
        for k in range(Kp, 0, -1):
            dq = dq * w + q
            q = q * w + b[k - 1]
        him[p] = (w * q).imag
        dG[p] = (q + w * dq) * 2.0 * z[p] / (R * R)
    return him, dG
