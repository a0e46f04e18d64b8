"""How often the linear and squared deficit inequalities fail, by polygon scale and near-circle delta."""

import argparse
import math

import numpy as np

from capssc import geometry as geo


def polygon_scales(rng, count: int):
    print("scale  linear-fail  squared-fail")
    for scale in (0.1, 0.3, 1.0, 3.0, 10.0):
        lin = sq = 0
        for _ in range(count):
            c = geo.PlanarCurve(geo.random_convex_polygon(rng).vertices * scale)
            m = geo.bonnesen_check(c, tol=1e-9)
            lin += not m.holds
            sq += m.squared_margin < -1e-9
        print(f"{scale:5.1f}  {lin:11d}  {sq:12d}")


def near_circles(rng, count: int):
    print("delta    R-rho    9delta/pi  squared-bound  contained")
    for delta in np.geomspace(1e-3, 0.2, count):
        c = geo.annulus_certify(geo.symmetric_perturbed_circle(rng, float(delta), 2048), float(delta))
        print(f"{delta:.4f}  {c.radius_gap:.5f}  {c.gap_bound:.5f}    {c.squared_gap_bound:.5f}        {c.contained}")


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--polygons", type=int, default=200)
    p.add_argument("--curves", type=int, default=12)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    polygon_scales(rng, args.polygons)
    near_circles(rng, args.curves)
    print(f"squared bound at delta = 2 pi / 27: {math.sqrt(8 * math.pi * geo.DELTA_LIMIT + geo.DELTA_LIMIT ** 2) / math.pi:.4f}")
