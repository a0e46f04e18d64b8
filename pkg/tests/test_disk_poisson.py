import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capssc.disk_poisson import (DiskSpec, DomainError, QuarterDiskSolver, green_function,
                                 green_gradient, image_point, poisson_solve,
                                 symmetrized_velocity_kernel, velocity_from_stream)
from capssc.fields import ORIENTATION, VorticityField

R = 2.0


def bump(X, Y):
    r2 = X**2 + Y**2
    return X * Y * np.exp(-4 * r2) * np.where(r2 < 3.9, np.exp(-1 / np.maximum(3.9 - r2, 1e-30)), 0)


def disk_points(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    t = 2 * math.pi * rng.random(n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


@pytest.fixture(scope="module")
def rigid():
    return poisson_solve(lambda X, Y: np.ones_like(X), DiskSpec(R, 128, 256))


def test_rigid_rotation(rigid, rng):
    p = disk_points(rng, 1000, R)
    u = velocity_from_stream(rigid, p)
    exact = np.stack([-p[:, 1] / 2, p[:, 0] / 2], axis=1)
    assert np.abs(u - exact).max() <= 1e-6
    assert np.abs(rigid.psi(p) - (np.sum(p * p, 1) - 4) / 4).max() <= 1e-10


def test_zero_source_gives_zero_stream():
    s = poisson_solve(lambda X, Y: np.zeros_like(X), DiskSpec(R, 32, 64))
    assert np.abs(s.velocity(np.array([[0.3, 0.4], [1.0, -1.2]]))).max() == 0.0


def test_green_function_vanishes_on_the_circle(rng):
    y = disk_points(rng, 1000, 0.999 * R)
    t = 2 * math.pi * rng.random(1000)
    x = R * np.stack([np.cos(t), np.sin(t)], axis=1)
    assert np.abs(green_function(x, y, R)).max() <= 1e-10


@given(st.floats(0.01, 0.95), st.floats(0, 2 * math.pi), st.floats(0.01, 0.95), st.floats(0, 2 * math.pi))
def test_green_function_is_symmetric(r1, t1, r2, t2):
    x = R * r1 * np.array([math.cos(t1), math.sin(t1)])
    y = R * r2 * np.array([math.cos(t2), math.sin(t2)])
    if np.linalg.norm(x - y) < 1e-6:
        return
    assert green_function(x, y, R) == pytest.approx(green_function(y, x, R), abs=1e-12)


def test_green_gradient_matches_differences():
    x, y, h = np.array([0.3, -0.5]), np.array([0.9, 0.2]), 1e-6
    num = [(green_function(x + h * e, y, R) - green_function(x - h * e, y, R)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(green_gradient(x, y, R), num, atol=1e-8)


def test_image_point_and_singularities():
    np.testing.assert_allclose(image_point([1.0, 0.0], R), [4.0, 0.0])
    with pytest.raises(DomainError):
        image_point([0.0, 0.0], R)
    with pytest.raises(DomainError):
        green_function([0.5, 0.5], [0.5, 0.5], R)
    with pytest.raises(DomainError):
        symmetrized_velocity_kernel([0.5, 0.5], [0.5, 0.5], R)


def test_symmetrized_kernel_matches_direct_quadrature():
    # U(x) for an odd-odd omega on a coarse tensor grid, two ways
    g, w = np.polynomial.legendre.leggauss(40)
    r = 0.5 * R * (g + 1)
    t = 0.25 * math.pi * (g + 1)
    Rr, Tt = np.meshgrid(r, t, indexing="ij")
    Y = np.stack([Rr * np.cos(Tt), Rr * np.sin(Tt)], axis=-1).reshape(-1, 2)
    W = (np.outer(0.5 * R * w * r, 0.25 * math.pi * w)).ravel()
    om = bump(Y[:, 0], Y[:, 1])
    x = np.array([0.37, 0.21])
    k = symmetrized_velocity_kernel(x[None, :], Y, R)
    fast = x * np.sum(W[:, None] * k * om[:, None], axis=0)
    direct = np.zeros(2)
    for s1 in (1, -1):
        for s2 in (1, -1):
            grad = green_gradient(x[None, :], Y * [s1, s2], R)
            direct += s1 * s2 * np.sum(W[:, None] * om[:, None] * np.stack([-grad[:, 1], grad[:, 0]], -1), axis=0)
    np.testing.assert_allclose(fast, direct, rtol=1e-10, atol=1e-14)


def test_quarter_solver_agrees_with_polar(rng):
    n = 256
    w = VorticityField.from_function(bump, n)
    q = QuarterDiskSolver(n, R).solve(w, ORIENTATION)
    p = poisson_solve(bump, DiskSpec(R, 128, 256), sign=ORIENTATION)
    pts = rng.uniform(0, 1.3, (50, 2))
    assert np.abs(q.velocity(pts) - p.velocity(pts)).max() <= 1e-6
    t = rng.uniform(0, 2 * math.pi, 50)
    ring = R * np.stack([np.cos(t), np.sin(t)], axis=1)
    assert np.abs(q.psi(ring)).max() <= 1e-10
    assert p.laplacian_residual(bump) <= 1e-10


def test_quarter_grid_velocity_matches_point_evaluation():
    n = 128
    w = VorticityField.from_function(bump, n)
    q = QuarterDiskSolver(n, R).solve(w, ORIENTATION)
    u1, u2 = q.velocity_grid()
    i, j = np.array([10, 40, 70]), np.array([50, 20, 33])
    pts = np.stack([w.nodes[i], w.nodes[j]], axis=1)
    v = q.velocity(pts)
    np.testing.assert_allclose(u1.values[i, j], v[:, 0], atol=1e-12)
    np.testing.assert_allclose(u2.values[i, j], v[:, 1], atol=1e-12)


def test_outside_probe_is_rejected():
    s = poisson_solve(lambda X, Y: np.ones_like(X), DiskSpec(R, 32, 64))
    with pytest.raises(DomainError):
        s.velocity(np.array([[2.5, 0.0]]))


def test_disk_spec_validation():
    with pytest.raises(DomainError):
        DiskSpec(-1.0, 32, 64)
    with pytest.raises(DomainError):
        DiskSpec(1.0, 32, 48)
