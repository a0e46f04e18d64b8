import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capssc import harmonic_error as he
from capssc.biot_savart import MAIN_RADIUS
from capssc.disk_poisson import DiskSpec, DomainError, poisson_solve
from capssc.fields import ORIENTATION
from capssc.suites import discrepancy_field, smooth_bump


def quartic_perp(p):
    """``grad-perp`` of ``F = x1 x2 (x1^2 - x2^2)``, i.e. ``(-d2 F, d1 F)``."""
    x, y = p[:, 0], p[:, 1]
    return np.stack([-(x**3 - 3 * x * y * y), 3 * x * x * y - y**3], axis=1)


@pytest.fixture(scope="module")
def main_term():
    return poisson_solve(smooth_bump, DiskSpec(MAIN_RADIUS, 128, 256), sign=ORIENTATION).velocity


def test_main_term_against_itself_is_zero(main_term):
    e = he.build_error_field(main_term, smooth_bump, k0=1.0)
    assert np.abs(e.samples).max() <= 1e-12
    assert he.c1_bound_check(e)[1] <= 1e-9


def test_added_harmonic_gradient_is_recovered(main_term):
    e = he.build_error_field(lambda p: main_term(p) + quartic_perp(p), smooth_bump)
    assert np.abs(e.samples - quartic_perp(e.probes)).max() <= 1e-8
    # |grad F|^2 on B_sqrt2 for F = Im(z^4)/4
    assert e.stream_l2**2 == pytest.approx(he.gradient_l2_squared(np.array([0.0, 0.25])), rel=1e-8)


def test_discrepancy_of_larger_disk_is_harmonic():
    e = discrepancy_field(128)
    assert np.abs(e.samples).max() > 1e-6
    assert e.residuals["divergence"] <= 1e-6 and e.residuals["curl"] <= 1e-6
    assert he.mean_value_residual(e) <= 1e-6


def test_probe_outside_main_disk_is_refused(main_term):
    e = he.build_error_field(main_term, smooth_bump, k0=1.0)
    with pytest.raises(DomainError):
        e([[1.2, 1.2]])


def test_c1_ratio_stable_under_probe_refinement():
    c = np.array([0.0, 1.0]) / math.sqrt(he.gradient_l2_squared(np.array([0.0, 1.0])))
    e = he.error_from_potential(he.harmonic_from_coefficients(c), k0=1.0)
    coarse = he.c1_bound_check(e, n=20)[1]
    fine = he.c1_bound_check(e, n=80)[1]
    assert fine == pytest.approx(coarse, rel=0.02)
    # sup of |grad grad-perp (c z^4)| = 12 |c| sqrt(2) r^2 at r = 1/2
    assert fine == pytest.approx(12 * c[1] * math.sqrt(2) * 0.25, rel=1e-6)


def test_zero_field_and_zero_energy():
    zero = he.error_from_potential(lambda z: np.zeros_like(z), k0=0.0)
    assert he.c1_bound_check(zero) == (0.0, 0.0)
    assert he.odd_pointwise_check(zero) == 0.0
    e = he.error_from_potential(he.harmonic_from_coefficients(np.array([1.0])), k0=0.0)
    with pytest.raises(he.InconsistencyError):
        he.c1_bound_check(e)


def test_pointwise_ratio_and_axis_values():
    e = he.error_from_potential(lambda z: z**3, k0=1.0)  # e = grad-perp of x1 x2 (x1^2 - x2^2)
    on_axis = e.probes[:, 0] == 0
    assert np.abs(e.samples[on_axis, 0]).max() <= 1e-10
    worst = he.odd_pointwise_check(e)
    p = e.probes
    ref = max(np.max(np.abs(quartic_perp(p[p[:, j] >= 1e-4])[:, j]) / p[p[:, j] >= 1e-4, j]) for j in (0, 1))
    assert worst == pytest.approx(ref, rel=1e-12)


def test_even_contamination_is_a_symmetry_violation():
    # Im(i z^2) = x1^2 - x2^2 is even-even: e_1 = 2 x2 does not vanish on the x2-axis
    e = he.error_from_potential(lambda z: 2j * z, k0=1.0)
    with pytest.raises(he.SymmetryError):
        he.odd_pointwise_check(e)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_random_odd_harmonics_are_normalized_and_harmonic(seed):
    c = he.odd_harmonic_coefficients(np.random.default_rng(seed))
    assert he.gradient_l2_squared(c) == pytest.approx(1.0, rel=1e-12)
    e = he.error_from_potential(he.harmonic_from_coefficients(c))
    assert e.stream_l2 == pytest.approx(1.0, rel=1e-6)
    assert he.mean_value_residual(e) <= 1e-6
    c1, ratio = he.c1_bound_check(e)
    assert he.odd_pointwise_check(e) <= ratio * (1 + 1e-6)


def test_main_term_is_orthogonal_to_harmonic_gradients(main_term):
    for c in (np.array([1.0]), np.array([0.0, 0.3, -0.2])):
        e = he.error_from_potential(he.harmonic_from_coefficients(c), k0=1.0)
        assert he.orthogonality_defect(main_term, e.func) <= 1e-6


def test_family_fit_uses_one_constant():
    rng = np.random.default_rng(1)
    fields = [he.error_from_potential(he.harmonic_from_coefficients(he.odd_harmonic_coefficients(rng)))
              for _ in range(5)]
    fit = he.fit_family(fields)
    assert fit.passed
    assert fit.constant == max(fit.c1_ratios + fit.pointwise_ratios)
