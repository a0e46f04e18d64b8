import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capssc import diagnostics as dg
from capssc.fields import VorticityField

EPS, A, T = 0.1, 5.0, 6.0


def hyperbolic(lam):
    return lambda t, p: np.stack([-lam * p[:, 0], lam * p[:, 1]], axis=1)


def test_threshold_time_examples():
    assert dg.threshold_time(0.1, 0.04) == pytest.approx(46.0517, abs=1e-4)
    for eta in (4.0, 0.0, 1.0):
        with pytest.raises(ValueError):
            dg.threshold_time(0.1, eta)
    with pytest.raises(ValueError):
        dg.threshold_time(0.0, 0.5)


@settings(max_examples=50)
@given(st.floats(1e-3, 1.0), st.floats(1e-6, 0.99))
def test_threshold_time_makes_the_exponential_hit_eta_over_4(eps, eta):
    assert math.exp(-eps * dg.threshold_time(eps, eta)) == pytest.approx(eta / 4, rel=1e-9)


def test_horizon_for_reference_grid():
    h = 2 / 512
    T0 = dg.horizon_for_grid(0.1, 5, h)
    assert math.exp(-0.5 * T0) == pytest.approx(8 * h)
    assert np.allclose(dg.initial_point(0.1, 5, T0), [math.exp(-0.1 * T0), 8 * h])
    with pytest.raises(dg.ResolutionError):
        dg.horizon_for_grid(0.1, 5, 0.2)


def test_resolution_error_names_the_needed_grid():
    with pytest.raises(dg.ResolutionError) as err:
        dg.check_resolvable(0.1, 5, 10.0, 2 / 64)
    need = err.value.required_n
    assert need > 64
    dg.check_resolvable(0.1, 5, 10.0, 2 / need)


def test_frozen_hyperbolic_trajectory_exits_through_the_top():
    lam = 0.3
    states = dg.track_trajectory(hyperbolic(lam), EPS, A, T, 0.05, 100.0)
    last = states[-1]
    assert last.exited and last.exit_edge == "top"
    # Phi_2 = e^{-a eps T} e^{lam t} reaches e^{-eps T} at t = (a - 1) eps T / lam
    assert last.exit_time == pytest.approx((A - 1) * EPS * T / lam, abs=1e-7)
    drift = max(abs(s.log_product - states[0].log_product) for s in states)
    assert drift <= 1e-9
    hd = dg.hyperbola_drift(states, EPS, A, T)
    assert hd.sup_rate <= 1e-9


def test_hyperbola_rate_of_compressible_field():
    states = dg.track_trajectory(lambda t, p: np.stack([-p[:, 0], 2 * p[:, 1]], 1), EPS, A, T, 0.01, 100.0)
    hd = dg.hyperbola_drift(states, EPS)
    assert np.allclose(hd.rates, 1.0, atol=1e-5)
    assert hd.two_c2 == pytest.approx(10.0, rel=1e-4) and hd.consistent


def test_hyperbola_needs_three_samples():
    tr = dg.TrajectoryTracker(EPS, A, T)
    s = tr.start(0.0, lambda p: np.zeros_like(p))
    with pytest.raises(dg.InsufficientDataError):
        dg.hyperbola_drift([s, s], EPS)


def test_tracker_refuses_unresolved_start_and_advance_before_start():
    with pytest.raises(dg.ResolutionError):
        dg.TrajectoryTracker(EPS, A, 20.0, spacing=2 / 64)
    with pytest.raises(RuntimeError):
        dg.TrajectoryTracker(EPS, A, T).advance(0.1, lambda p: p, lambda p: p)


def test_transported_value_and_core_constant():
    # x1 x2 is constant along the hyperbolic flow
    states = dg.track_trajectory(hyperbolic(0.3), EPS, A, T, 0.05, 100.0, omega_at=lambda t, p: p[0] * p[1])
    out = dg.transported_value_check(states, EPS, A, T)
    assert out["max_drift"] <= 1e-9
    z, w = math.exp(-EPS * T), math.exp(-A * EPS * T)
    assert out["c2"] == pytest.approx(math.sin(z) ** 3 * math.sin(w) * math.exp((3 + A) * EPS * T))


def test_sign_bounds_on_strong_hyperbolic_flow():
    eta = 1e-2
    lam = 0.05 * EPS * math.log(1 / eta)  # above the 1/48 threshold
    states = dg.track_trajectory(hyperbolic(lam), EPS, A, T, 0.05, 200.0)
    out = dg.sign_bounds_check(states, EPS, eta, A, T)
    assert not out["violation_times"]
    assert out["max_margin_u1"] == pytest.approx(-0.05) and out["min_margin_u2"] == pytest.approx(0.05)
    assert out["exit_within_bound"]
    weak = dg.track_trajectory(hyperbolic(lam / 10), EPS, A, T, 0.5, 10.0)
    assert dg.sign_bounds_check(weak, EPS, eta, A, T)["violation_times"]


@pytest.fixture(scope="module")
def frozen_snapshots():
    lam = 0.3

    def snap(t):
        return VorticityField.from_function(
            lambda X, Y: np.sin(np.exp(lam * t) * X) ** 3 * np.sin(np.exp(-lam * t) * Y), 512, 5.0, time=t)

    return lam, [snap(t) for t in np.linspace(0.0, 1 / lam, 11)]


def test_frozen_hyperbolic_hessian_grows_at_twice_the_strain(frozen_snapshots):
    lam, snaps = frozen_snapshots
    g = dg.growth_metrics(snaps, lam, 0.0, box_side=4.5)
    assert g.monotone_after_transient
    assert g.fit_rate / 2 == pytest.approx(1.0, rel=0.1)
    assert g.to_dict()["box_side"] == 4.5


def test_growth_box_must_be_resolved():
    w = VorticityField(np.zeros((65, 65)))
    with pytest.raises(dg.ResolutionError):
        dg.growth_metrics([w], EPS, 30.0)


def test_gradient_vanishes_at_the_origin_for_the_core():
    w = VorticityField.from_function(lambda X, Y: np.sin(X) ** 3 * np.sin(Y), 256)
    g, _ = dg.hessian_norm(w)
    assert g[0, 0] == 0.0


def test_exponential_rate_and_monotonicity():
    t = np.linspace(0, 10, 50)
    slope, mono = dg.exponential_rate(t, 3 * np.exp(0.7 * t))
    assert slope == pytest.approx(0.7) and mono
    v = np.exp(0.7 * t)
    v[30] *= 0.5
    assert not dg.exponential_rate(t, v)[1]
    with pytest.raises(dg.InsufficientDataError):
        dg.exponential_rate([0.0], [1.0])


def test_axis_gradient_of_core_is_zero():
    w = VorticityField.from_function(lambda X, Y: np.sin(X) ** 3 * np.sin(Y), 2048, 2.0)
    assert dg.axis_gradient_check([w], 1e-2)["normalized_max"] <= 1e-12
    lin = VorticityField.from_function(lambda X, Y: X * np.sin(Y), 256, 2.0)
    out = dg.axis_gradient_check([lin], 0.5)
    assert out["max_axis_gradient"] == pytest.approx(math.sin(0.25 - 2 / 256), rel=1e-9)


def test_constant_ledger():
    led = dg.ConstantLedger()
    assert led.a_formula_value is None and led.compare_a(5)["consistent"] is None
    led.set("C2", 0.25, "n=512")
    led.set("c2", 1.0)
    assert led.a_formula_value == pytest.approx(5.0)
    assert led.compare_a(5.0)["consistent"]
    assert led.to_dict()["notes"] == {"C2": "n=512"}
    with pytest.raises(ValueError):
        led.set("C0", -1.0)
