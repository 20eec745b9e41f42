import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditsim import CoefficientDrifter, ConfigError, DrifterConfig
from banditsim.drift import blend_fraction


def make_drifter(seed=0, **kwargs):
    config = DrifterConfig(seed=seed, **kwargs)
    base = np.random.default_rng(99).normal(size=(4, 3))
    return CoefficientDrifter(base, config, concept_scale=0.5)


def test_blend_fraction_examples():
    assert blend_fraction(9, 10, 0) == 0.0
    assert blend_fraction(5, 10, 4) == 0.0
    assert blend_fraction(7, 10, 4) == 0.5


@given(
    t=st.integers(0, 10_000),
    interval=st.integers(1, 500),
    period=st.integers(0, 500),
)
def test_blend_fraction_range_and_window(t, interval, period):
    period = min(period, interval)
    lam = blend_fraction(t, interval, period)
    assert 0.0 <= lam <= 1.0
    if period and t % interval < interval - period:
        assert lam == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        DrifterConfig(interval=10, transition_period=11)
    with pytest.raises(ConfigError):
        DrifterConfig(interval=0)
    with pytest.raises(ConfigError):
        DrifterConfig(interval=10, transition_type="smooth")
    with pytest.raises(ConfigError):
        DrifterConfig(interval=10, base_coefficient_weight=1.5)


def test_round_zero_blends_base_and_first_concept():
    drifter = make_drifter(interval=10, base_coefficient_weight=0.4)
    expected = 0.4 * drifter.base + 0.6 * drifter.concept(0)
    assert np.array_equal(drifter.coefficients_for_round(0), expected)


def test_sudden_step_at_interval():
    drifter = make_drifter(interval=10, transition_period=0, base_coefficient_weight=0.25)
    at_interval = drifter.coefficients_for_round(10)
    expected = 0.25 * drifter.base + 0.75 * drifter.concept(1)
    assert np.array_equal(at_interval, expected)


def test_linear_midpoint_is_average():
    drifter = make_drifter(interval=10, transition_period=4)
    # offset 7 gives lambda 0.5
    got = drifter.coefficients_for_round(7)
    midpoint = 0.5 * drifter.concept(0) + 0.5 * drifter.concept(1)
    assert np.allclose(got, midpoint, atol=1e-15)


def test_stationary_outside_transitions():
    drifter = make_drifter(interval=100, transition_period=10)
    reference = drifter.coefficients_for_round(0)
    for t in (1, 17, 42, 89):
        assert np.array_equal(drifter.coefficients_for_round(t), reference)


def test_sudden_drift_piecewise_constant():
    drifter = make_drifter(interval=50, transition_period=0)
    coeffs = [drifter.coefficients_for_round(t) for t in range(150)]
    for t in range(1, 150):
        changed = not np.array_equal(coeffs[t], coeffs[t - 1])
        assert changed == (t % 50 == 0)


def test_seasonal_alternates_two_concepts():
    drifter = make_drifter(interval=20, seasonal=True)
    assert np.array_equal(drifter.concept(0), drifter.concept(2))
    assert np.array_equal(drifter.concept(1), drifter.concept(3))
    assert not np.array_equal(drifter.concept(0), drifter.concept(1))
    for t in (0, 5, 19, 25):
        a = drifter.coefficients_for_round(t)
        b = drifter.coefficients_for_round(t + 40)
        assert np.array_equal(a, b)


def test_linear_blend_reaches_next_concept_at_epoch_start():
    drifter = make_drifter(interval=10, transition_period=5)
    # last round of epoch 0 has lambda 1: concept part equals concept(1)...
    end_of_window = drifter.coefficients_for_round(9)
    assert np.allclose(end_of_window, drifter.concept(1), atol=1e-15)
    # ...and the first round of epoch 1 starts exactly there
    assert np.array_equal(drifter.coefficients_for_round(10), drifter.concept(1))


@settings(max_examples=25)
@given(
    interval=st.integers(1, 50),
    period=st.integers(0, 50),
    seasonal=st.booleans(),
    transition=st.sampled_from(["linear", "weighted_sampled"]),
    t=st.integers(0, 500),
)
def test_full_base_weight_freezes_coefficients(interval, period, seasonal, transition, t):
    drifter = make_drifter(
        interval=interval,
        transition_period=min(period, interval),
        seasonal=seasonal,
        transition_type=transition,
        base_coefficient_weight=1.0,
    )
    assert np.array_equal(drifter.coefficients_for_round(t), drifter.base)


def test_weighted_sampled_marginal():
    drifter = make_drifter(interval=10, transition_period=10, transition_type="weighted_sampled")
    # offset 2 gives lambda (2 - 0 + 1)/10 = 0.3
    nxt = drifter.concept(1)
    hits = sum(
        np.array_equal(drifter.coefficients_for_round(2), nxt) for _ in range(10_000)
    )
    assert hits / 10_000 == pytest.approx(0.3, abs=0.02)


def test_determinism_under_fixed_seed():
    run_a = make_drifter(seed=7, interval=10, transition_period=5, transition_type="weighted_sampled")
    run_b = make_drifter(seed=7, interval=10, transition_period=5, transition_type="weighted_sampled")
    for t in range(60):
        assert np.array_equal(run_a.coefficients_for_round(t), run_b.coefficients_for_round(t))
