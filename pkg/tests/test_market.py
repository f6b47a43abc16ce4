import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsm_ml.errors import DimensionMismatch, LsmError, NotPositiveDefinite
from lsm_ml.market import (
    ExerciseStyle, ModelParams, OptionKind, OptionSpec, PricingResult, basket_payoff,
    black_scholes_price, discount_factor, norm_cdf, payoff,
)

# 40-digit mpmath evaluations of the closed form and of exp()
BS_PUT_100_04_20 = 6.00399763250675792
BS_PUT_100_02_40 = 14.7242845303223368
BS_CALL_100_04_20 = 9.92505371727443706
DF_04 = 0.960789439152323209
DF_02 = 0.980198673306755302


def spec(kind="put", style="european", strike=100.0, maturity=1.0):
    return OptionSpec(kind, style, strike, maturity)


def test_payoff_examples():
    assert payoff(spec("put"), 80.0) == 20.0
    assert payoff(spec("call"), 100.0) == 0.0
    assert payoff(spec("call"), 120.0) == 20.0
    assert payoff(spec("put"), 0.0) == 100.0


def test_payoff_vectorised_and_negative_spots():
    out = payoff(spec("put"), np.array([-5.0, 50.0, 150.0]))
    assert out.tolist() == [105.0, 50.0, 0.0]


@given(st.floats(0, 1e4), st.floats(1e-3, 1e4), st.sampled_from(["call", "put"]))
def test_payoff_non_negative_and_piecewise_linear(s, k, kind):
    o = spec(kind, strike=k)
    h = payoff(o, s)
    assert h >= 0
    assert h == (max(s - k, 0.0) if kind == "call" else max(k - s, 0.0))


def test_basket_payoff_averages_assets():
    o = spec("put")
    states = np.array([[90.0, 100.0], [120.0, 100.0]])
    assert basket_payoff(o, states).tolist() == [5.0, 0.0]
    assert basket_payoff(o, np.array([[80.0]])).tolist() == [20.0]


def test_discount_factor():
    assert discount_factor(0.0, 0.3, 7.0) == 1.0
    assert discount_factor(0.04, 0, 1) == pytest.approx(DF_04, abs=1e-15)
    assert discount_factor(0.02, 0, 1) == pytest.approx(DF_02, abs=1e-15)
    with pytest.raises(LsmError):
        discount_factor(0.04, 1.0, 0.5)


def test_norm_cdf_against_mpmath():
    import mpmath

    mpmath.mp.dps = 30
    xs = np.linspace(-30, 10, 401)
    exact = np.array([float(mpmath.ncdf(mpmath.mpf(float(x)))) for x in xs])
    got = norm_cdf(xs)
    assert np.max(np.abs(got - exact)) < 1e-15
    assert np.all(np.abs(got - exact) <= 1e-12 * exact)
    assert norm_cdf(0.0) == 0.5
    assert abs(norm_cdf(1.3) + norm_cdf(-1.3) - 1.0) < 1e-15


def test_black_scholes_against_high_precision():
    assert black_scholes_price(spec("put"), 100, 0.04, 0.2) == pytest.approx(BS_PUT_100_04_20, abs=1e-12)
    assert black_scholes_price(spec("put"), 100, 0.02, 0.4) == pytest.approx(BS_PUT_100_02_40, abs=1e-12)
    assert black_scholes_price(spec("call"), 100, 0.04, 0.2) == pytest.approx(BS_CALL_100_04_20, abs=1e-12)


def test_black_scholes_zero_vol_is_discounted_forward():
    assert black_scholes_price(spec("call"), 100, 0.04, 0.0) == pytest.approx(100 - 100 * math.exp(-0.04), abs=1e-12)
    assert black_scholes_price(spec("put"), 100, 0.04, 0.0) == 0.0
    # a subnormal vol underflows sigma*sqrt(T) to zero and must take the same branch
    short = spec("call", maturity=0.25)
    assert black_scholes_price(short, 100, 0.0, 5e-324) == black_scholes_price(short, 100, 0.0, 0.0) == 0.0


def test_black_scholes_rejects_american():
    with pytest.raises(LsmError):
        black_scholes_price(spec("put", "american"), 100, 0.04, 0.2)


@settings(max_examples=200)
@given(st.floats(1, 500), st.floats(1, 500), st.floats(-0.05, 0.2), st.floats(0, 1.5), st.floats(0.01, 5))
def test_put_call_parity(s, k, r, vol, t):
    c = black_scholes_price(spec("call", strike=k, maturity=t), s, r, vol)
    p = black_scholes_price(spec("put", strike=k, maturity=t), s, r, vol)
    assert abs((c - p) - (s - k * discount_factor(r, 0, t))) < 1e-10 * max(1.0, s, k)


def test_black_scholes_non_decreasing_in_vol():
    vols = np.linspace(0, 1.5, 151)
    for kind in ("call", "put"):
        for s in (70.0, 100.0, 130.0):
            prices = [black_scholes_price(spec(kind), s, 0.04, v) for v in vols]
            assert np.all(np.diff(prices) >= -1e-12)


def test_option_spec_validation():
    with pytest.raises(LsmError):
        spec(strike=0)
    with pytest.raises(LsmError):
        spec(maturity=-1)
    o = spec("put", "american")
    assert o.kind is OptionKind.PUT and o.style is ExerciseStyle.AMERICAN
    assert o.with_style("european").style is ExerciseStyle.EUROPEAN


def test_model_params_validation():
    p = ModelParams.single(100, 0.04, 0.2)
    assert p.n_assets == 1 and p.correlation.tolist() == [[1.0]]
    with pytest.raises(DimensionMismatch):
        ModelParams([100, 100], 0.04, [0.2])
    with pytest.raises(LsmError):
        ModelParams([100], 0.04, [-0.1])
    with pytest.raises(LsmError):
        ModelParams([0.0], 0.04, [0.1])
    with pytest.raises(LsmError):
        ModelParams([1, 1], 0.0, [0.1, 0.1], [[1, 0.2], [0.3, 1]])
    with pytest.raises(LsmError):
        ModelParams([1, 1], 0.0, [0.1, 0.1], [[1, 1.5], [1.5, 1]])
    with pytest.raises(NotPositiveDefinite):
        ModelParams.uniform(3, 100, 0.0, 0.2, rho=-0.9)
    assert ModelParams.uniform(3, 100, 0.0, 0.2, rho=1.0).n_assets == 3


def test_model_params_are_read_only():
    p = ModelParams.single(100, 0.04, 0.2)
    with pytest.raises(ValueError):
        p.spots[0] = 1.0


def test_pricing_result_rejects_negative_error():
    with pytest.raises(LsmError):
        PricingResult(1.0, -0.1, 10, 1, 0.1)
