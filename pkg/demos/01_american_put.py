"""
Pricing an American put three ways
==================================

A one-year at-the-money put (S0 = K = 100, r = 4%, vol 20%) priced by the
closed form for its European twin, a 2000-step binomial lattice, and
least-squares Monte Carlo with a quadratic continuation fit.
"""

from lsm_ml import (
    ExerciseStyle, LsmConfig, ModelParams, OptionKind, OptionSpec,
    black_scholes_price, price_american_binomial, price_american_lsm, price_european_mc,
)

put = OptionSpec(OptionKind.PUT, ExerciseStyle.AMERICAN, strike=100.0, maturity=1.0)
market = ModelParams.single(spot=100.0, rate=0.04, vol=0.2)

# the European price is a floor for the American one
european = put.with_style(ExerciseStyle.EUROPEAN)
print("Black-Scholes European   ", round(black_scholes_price(european, 100.0, 0.04, 0.2), 4))
mc = price_european_mc(european, market, n_paths=100_000, seed=0)
print("Monte Carlo European     ", round(mc.price, 4), "+-", round(mc.std_error, 4))

# the lattice is the reference for the early-exercise premium
print("Binomial American (2000) ", round(price_american_binomial(put, 100.0, 0.04, 0.2, 2000), 4))

# backward induction over 50 exercise dates, regressing on in-the-money paths
for order in (2, 3):
    cfg = LsmConfig(n_paths=100_000, n_steps=50, estimator_params={"order": order}, seed=0)
    res, _ = price_american_lsm(put, market, cfg)
    print(f"LSM polynomial order {order}  ", round(res.price, 4), "+-", round(res.std_error, 4),
          f"({res.elapsed:.2f}s)")

# regressing on every path instead biases the exercise rule, and the price, downward
cfg = LsmConfig(n_paths=10_000, n_steps=25, regression_scope="all_paths", seed=0)
res, _ = price_american_lsm(put, market, cfg)
print("LSM all paths, 25 steps  ", round(res.price, 4), "+-", round(res.std_error, 4))
