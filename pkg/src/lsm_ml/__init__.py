"""American option pricing by least-squares Monte Carlo with pluggable learners."""

from .errors import LsmError
from .lsm import (
    DecisionMode, ExerciseDecisions, LsmConfig, RegressionScope, UpdateRule,
    exercise_dataset, price_american_binomial, price_american_lsm, price_european_mc,
)
from .market import (
    ExerciseStyle, ModelParams, OptionKind, OptionSpec, PricingResult,
    black_scholes_price, discount_factor, payoff,
)
from .paths import PathSet, Scheme, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "DecisionMode", "ExerciseDecisions", "ExerciseStyle", "LsmConfig", "LsmError", "ModelParams",
    "OptionKind", "OptionSpec", "PathSet", "PricingResult", "RegressionScope", "Scheme", "UpdateRule",
    "black_scholes_price", "discount_factor", "exercise_dataset", "payoff", "price_american_binomial",
    "price_american_lsm", "price_european_mc", "simulate_paths",
]
