"""Continuation-value estimators that plug into the backward induction."""

from __future__ import annotations

from dataclasses import fields

from ..errors import LsmError
from .base import ContinuationEstimator
from .boosting import BoostConfig, BoostRegressor, fit_boost
from .knn import KnnConfig, KnnRegressor, fit_knn
from .logistic import LogisticClassifier, LogisticConfig, fit_logistic
from .polynomial import PolynomialBasisConfig, PolynomialRegressor, fit_polynomial, monomial_exponents
from .tree import ForestConfig, ForestRegressor, TreeConfig, TreeRegressor, fit_forest, fit_tree

ESTIMATORS = {
    "polynomial": (PolynomialRegressor, PolynomialBasisConfig),
    "knn": (KnnRegressor, KnnConfig),
    "tree": (TreeRegressor, TreeConfig),
    "forest": (ForestRegressor, ForestConfig),
    "boost": (BoostRegressor, BoostConfig),
    "logistic": (LogisticClassifier, LogisticConfig),
}


def make_estimator(name: str, **params) -> ContinuationEstimator:
    """Build an unfitted estimator by name; unknown hyperparameters are an error."""
    try:
        cls, cfg_cls = ESTIMATORS[name]
    except KeyError:
        raise LsmError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}") from None
    allowed = {f.name for f in fields(cfg_cls)}
    unknown = set(params) - allowed
    if unknown:
        raise LsmError(f"{name} does not accept {sorted(unknown)}; allowed: {sorted(allowed)}")
    return cls(cfg_cls(**params))


__all__ = [
    "ESTIMATORS",
    "BoostConfig",
    "BoostRegressor",
    "ContinuationEstimator",
    "ForestConfig",
    "ForestRegressor",
    "KnnConfig",
    "KnnRegressor",
    "LogisticClassifier",
    "LogisticConfig",
    "PolynomialBasisConfig",
    "PolynomialRegressor",
    "TreeConfig",
    "TreeRegressor",
    "fit_boost",
    "fit_forest",
    "fit_knn",
    "fit_logistic",
    "fit_polynomial",
    "fit_tree",
    "make_estimator",
    "monomial_exponents",
]
