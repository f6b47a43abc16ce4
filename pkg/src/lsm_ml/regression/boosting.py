"""Least-squares gradient boosting over depth-limited CART trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LsmError
from .base import ContinuationEstimator, as_features, as_targets
from .tree import TreeConfig, build_tree


@dataclass(frozen=True)
class BoostConfig:
    """Stands in for both XGBoost- and LightGBM-style boosters.

    The 20-row leaf floor mirrors LightGBM's default minimum leaf size.
    ``max_depth=None`` lets each residual tree grow fully.
    """

    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 3
    min_samples_leaf: int = 20

    def __post_init__(self):
        if self.n_rounds < 0:
            raise LsmError("n_rounds must be >= 0")
        if not self.learning_rate > 0:
            raise LsmError("learning_rate must be positive")
        TreeConfig(self.max_depth, self.min_samples_leaf)


class BoostRegressor(ContinuationEstimator):
    """``F_0 = mean(y)``; round m fits a tree to ``y - F_{m-1}`` and adds ``lr * tree``.

    ``rss_history_[m]`` is the training residual sum of squares after round m
    (entry 0 is the initial constant fit).
    """

    name = "boost"

    def __init__(self, config: BoostConfig | None = None):
        self.config = config or BoostConfig()

    def fit(self, X, y) -> "BoostRegressor":
        X = as_features(X)
        y = as_targets(y, X.shape[0])
        cfg = self.config
        tree_cfg = TreeConfig(cfg.max_depth, cfg.min_samples_leaf)
        orders = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]
        self.init_ = float(y.mean())
        fitted = np.full(y.shape[0], self.init_)
        self.trees_ = []
        self.rss_history_ = [float(np.sum((y - fitted) ** 2))]
        for _ in range(cfg.n_rounds):
            residual = y - fitted
            tree = build_tree(X, residual, tree_cfg, orders=orders)
            self.trees_.append(tree)
            fitted = fitted + cfg.learning_rate * tree.predict(X)
            self.rss_history_.append(float(np.sum((y - fitted) ** 2)))
        self._n_features = X.shape[1]
        return self

    def _predict(self, X):
        out = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            out = out + self.config.learning_rate * tree.predict(X)
        return out

    def describe(self) -> str:
        c = self.config
        depth = "none" if c.max_depth is None else c.max_depth
        return (f"boost(n_rounds={c.n_rounds}, learning_rate={c.learning_rate:g}, max_depth={depth}, "
                f"min_samples_leaf={c.min_samples_leaf})")


def fit_boost(config: BoostConfig, X, y) -> BoostRegressor:
    return BoostRegressor(config).fit(X, y)
