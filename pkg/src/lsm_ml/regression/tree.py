"""CART regression trees and bagged random forests."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import LsmError
from .base import ContinuationEstimator, as_features, as_targets


@dataclass(frozen=True)
class TreeConfig:
    """``max_depth=None`` grows until leaves are pure or hit ``min_samples_leaf``."""

    max_depth: int | None = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise LsmError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise LsmError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    bootstrap: bool = True
    sample_fraction: float = 1.0
    max_features: float = 1.0
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise LsmError("n_trees must be >= 1")
        if not 0 < self.sample_fraction <= 1:
            raise LsmError("sample_fraction must lie in (0, 1]")
        if not 0 < self.max_features <= 1:
            raise LsmError("max_features must lie in (0, 1]")
        TreeConfig(self.max_depth, self.min_samples_leaf)

    @property
    def tree_config(self) -> TreeConfig:
        return TreeConfig(self.max_depth, self.min_samples_leaf)


@dataclass(frozen=True, eq=False)
class TreeArrays:
    """Flat node storage; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _best_split(X, y, orders, features, min_leaf):
    """Return ``(gain, feature, threshold, position)`` of the best split or None.

    ``gain`` is the reduction in the sum of squared deviations. Equal gains keep
    the first candidate found: lowest feature index, then lowest threshold.
    """
    best = None
    for f in features:
        o = orders[f]
        n = o.shape[0]
        xs = X[o, f]
        ys = y[o]
        yc = ys - ys.sum() / n
        csum = np.cumsum(yc)
        left_sum = csum[:-1]
        total = csum[-1]
        n_left = np.arange(1, n, dtype=float)
        n_right = n - n_left
        score = left_sum**2 / n_left + (total - left_sum) ** 2 / n_right
        valid = xs[1:] > xs[:-1]
        if min_leaf > 1:
            valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        pos = int(np.argmax(score))
        gain = score[pos] - total**2 / n
        if gain > 0 and (best is None or gain > best[0]):
            lo, hi = xs[pos], xs[pos + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (gain, f, thr, pos)
    return best


def build_tree(X: np.ndarray, y: np.ndarray, config: TreeConfig, orders=None,
               max_features: int | None = None, rng: np.random.Generator | None = None) -> TreeArrays:
    """Greedy depth-first CART growth minimising squared error.

    ``orders`` may pass precomputed stable argsorts of each column (boosting
    reuses them across rounds). ``max_features`` below the column count draws a
    random feature subset at every split from ``rng``.
    """
    n, d = X.shape
    if orders is None:
        orders = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    max_depth = math.inf if config.max_depth is None else config.max_depth
    min_leaf = config.min_samples_leaf
    k_features = d if max_features is None else max(1, min(d, max_features))
    all_features = range(d)

    feature, threshold, left, right, value = [], [], [], [], []
    goes_left = np.zeros(n, dtype=bool)

    def new_node(v):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(v)
        return len(feature) - 1

    root_rows = orders[0]
    stack = [(new_node(float(y[root_rows].mean())), 0, orders)]
    while stack:
        node, depth, node_orders = stack.pop()
        rows = node_orders[0]
        m = rows.shape[0]
        if depth >= max_depth or m < 2 * min_leaf:
            continue
        ys = y[rows]
        if ys.max() == ys.min():
            continue
        if k_features < d:
            features = np.sort(rng.choice(d, size=k_features, replace=False))
        else:
            features = all_features
        split = _best_split(X, y, node_orders, features, min_leaf)
        if split is None:
            continue
        _, f, thr, pos = split
        if d == 1:
            # one sorted column: children are contiguous slices, no partition needed
            left_orders = [rows[: pos + 1]]
            right_orders = [rows[pos + 1:]]
        else:
            of = node_orders[f]
            goes_left[of[: pos + 1]] = True
            goes_left[of[pos + 1:]] = False
            left_orders = [o[goes_left[o]] for o in node_orders]
            right_orders = [o[~goes_left[o]] for o in node_orders]
        l_node = new_node(float(ys[: pos + 1].sum() / (pos + 1)) if d == 1 else float(y[left_orders[0]].mean()))
        r_node = new_node(float(ys[pos + 1:].sum() / (m - pos - 1)) if d == 1 else float(y[right_orders[0]].mean()))
        feature[node], threshold[node] = int(f), float(thr)
        left[node], right[node] = l_node, r_node
        stack.append((r_node, depth + 1, right_orders))
        stack.append((l_node, depth + 1, left_orders))

    return TreeArrays(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value),
    )


class TreeRegressor(ContinuationEstimator):
    name = "tree"

    def __init__(self, config: TreeConfig | None = None):
        self.config = config or TreeConfig()

    def fit(self, X, y) -> "TreeRegressor":
        X = as_features(X)
        y = as_targets(y, X.shape[0])
        self.tree_ = build_tree(X, y, self.config)
        self._n_features = X.shape[1]
        return self

    def _predict(self, X):
        return self.tree_.predict(X)

    def describe(self) -> str:
        depth = "none" if self.config.max_depth is None else self.config.max_depth
        return f"tree(max_depth={depth}, min_samples_leaf={self.config.min_samples_leaf})"


class ForestRegressor(ContinuationEstimator):
    """Average of CART trees grown on seeded row samples.

    Tree ``t`` draws its rows and per-split feature subsets from child ``t`` of
    ``SeedSequence(seed)``, so results do not depend on ``n_jobs``.
    """

    name = "forest"

    def __init__(self, config: ForestConfig | None = None):
        self.config = config or ForestConfig()

    def _grow(self, X, y, seed_seq):
        cfg = self.config
        n, d = X.shape
        rng = np.random.default_rng(seed_seq)
        m = max(1, int(round(cfg.sample_fraction * n)))
        if cfg.bootstrap:
            rows = rng.integers(0, n, size=m)
        elif m < n:
            rows = np.sort(rng.choice(n, size=m, replace=False))
        else:
            rows = np.arange(n)
        k = max(1, int(round(cfg.max_features * d)))
        return build_tree(X[rows], y[rows], cfg.tree_config, max_features=k, rng=rng)

    def fit(self, X, y) -> "ForestRegressor":
        X = as_features(X)
        y = as_targets(y, X.shape[0])
        children = np.random.SeedSequence(self.config.seed).spawn(self.config.n_trees)
        if self.config.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.config.n_jobs) as pool:
                self.trees_ = list(pool.map(lambda s: self._grow(X, y, s), children))
        else:
            self.trees_ = [self._grow(X, y, s) for s in children]
        self._n_features = X.shape[1]
        return self

    def per_tree_predict(self, X) -> np.ndarray:
        """Predictions of each tree, shape ``(n_trees, n_queries)``."""
        X = as_features(X)
        return np.stack([t.predict(X) for t in self.trees_])

    def _predict(self, X):
        return self.per_tree_predict(X).mean(axis=0)

    def describe(self) -> str:
        c = self.config
        depth = "none" if c.max_depth is None else c.max_depth
        return (f"forest(n_trees={c.n_trees}, bootstrap={c.bootstrap}, sample_fraction={c.sample_fraction:g}, "
                f"max_features={c.max_features:g}, max_depth={depth}, min_samples_leaf={c.min_samples_leaf}, "
                f"seed={c.seed})")


def fit_tree(config: TreeConfig, X, y) -> TreeRegressor:
    return TreeRegressor(config).fit(X, y)


def fit_forest(config: ForestConfig, X, y) -> ForestRegressor:
    return ForestRegressor(config).fit(X, y)
