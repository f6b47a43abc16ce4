"""k-nearest-neighbour regression with deterministic tie breaking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KTooLarge, LsmError
from .base import ContinuationEstimator, as_features, as_targets

_QUERY_CHUNK = 256


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise LsmError("k must be >= 1")


class KnnRegressor(ContinuationEstimator):
    """Mean target of the ``k`` closest training rows (Euclidean).

    Neighbours are ranked by ``(squared distance, training row index)``, so
    equidistant rows are taken in index order. One feature goes through a
    sorted-window search; more features use chunked brute force.
    """

    name = "knn"

    def __init__(self, config: KnnConfig | None = None):
        self.config = config or KnnConfig()

    def min_samples(self, n_features: int) -> int:
        return self.config.k

    def fit(self, X, y) -> "KnnRegressor":
        X = as_features(X)
        y = as_targets(y, X.shape[0])
        if self.config.k > X.shape[0]:
            raise KTooLarge(f"k={self.config.k} exceeds {X.shape[0]} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()
        if X.shape[1] == 1:
            x = X[:, 0]
            idx = np.arange(x.shape[0])
            # right side reads forward (ties ascending index), left side backward
            self._right = np.lexsort((idx, x))
            self._left = np.lexsort((-idx, x))
            self._x_right = x[self._right]
            self._x_left = x[self._left]
        self._n_features = X.shape[1]
        return self

    def neighbors(self, X) -> np.ndarray:
        """Training-row indices of the k neighbours of each query, nearest first."""
        X = as_features(X)
        if X.shape[1] == 1:
            return self._neighbors_1d(X[:, 0])
        return self._neighbors_brute(X)

    def _neighbors_1d(self, q: np.ndarray) -> np.ndarray:
        k, n = self.config.k, self.y_.shape[0]
        offsets = np.arange(k)
        # right candidates: x >= q, first k in (x, index) order
        pos_r = np.searchsorted(self._x_right, q, side="left")
        r_pos = pos_r[:, None] + offsets
        r_ok = r_pos < n
        r_idx = self._right[np.minimum(r_pos, n - 1)]
        # left candidates: x < q, read backwards so ties come out ascending index
        pos_l = np.searchsorted(self._x_left, q, side="left")
        l_pos = pos_l[:, None] - 1 - offsets
        l_ok = l_pos >= 0
        l_idx = self._left[np.maximum(l_pos, 0)]

        cand = np.concatenate([l_idx, r_idx], axis=1)
        ok = np.concatenate([l_ok, r_ok], axis=1)
        dist = (self.X_[cand, 0] - q[:, None]) ** 2
        dist = np.where(ok, dist, np.inf)
        tiebreak = np.where(ok, cand, n)
        order = np.lexsort((tiebreak, dist), axis=1)[:, :k]
        return np.take_along_axis(cand, order, axis=1)

    def _neighbors_brute(self, Q: np.ndarray) -> np.ndarray:
        k = self.config.k
        out = np.empty((Q.shape[0], k), dtype=int)
        for start in range(0, Q.shape[0], _QUERY_CHUNK):
            block = Q[start:start + _QUERY_CHUNK]
            d = ((block[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=2)
            out[start:start + block.shape[0]] = np.argsort(d, axis=1, kind="stable")[:, :k]
        return out

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self.y_[self.neighbors(X)].mean(axis=1)

    def describe(self) -> str:
        return f"knn(k={self.config.k}, distance=euclidean)"


def fit_knn(config: KnnConfig, X, y) -> KnnRegressor:
    return KnnRegressor(config).fit(X, y)
