from __future__ import annotations

import abc

import numpy as np

from ..errors import DimensionMismatch, NotFittedError


def as_features(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be a 2-D matrix, got shape {X.shape}")
    return X


def as_targets(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise DimensionMismatch(f"{n} feature rows but {y.shape[0]} targets")
    return y


class ContinuationEstimator(abc.ABC):
    """Common fit/predict surface for every continuation-value model.

    ``fit`` returns ``self`` so ``Estimator(cfg).fit(X, y).predict(Z)`` chains.
    """

    name: str = "estimator"
    _n_features: int | None = None

    @abc.abstractmethod
    def fit(self, X, y) -> "ContinuationEstimator":
        ...

    @abc.abstractmethod
    def _predict(self, X: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def describe(self) -> str:
        ...

    def min_samples(self, n_features: int) -> int:
        """Fewest training rows for which a fit is meaningful."""
        return 1

    @property
    def is_fitted(self) -> bool:
        return self._n_features is not None

    def predict(self, X) -> np.ndarray:
        if not self.is_fitted:
            raise NotFittedError(f"{self.name} must be fitted before predict")
        X = as_features(X)
        if X.shape[1] != self._n_features:
            raise DimensionMismatch(f"fitted on {self._n_features} features, got {X.shape[1]}")
        return self._predict(X)

    def __repr__(self) -> str:
        return self.describe()
