"""Binary logistic regression fitted by full-batch gradient ascent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ..errors import LsmError, NonBinaryLabels
from .base import ContinuationEstimator, as_features, as_targets


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.5
    max_iters: int = 500
    tolerance: float = 1e-6

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise LsmError("learning_rate must be positive")
        if self.max_iters < 1:
            raise LsmError("max_iters must be >= 1")
        if self.tolerance < 0:
            raise LsmError("tolerance must be non-negative")


def log_likelihood(w: np.ndarray, b: float, Z: np.ndarray, labels: np.ndarray) -> float:
    """Mean Bernoulli log-likelihood of ``sigmoid(Z @ w + b)``."""
    s = Z @ w + b
    return float(np.mean(labels * log_expit(s) + (1 - labels) * log_expit(-s)))


def log_likelihood_gradient(w: np.ndarray, b: float, Z: np.ndarray, labels: np.ndarray):
    """Gradient of :func:`log_likelihood` with respect to ``(w, b)``."""
    err = labels - expit(Z @ w + b)
    return Z.T @ err / Z.shape[0], float(err.mean())


class LogisticClassifier(ContinuationEstimator):
    """Exercise/continue classifier.

    Features are standardised with the training mean and scale. Weights start
    at zero and climb the mean log-likelihood until the gradient norm drops
    below ``tolerance`` or ``max_iters`` is reached. ``predict`` returns the
    class-1 probability, like :meth:`predict_proba`.
    """

    name = "logistic"

    def __init__(self, config: LogisticConfig | None = None):
        self.config = config or LogisticConfig()
        self.w_: np.ndarray | None = None
        self.b_ = 0.0

    def fit(self, X, labels) -> "LogisticClassifier":
        X = as_features(X)
        labels = as_targets(labels, X.shape[0])
        if not np.all((labels == 0) | (labels == 1)):
            raise NonBinaryLabels("logistic regression needs labels in {0, 1}")
        self.center_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Z = (X - self.center_) / self.scale_
        w = np.zeros(X.shape[1])
        b = 0.0
        lr = self.config.learning_rate
        self.n_iter_ = 0
        for it in range(1, self.config.max_iters + 1):
            gw, gb = log_likelihood_gradient(w, b, Z, labels)
            w = w + lr * gw
            b = b + lr * gb
            self.n_iter_ = it
            if np.sqrt(gw @ gw + gb * gb) < self.config.tolerance:
                break
        self.w_, self.b_ = w, b
        self._n_features = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        Z = (as_features(X) - self.center_) / self.scale_
        return Z @ self.w_ + self.b_

    def _predict(self, X):
        return expit(self.decision_function(X))

    def predict_proba(self, X) -> np.ndarray:
        return self.predict(X)

    def describe(self) -> str:
        c = self.config
        return f"logistic(learning_rate={c.learning_rate:g}, max_iters={c.max_iters}, tolerance={c.tolerance:g})"


def fit_logistic(config: LogisticConfig, X, labels) -> LogisticClassifier:
    return LogisticClassifier(config).fit(X, labels)
