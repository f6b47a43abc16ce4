"""Least-squares regression on a total-degree monomial basis."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import LsmError, SingularSystem
from .base import ContinuationEstimator, as_features, as_targets

AUTO_RIDGE = 1e-8
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class PolynomialBasisConfig:
    """``order`` is the maximum total degree.

    ``ridge=None`` solves the plain normal equations and only falls back to a
    ridge of ``1e-8 * trace`` when they are singular or badly conditioned.
    An explicit ``ridge`` is always added to the diagonal; ``ridge=0`` makes a
    singular system an error.
    """

    order: int = 2
    ridge: float | None = None

    def __post_init__(self):
        if self.order < 0:
            raise LsmError("polynomial order must be >= 0")
        if self.ridge is not None and self.ridge < 0:
            raise LsmError("ridge must be non-negative")


def monomial_exponents(n_features: int, order: int) -> np.ndarray:
    """Exponent rows of every monomial with total degree <= ``order``, degree-major."""
    rows = []
    for degree in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n_features), degree):
            e = np.zeros(n_features, dtype=int)
            for f in combo:
                e[f] += 1
            rows.append(e)
    return np.array(rows, dtype=int).reshape(-1, n_features)


def design_matrix(Z: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    cols = np.ones((Z.shape[0], exponents.shape[0]))
    for k, e in enumerate(exponents):
        for f, p in enumerate(e):
            if p:
                cols[:, k] *= Z[:, f] ** p
    return cols


class PolynomialRegressor(ContinuationEstimator):
    """Normal-equation fit of ``sum_k beta_k psi_k(x)``.

    Features are centred and scaled before the monomials are formed. That is a
    change of basis spanning the same polynomial space, so fitted values are the
    ones the raw monomials would give, but the Gram matrix stays well conditioned
    for price-sized inputs raised to the fifth power.
    """

    name = "polynomial"

    def __init__(self, config: PolynomialBasisConfig | None = None):
        self.config = config or PolynomialBasisConfig()
        self.coef_: np.ndarray | None = None
        self.ridge_used_: float = 0.0

    def min_samples(self, n_features: int) -> int:
        return monomial_exponents(n_features, self.config.order).shape[0]

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.center_) / self.scale_

    def fit(self, X, y) -> "PolynomialRegressor":
        X = as_features(X)
        y = as_targets(y, X.shape[0])
        self.exponents_ = monomial_exponents(X.shape[1], self.config.order)
        self.center_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Phi = design_matrix(self._standardize(X), self.exponents_)
        n = Phi.shape[0]
        gram = Phi.T @ Phi / n
        rhs = Phi.T @ y / n
        self.coef_, self.ridge_used_ = self._solve(gram, rhs)
        self._n_features = X.shape[1]
        return self

    def _solve(self, gram: np.ndarray, rhs: np.ndarray):
        k = gram.shape[0]
        explicit = self.config.ridge
        lam = 0.0 if explicit is None else float(explicit)
        try:
            beta = self._cholesky_solve(gram + lam * np.eye(k), rhs)
            return beta, lam
        except SingularSystem:
            if explicit is not None and explicit == 0.0:
                raise
        lam = AUTO_RIDGE * float(np.trace(gram)) if explicit is None else max(lam, AUTO_RIDGE * float(np.trace(gram)))
        return self._cholesky_solve(gram + lam * np.eye(k), rhs, check=False), lam

    @staticmethod
    def _cholesky_solve(A: np.ndarray, b: np.ndarray, check: bool = True) -> np.ndarray:
        if check and np.linalg.cond(A) > MAX_CONDITION:
            raise SingularSystem("normal matrix is numerically singular (collinear or degenerate features)")
        try:
            factor = linalg.cho_factor(A, lower=True, check_finite=True)
        except linalg.LinAlgError as exc:
            raise SingularSystem(f"normal matrix is not positive definite: {exc}") from exc
        return linalg.cho_solve(factor, b)

    def basis(self, X) -> np.ndarray:
        """Basis functions evaluated at ``X`` (the columns the fit regressed on)."""
        return design_matrix(self._standardize(as_features(X)), self.exponents_)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self.basis(X) @ self.coef_

    def describe(self) -> str:
        ridge = "auto" if self.config.ridge is None else f"{self.config.ridge:g}"
        return f"polynomial(order={self.config.order}, ridge={ridge})"


def fit_polynomial(config: PolynomialBasisConfig, X, y) -> PolynomialRegressor:
    return PolynomialRegressor(config).fit(X, y)
