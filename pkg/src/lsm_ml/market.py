"""Contract and market descriptions, payoffs, discounting and Black-Scholes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionMismatch, LsmError

SQRT_TWO = math.sqrt(2.0)


class OptionKind(str, enum.Enum):
    CALL = "call"
    PUT = "put"


class ExerciseStyle(str, enum.Enum):
    EUROPEAN = "european"
    AMERICAN = "american"


@dataclass(frozen=True)
class OptionSpec:
    kind: OptionKind
    style: ExerciseStyle
    strike: float
    maturity: float

    def __post_init__(self):
        object.__setattr__(self, "kind", OptionKind(self.kind))
        object.__setattr__(self, "style", ExerciseStyle(self.style))
        if not self.strike > 0:
            raise LsmError(f"strike must be positive, got {self.strike}")
        if not self.maturity > 0:
            raise LsmError(f"maturity must be positive, got {self.maturity}")

    def with_style(self, style: ExerciseStyle | str) -> "OptionSpec":
        return OptionSpec(self.kind, ExerciseStyle(style), self.strike, self.maturity)


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Risk-neutral market: spots, a constant short rate, vols and correlation.

    ``correlation`` defaults to the identity. Positive semi-definiteness is
    checked by attempting the Cholesky factorisation.
    """

    spots: np.ndarray
    rate: float
    vols: np.ndarray
    correlation: np.ndarray | None = None

    def __post_init__(self):
        spots = _frozen(self.spots, 1)
        vols = _frozen(self.vols, 1)
        n = spots.shape[0]
        corr = np.eye(n) if self.correlation is None else np.array(self.correlation, dtype=float, ndmin=2)
        corr.setflags(write=False)
        object.__setattr__(self, "spots", spots)
        object.__setattr__(self, "vols", vols)
        object.__setattr__(self, "correlation", corr)
        object.__setattr__(self, "rate", float(self.rate))

        if spots.ndim != 1 or vols.shape != spots.shape or corr.shape != (n, n):
            raise DimensionMismatch(
                f"spots {spots.shape}, vols {vols.shape} and correlation {corr.shape} disagree"
            )
        if np.any(spots <= 0):
            raise LsmError("all spots must be positive")
        if np.any(vols < 0):
            raise LsmError("volatilities must be non-negative")
        if not np.allclose(corr, corr.T, rtol=0, atol=1e-12):
            raise LsmError("correlation matrix must be symmetric")
        if not np.all(np.diag(corr) == 1.0):
            raise LsmError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(corr) > 1.0):
            raise LsmError("correlation entries must lie in [-1, 1]")
        from .paths import cholesky  # local import: paths depends on this module

        cholesky(corr)

    @classmethod
    def single(cls, spot: float, rate: float, vol: float) -> "ModelParams":
        return cls(spots=[spot], rate=rate, vols=[vol])

    @classmethod
    def uniform(cls, n_assets: int, spot: float, rate: float, vol: float, rho: float = 0.0) -> "ModelParams":
        """``n_assets`` identical assets with a common pairwise correlation."""
        corr = np.full((n_assets, n_assets), rho)
        np.fill_diagonal(corr, 1.0)
        return cls(spots=[spot] * n_assets, rate=rate, vols=[vol] * n_assets, correlation=corr)

    @property
    def n_assets(self) -> int:
        return self.spots.shape[0]


@dataclass(frozen=True)
class PricingResult:
    price: float
    std_error: float
    n_paths: int
    n_steps: int
    elapsed: float
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.std_error < 0:
            raise LsmError("std_error must be non-negative")


def payoff(spec: OptionSpec, spot):
    """Intrinsic value ``max(S - K, 0)`` for calls, ``max(K - S, 0)`` for puts.

    Works elementwise on arrays. Negative spots (possible under the arithmetic
    Euler scheme) are accepted as-is.
    """
    s = np.asarray(spot, dtype=float)
    if spec.kind is OptionKind.CALL:
        out = np.maximum(s - spec.strike, 0.0)
    else:
        out = np.maximum(spec.strike - s, 0.0)
    return float(out) if out.ndim == 0 else out


def basket_payoff(spec: OptionSpec, states) -> np.ndarray:
    """Payoff on the equally weighted average of the last axis of ``states``.

    With a single asset this is just :func:`payoff` on that asset.
    """
    states = np.asarray(states, dtype=float)
    level = states[..., 0] if states.shape[-1] == 1 else states.mean(axis=-1)
    return np.asarray(payoff(spec, level))


def discount_factor(rate: float, t0: float, t1: float) -> float:
    if t1 < t0:
        raise LsmError(f"discount interval reversed: t1={t1} < t0={t0}")
    return math.exp(-rate * (t1 - t0))


def norm_cdf(x):
    """Standard normal CDF via the complementary error function.

    ``0.5 * erfc(-x / sqrt(2))`` keeps full double precision in both tails
    (absolute error well below 1e-15), unlike ``0.5 * (1 + erf(x / sqrt(2)))``.
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT_TWO)
    from scipy.special import erfc

    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT_TWO)


def black_scholes_price(spec: OptionSpec, spot: float, rate: float, vol: float) -> float:
    if spec.style is not ExerciseStyle.EUROPEAN:
        raise LsmError("Black-Scholes closed form only prices European options")
    if vol < 0:
        raise LsmError("volatility must be non-negative")
    if spot <= 0:
        raise LsmError("spot must be positive")

    T, K = spec.maturity, spec.strike
    df = math.exp(-rate * T)
    sd = vol * math.sqrt(T)
    if sd == 0.0:
        # zero volatility, or small enough to underflow: the payoff is on the forward
        forward = spot * math.exp(rate * T)
        return df * payoff(spec, forward)

    d1 = (math.log(spot / K) + (rate + 0.5 * vol * vol) * T) / sd
    d2 = d1 - sd
    if spec.kind is OptionKind.CALL:
        return spot * norm_cdf(d1) - K * df * norm_cdf(d2)
    return K * df * norm_cdf(-d2) - spot * norm_cdf(-d1)
