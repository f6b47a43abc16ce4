"""European Monte Carlo, Longstaff-Schwartz backward induction and a CRR lattice."""

from __future__ import annotations

import csv
import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, EmptyDataset, EstimatorFailure, LsmError
from .market import ExerciseStyle, ModelParams, OptionSpec, PricingResult, basket_payoff, payoff
from .paths import Scheme, simulate_paths, simulate_terminal
from .regression import ContinuationEstimator, make_estimator

logger = logging.getLogger(__name__)


class UpdateRule(str, enum.Enum):
    REALIZED_CASHFLOW = "realized_cashflow"
    CONTINUATION_VALUE = "continuation_value"


class RegressionScope(str, enum.Enum):
    IN_THE_MONEY_ONLY = "in_the_money_only"
    ALL_PATHS = "all_paths"


class DecisionMode(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFIER = "classifier"


@dataclass(frozen=True)
class LsmConfig:
    """Settings for one LSM run.

    ``estimator`` names an entry of :data:`lsm_ml.regression.ESTIMATORS` and
    ``estimator_params`` are its config fields. In classifier mode the
    estimator is trained on hindsight labels (immediate payoff above the
    path's realised future cash flow) and a path is exercised when its
    probability exceeds ``threshold``.
    """

    n_paths: int = 10_000
    n_steps: int = 50
    estimator: str = "polynomial"
    estimator_params: Mapping[str, Any] = field(default_factory=dict)
    update_rule: UpdateRule = UpdateRule.REALIZED_CASHFLOW
    regression_scope: RegressionScope = RegressionScope.IN_THE_MONEY_ONLY
    decision_mode: DecisionMode = DecisionMode.REGRESSION
    threshold: float = 0.5
    seed: int = 0
    scheme: Scheme = Scheme.EXACT_LOGNORMAL
    record_decisions: bool = False
    workers: int = 1

    def __post_init__(self):
        for name, enum_cls in (("update_rule", UpdateRule), ("regression_scope", RegressionScope),
                               ("decision_mode", DecisionMode), ("scheme", Scheme)):
            object.__setattr__(self, name, enum_cls(getattr(self, name)))
        if self.n_paths < 2:
            raise LsmError("n_paths must be >= 2")
        if self.n_steps < 1:
            raise LsmError("n_steps must be >= 1")
        if self.decision_mode is DecisionMode.CLASSIFIER:
            if not 0 < self.threshold < 1:
                raise LsmError("classifier threshold must lie in (0, 1)")
            if self.update_rule is UpdateRule.CONTINUATION_VALUE:
                raise LsmError("continuation_value update needs a regression estimate, not a classifier")
        elif self.estimator == "logistic":
            raise LsmError("the logistic estimator only works in classifier decision mode")
        self.make_estimator()

    def make_estimator(self) -> ContinuationEstimator:
        return make_estimator(self.estimator, **dict(self.estimator_params))


@dataclass(frozen=True)
class ExerciseDecisionRecord:
    step: int
    time: float
    state: tuple[float, ...]
    payoff: float
    continuation: float
    label: int
    score: float
    realized: int


@dataclass(frozen=True, eq=False)
class ExerciseDecisions:
    """Column store of every exercise decision taken during a run.

    ``continuation`` is the estimator's value (NaN in classifier mode),
    ``score`` the exercise propensity in [0, 1] (classifier probability, or
    ``sigmoid((h - c) / K)`` for regressors), ``label`` the decision taken and
    ``realized`` whether exercising beat the path's own discounted future
    cash flow under the later exercise policy.
    """

    step: np.ndarray
    time: np.ndarray
    state: np.ndarray
    payoff: np.ndarray
    continuation: np.ndarray
    label: np.ndarray
    score: np.ndarray
    realized: np.ndarray

    @classmethod
    def empty(cls, n_assets: int) -> "ExerciseDecisions":
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=int), z, np.zeros((0, n_assets)), z, z, np.zeros(0, dtype=int), z,
                   np.zeros(0, dtype=int))

    @classmethod
    def concat(cls, parts: Sequence["ExerciseDecisions"], n_assets: int) -> "ExerciseDecisions":
        if not parts:
            return cls.empty(n_assets)
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                     ("step", "time", "state", "payoff", "continuation", "label", "score", "realized")))

    def __len__(self) -> int:
        return self.step.shape[0]

    def __iter__(self) -> Iterator[ExerciseDecisionRecord]:
        for i in range(len(self)):
            yield ExerciseDecisionRecord(
                step=int(self.step[i]), time=float(self.time[i]), state=tuple(float(v) for v in self.state[i]),
                payoff=float(self.payoff[i]), continuation=float(self.continuation[i]),
                label=int(self.label[i]), score=float(self.score[i]), realized=int(self.realized[i]),
            )


def _elapsed(start: float) -> float:
    # floor at 1 microsecond so a reported duration is always positive
    return max(time.perf_counter() - start, 1e-6)


def _check_style(spec: OptionSpec, style: ExerciseStyle):
    if spec.style is not style:
        raise LsmError(f"expected a {style.value} option, got {spec.style.value}")


def price_european_mc(spec: OptionSpec, params: ModelParams, n_paths: int, seed: int = 0,
                      workers: int = 1) -> PricingResult:
    """Average discounted payoff over exact terminal draws."""
    _check_style(spec, ExerciseStyle.EUROPEAN)
    if n_paths < 2:
        raise LsmError("n_paths must be >= 2")
    start = time.perf_counter()
    terminal = simulate_terminal(params, n_paths, spec.maturity, seed, workers)
    discounted = math.exp(-params.rate * spec.maturity) * basket_payoff(spec, terminal)
    price = float(discounted.mean())
    se = float(discounted.std(ddof=1) / math.sqrt(n_paths))
    return PricingResult(price, se, n_paths, 1, _elapsed(start), {"method": "european_mc", "seed": seed})


def _fit_and_decide(cfg: LsmConfig, step: int, X: np.ndarray, h: np.ndarray, v: np.ndarray, strike: float):
    """Fit at one step and return ``(continuation, score, exercise)`` for the given rows."""
    est = cfg.make_estimator()
    try:
        if cfg.decision_mode is DecisionMode.CLASSIFIER:
            labels = (h > v).astype(float)
            est.fit(X, labels)
            proba = est.predict(X)
            cont = np.full(h.shape, np.nan)
            score = proba
            exercise = (proba > cfg.threshold) & (h > 0)
        else:
            est.fit(X, v)
            cont = est.predict(X)
            score = expit((h - cont) / strike)
            exercise = h > cont
    except LsmError:
        raise
    except Exception as exc:
        raise EstimatorFailure(f"{est.describe()} failed: {exc}", step) from exc
    if not np.all(np.isfinite(score)):
        raise EstimatorFailure(f"{est.describe()} produced non-finite output", step)
    return cont, score, exercise


def price_american_lsm(spec: OptionSpec, params: ModelParams, cfg: LsmConfig):
    """Longstaff-Schwartz price of an American option.

    Returns ``(PricingResult, ExerciseDecisions)``; decisions are only filled
    when ``cfg.record_decisions`` is set. Steps whose regression set is too
    small, or whose fit raises a package error such as a singular system, are
    treated as "never exercise here" and counted in
    ``result.metadata["degraded_steps"]``.

    Exercise at time zero is decided against the cross-path mean of the
    discounted continuation cashflows; when immediate exercise wins the price
    is the intrinsic value with zero standard error.
    """
    _check_style(spec, ExerciseStyle.AMERICAN)
    start = time.perf_counter()
    paths = simulate_paths(params, cfg.n_paths, cfg.n_steps, spec.maturity, cfg.scheme, cfg.seed, cfg.workers)
    S = paths.values
    d = paths.n_assets
    df = math.exp(-params.rate * paths.dt)
    probe = cfg.make_estimator()
    min_rows = max(2, probe.min_samples(d))

    V = basket_payoff(spec, S[:, -1, :]).astype(float)
    degraded: list[str] = []
    recorded: list[ExerciseDecisions] = []
    for i in range(cfg.n_steps - 1, 0, -1):
        V *= df
        X = S[:, i, :]
        h = basket_payoff(spec, X)
        if cfg.regression_scope is RegressionScope.IN_THE_MONEY_ONLY:
            rows = np.flatnonzero(h > 0)
        else:
            rows = np.arange(cfg.n_paths)
        if rows.size < min_rows:
            degraded.append(f"step {i}: {rows.size} regression rows < {min_rows}")
            continue
        Xr, hr, vr = X[rows], h[rows], V[rows]
        try:
            cont, score, exercise = _fit_and_decide(cfg, i, Xr, hr, vr, spec.strike)
        except EstimatorFailure:
            raise
        except LsmError as exc:
            degraded.append(f"step {i}: {exc}")
            continue
        if cfg.record_decisions:
            recorded.append(ExerciseDecisions(
                step=np.full(rows.size, i), time=np.full(rows.size, paths.t_grid[i]), state=Xr.copy(),
                payoff=hr.copy(), continuation=cont, label=exercise.astype(int), score=score,
                realized=(hr > vr).astype(int)))
        if cfg.update_rule is UpdateRule.REALIZED_CASHFLOW:
            ex_rows = rows[exercise]
            V[ex_rows] = h[ex_rows]
        else:
            V[rows] = np.maximum(cont, hr)

    V *= df
    for msg in degraded:
        logger.warning("LSM degraded to 'continue' at %s", msg)
    held = float(V.mean())
    intrinsic = float(basket_payoff(spec, params.spots[None, :])[0])
    exercised_now = intrinsic > held
    if exercised_now:
        price, se = intrinsic, 0.0
    else:
        price, se = held, float(V.std(ddof=1) / math.sqrt(cfg.n_paths))

    decisions = ExerciseDecisions.concat(recorded[::-1], d)
    meta = {
        "method": "american_lsm",
        "estimator": probe.describe(),
        "update_rule": cfg.update_rule.value,
        "regression_scope": cfg.regression_scope.value,
        "decision_mode": cfg.decision_mode.value,
        "scheme": cfg.scheme.value,
        "seed": cfg.seed,
        "degraded_steps": len(degraded),
        "warnings": degraded,
        "exercised_at_start": exercised_now,
    }
    return PricingResult(price, se, cfg.n_paths, cfg.n_steps, _elapsed(start), meta), decisions


def price_american_binomial(spec: OptionSpec, spot, rate: float, vol: float, n_steps: int) -> float:
    """Cox-Ross-Rubinstein lattice value (``u = exp(vol sqrt(dt))``, ``d = 1/u``).

    An American ``spec`` takes ``max(exercise, discounted expectation)`` at every
    node; a European one only discounts. Single underlying only.
    """
    spot_arr = np.atleast_1d(np.asarray(spot, dtype=float))
    if spot_arr.shape != (1,):
        raise DimensionMismatch("the binomial lattice prices a single underlying")
    s0 = float(spot_arr[0])
    if n_steps < 1:
        raise LsmError("n_steps must be >= 1")
    if vol < 0 or s0 <= 0:
        raise LsmError("need vol >= 0 and spot > 0")
    american = spec.style is ExerciseStyle.AMERICAN
    T = spec.maturity
    dt = T / n_steps

    if vol == 0.0:
        t = np.arange(n_steps + 1) * dt
        values = np.exp(-rate * t) * payoff(spec, s0 * np.exp(rate * t))
        return float(values.max() if american else values[-1])

    step = vol * math.sqrt(dt)
    u, dn = math.exp(step), math.exp(-step)
    growth = math.exp(rate * dt)
    p = (growth - dn) / (u - dn)
    if not 0 <= p <= 1:
        raise LsmError(f"risk-neutral probability {p:.4f} outside [0, 1]; increase n_steps")
    disc = 1.0 / growth
    k = np.arange(n_steps + 1)
    V = payoff(spec, s0 * np.exp(step * (n_steps - 2 * k)))
    for j in range(n_steps - 1, -1, -1):
        V = disc * (p * V[:-1] + (1 - p) * V[1:])
        if american:
            k = np.arange(j + 1)
            V = np.maximum(V, payoff(spec, s0 * np.exp(step * (j - 2 * k))))
    return float(V[0])


def exercise_dataset(records) -> tuple[np.ndarray, np.ndarray]:
    """Features ``[state..., payoff, time]`` and exercised labels from decisions."""
    if isinstance(records, ExerciseDecisions):
        if len(records) == 0:
            raise EmptyDataset("no exercise decisions recorded")
        X = np.column_stack([records.state, records.payoff, records.time])
        return X, records.label.astype(int)
    records = list(records)
    if not records:
        raise EmptyDataset("no exercise decisions recorded")
    X = np.array([[*r.state, r.payoff, r.time] for r in records], dtype=float)
    return X, np.array([r.label for r in records], dtype=int)


def decision_header(n_assets: int) -> list[str]:
    return ["step", *[f"state_{a}" for a in range(n_assets)], "payoff", "continuation", "label", "score", "realized"]


def write_decisions_csv(decisions: ExerciseDecisions, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(decision_header(decisions.state.shape[1]))
    for i in range(len(decisions)):
        writer.writerow([
            int(decisions.step[i]),
            *(repr(float(v)) for v in decisions.state[i]),
            repr(float(decisions.payoff[i])),
            repr(float(decisions.continuation[i])),
            int(decisions.label[i]),
            repr(float(decisions.score[i])),
            int(decisions.realized[i]),
        ])
