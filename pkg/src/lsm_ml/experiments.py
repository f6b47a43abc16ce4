"""Price grids and method comparisons behind the ``sweep`` and ``compare`` commands.

Every cell of a grid is priced from the same seed, so neighbouring cells share
their random numbers and differences between them carry less noise.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import LsmError
from .lsm import (
    DecisionMode, ExerciseDecisions, LsmConfig, RegressionScope, UpdateRule,
    price_american_binomial, price_american_lsm, price_european_mc,
)
from .market import ExerciseStyle, ModelParams, OptionKind, OptionSpec
from .regression import ESTIMATORS

COMPARE_ROSTER = ("polynomial", "knn", "tree", "forest", "boost", "logistic")


class ConfigError(LsmError):
    """Invalid experiment setting; ``key`` names the offending option."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _require(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(key, message)


def estimator_setup(name: str, order: int, params: Mapping[str, Any] | None = None) -> dict:
    """LsmConfig keyword arguments for a named estimator.

    ``logistic`` switches the engine to classifier mode; ``order`` only
    reaches the polynomial basis.
    """
    _require(name in ESTIMATORS, "estimator", f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
    p = dict(params or {})
    if name == "polynomial":
        p.setdefault("order", order)
    kw: dict[str, Any] = {"estimator": name, "estimator_params": p}
    if name == "logistic":
        kw["decision_mode"] = DecisionMode.CLASSIFIER
    return kw


@dataclass(frozen=True)
class SweepConfig:
    spots: tuple[float, ...] = tuple(float(s) for s in range(80, 121, 5))
    vols: tuple[float, ...] = (0.2, 0.4)
    maturities: tuple[float, ...] = (1.0, 2.0)
    strike: float = 100.0
    rate: float = 0.04
    kind: str = "put"
    n_paths: int = 10_000
    n_steps: int = 25
    estimators: tuple[str, ...] = ("polynomial",)
    order: int = 2
    update_rule: str = UpdateRule.REALIZED_CASHFLOW.value
    scope: str = RegressionScope.ALL_PATHS.value
    assets: int = 1
    rho: float = 0.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for key in ("spots", "vols", "maturities", "estimators"):
            object.__setattr__(self, key, tuple(getattr(self, key)))
            _require(len(getattr(self, key)) > 0, key, "must not be empty")
        _require(all(s > 0 for s in self.spots), "spots", "must be positive")
        _require(all(v > 0 for v in self.vols), "vols", "must be positive")
        _require(all(t > 0 for t in self.maturities), "maturities", "must be positive")
        _require(self.strike > 0, "strike", "must be positive")
        _require(math.isfinite(self.rate), "rate", "must be finite")
        _require(self.kind in ("put", "call"), "kind", "must be put or call")
        _require(self.n_paths >= 2, "paths", "must be >= 2")
        _require(self.n_steps >= 1, "steps", "must be >= 1")
        _require(self.order >= 0, "order", "must be >= 0")
        _require(self.assets >= 1, "assets", "must be >= 1")
        _require(self.workers >= 1, "workers", "must be >= 1")
        _require(self.update_rule in [u.value for u in UpdateRule], "update-rule",
                 f"choose from {[u.value for u in UpdateRule]}")
        _require(self.scope in [s.value for s in RegressionScope], "scope",
                 f"choose from {[s.value for s in RegressionScope]}")
        for name in self.estimators:
            self.lsm_config(name)
        self.params(self.spots[0], self.vols[0])

    def params(self, spot: float, vol: float) -> ModelParams:
        try:
            return ModelParams.uniform(self.assets, spot, self.rate, vol, self.rho)
        except LsmError as exc:
            raise ConfigError("rho", str(exc)) from None

    def lsm_config(self, estimator: str) -> LsmConfig:
        try:
            return LsmConfig(n_paths=self.n_paths, n_steps=self.n_steps, update_rule=self.update_rule,
                             regression_scope=self.scope, seed=self.seed,
                             **estimator_setup(estimator, self.order))
        except ConfigError:
            raise
        except LsmError as exc:
            raise ConfigError("estimator", str(exc)) from None


@dataclass(frozen=True)
class SweepRow:
    estimator: str
    spot: float
    vol: float
    maturity: float
    price: float
    std_error: float
    european: float
    european_se: float
    elapsed: float


SWEEP_HEADER = ("estimator", "assets", "spot", "vol", "maturity", "price", "std_error",
                "european", "european_se", "elapsed")


def _sweep_cell(cfg: SweepConfig, estimator: str, spot: float, vol: float, maturity: float) -> SweepRow:
    params = cfg.params(spot, vol)
    spec = OptionSpec(OptionKind(cfg.kind), ExerciseStyle.AMERICAN, cfg.strike, maturity)
    res, _ = price_american_lsm(spec, params, cfg.lsm_config(estimator))
    eur = price_european_mc(spec.with_style(ExerciseStyle.EUROPEAN), params, cfg.n_paths, cfg.seed)
    return SweepRow(estimator, spot, vol, maturity, res.price, res.std_error, eur.price, eur.std_error,
                    res.elapsed + eur.elapsed)


def sweep_cells(cfg: SweepConfig):
    """Grid in output order: spot, then vol, then maturity, then estimator."""
    return [(e, s, v, t) for s in cfg.spots for v in cfg.vols for t in cfg.maturities for e in cfg.estimators]


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    cells = sweep_cells(cfg)
    if cfg.workers == 1:
        return [_sweep_cell(cfg, *c) for c in cells]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda c: _sweep_cell(cfg, *c), cells))


@dataclass(frozen=True)
class CompareConfig:
    spot: float = 100.0
    strike: float = 100.0
    maturity: float = 1.0
    rate: float = 0.02
    vol: float = 0.4
    kind: str = "put"
    n_paths: int = 10_000
    n_steps: int = 25
    estimators: tuple[str, ...] = COMPARE_ROSTER
    order: int = 2
    scope: str = RegressionScope.IN_THE_MONEY_ONLY.value
    lattice_steps: int = 2000
    seed: int = 0
    workers: int = 1
    record_decisions: bool = False
    estimator_params: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        _require(len(self.estimators) > 0, "estimators", "must not be empty")
        for key in ("spot", "strike", "maturity", "vol"):
            _require(getattr(self, key) > 0, key, "must be positive")
        _require(math.isfinite(self.rate), "rate", "must be finite")
        _require(self.kind in ("put", "call"), "kind", "must be put or call")
        _require(self.n_paths >= 2, "paths", "must be >= 2")
        _require(self.n_steps >= 1, "steps", "must be >= 1")
        _require(self.lattice_steps >= 1, "lattice-steps", "must be >= 1")
        _require(self.workers >= 1, "workers", "must be >= 1")
        _require(self.scope in [s.value for s in RegressionScope], "scope",
                 f"choose from {[s.value for s in RegressionScope]}")
        for name in self.estimators:
            self.lsm_config(name)

    @property
    def spec(self) -> OptionSpec:
        return OptionSpec(OptionKind(self.kind), ExerciseStyle.AMERICAN, self.strike, self.maturity)

    def lsm_config(self, estimator: str) -> LsmConfig:
        try:
            return LsmConfig(n_paths=self.n_paths, n_steps=self.n_steps, regression_scope=self.scope,
                             seed=self.seed, record_decisions=self.record_decisions,
                             **estimator_setup(estimator, self.order, self.estimator_params.get(estimator)))
        except ConfigError:
            raise
        except LsmError as exc:
            raise ConfigError("estimator", str(exc)) from None


@dataclass(frozen=True)
class CompareRow:
    method: str
    price: float
    std_error: float
    elapsed: float
    decisions: ExerciseDecisions | None = None


COMPARE_HEADER = ("method", "price", "std_error", "elapsed")


def _compare_estimator(cfg: CompareConfig, name: str) -> CompareRow:
    params = ModelParams.single(cfg.spot, cfg.rate, cfg.vol)
    res, decisions = price_american_lsm(cfg.spec, params, cfg.lsm_config(name))
    return CompareRow(name, res.price, res.std_error, res.elapsed, decisions if cfg.record_decisions else None)


def run_compare(cfg: CompareConfig) -> list[CompareRow]:
    """Every estimator on the same paths, then the lattice and European references."""
    if cfg.workers == 1:
        rows = [_compare_estimator(cfg, n) for n in cfg.estimators]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda n: _compare_estimator(cfg, n), cfg.estimators))

    start = time.perf_counter()
    lattice = price_american_binomial(cfg.spec, cfg.spot, cfg.rate, cfg.vol, cfg.lattice_steps)
    rows.append(CompareRow("binomial", lattice, 0.0, max(time.perf_counter() - start, 1e-6)))
    eur = price_european_mc(cfg.spec.with_style(ExerciseStyle.EUROPEAN), ModelParams.single(cfg.spot, cfg.rate, cfg.vol),
                            cfg.n_paths, cfg.seed)
    rows.append(CompareRow("european_mc", eur.price, eur.std_error, eur.elapsed))
    return rows


def grid_values(text: str) -> tuple[float, ...]:
    """Parse ``"80,90,100"`` or a range ``"80:120:5"`` (inclusive stop)."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"range {text!r} must be start:stop:step with step > 0")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(max(n, 0)))
    return tuple(float(p) for p in text.split(",") if p.strip())


def names(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


__all__ = [
    "COMPARE_HEADER", "COMPARE_ROSTER", "CompareConfig", "CompareRow", "ConfigError", "SWEEP_HEADER",
    "SweepConfig", "SweepRow", "estimator_setup", "grid_values", "names", "run_compare", "run_sweep",
    "sweep_cells",
]
