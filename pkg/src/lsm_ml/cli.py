"""Command-line front end: ``sweep``, ``compare``, ``metrics``, ``correlate`` and ``train``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

Any command accepts ``--config FILE``, a flat ``key=value`` file whose keys
are the long flag names (``vols=0.2,0.4``); flags on the command line win.
Without ``--output`` a table goes to ``$LSM_ML_OUTPUT_DIR/<command>.csv`` when
that variable is set, else to stdout. ``elapsed`` columns are wall-clock
seconds at millisecond resolution and are not reproducible; ``--no-timing``
drops them so output is byte-identical for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import data as quotes
from .errors import InsufficientData, LsmError, QuoteParseError, TrainingDiverged
from .experiments import (
    COMPARE_HEADER, COMPARE_ROSTER, SWEEP_HEADER, CompareConfig, ConfigError, SweepConfig,
    grid_values, names, run_compare, run_sweep,
)
from .lsm import write_decisions_csv
from .market import ModelParams
from .metrics import (
    classification_report, format_value, precision_recall_curve, regression_errors, report_row,
    REPORT_HEADER, roc_curve, write_curve_csv,
)
from .paths import simulate_paths, write_paths_csv
from .recurrent import NetworkConfig, make_windows, train

OUTPUT_DIR_ENV = "LSM_ML_OUTPUT_DIR"
SAMPLE_QUOTES = Path(__file__).parent / "data" / "sample_quotes.csv"

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("lsm_ml.cli")


class UsageError(Exception):
    """Bad input detected after argument parsing; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ----------------------------------------------------------------------------- argument types

def _grid(key: str, positive: bool = True):
    def parse(text: str):
        try:
            values = grid_values(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"{key}: {exc}") from None
        if not values:
            raise argparse.ArgumentTypeError(f"{key}: no values given")
        if positive and any(not v > 0 for v in values):
            raise argparse.ArgumentTypeError(f"{key}: values must be positive, got {text!r}")
        return values
    return parse


def _number(key: str, kind=float, low=None, strict=False):
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{key}: {text!r} is not a valid {kind.__name__}") from None
        if kind is float and not math.isfinite(value):
            raise argparse.ArgumentTypeError(f"{key}: must be finite")
        if low is not None and (value <= low if strict else value < low):
            bound = ">" if strict else ">="
            raise argparse.ArgumentTypeError(f"{key}: must be {bound} {low}, got {text}")
        return value
    return parse


def _sizes(key: str):
    def parse(text: str):
        try:
            sizes = tuple(int(p) for p in text.split(",") if p.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"{key}: {text!r} is not a comma list of integers") from None
        if any(s < 1 for s in sizes):
            raise argparse.ArgumentTypeError(f"{key}: sizes must be >= 1")
        return sizes
    return parse


def _common(p: argparse.ArgumentParser, timing: bool = False):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--seed", type=_number("seed", int, 0), default=0)
    p.add_argument("--format", choices=("csv", "table"), default="csv")
    p.add_argument("-o", "--output", help="output file (default: stdout or $%s)" % OUTPUT_DIR_ENV)
    # accepted everywhere; only sweep and compare fan out, others run single-threaded
    p.add_argument("--workers", type=_number("workers", int, 1), default=1)
    if timing:
        p.add_argument("--no-timing", action="store_true", help="omit the elapsed column")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsm-ml", description="American option pricing by regression Monte Carlo.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="price grid over spot, volatility and maturity")
    _common(p, timing=True)
    p.add_argument("--spots", type=_grid("spots"), default=SweepConfig.spots)
    p.add_argument("--vols", type=_grid("vols"), default=SweepConfig.vols)
    p.add_argument("--maturities", type=_grid("maturities"), default=SweepConfig.maturities)
    p.add_argument("--strike", type=_number("strike", float, 0, strict=True), default=100.0)
    p.add_argument("--rate", type=_number("rate"), default=0.04)
    p.add_argument("--kind", choices=("put", "call"), default="put")
    p.add_argument("--paths", type=_number("paths", int, 2), default=10_000)
    p.add_argument("--steps", type=_number("steps", int, 1), default=25)
    p.add_argument("--estimator", type=names, default=("polynomial",), help="comma list of estimators")
    p.add_argument("--order", type=_number("order", int, 0), default=2)
    p.add_argument("--update-rule", default="realized_cashflow")
    p.add_argument("--scope", default="all_paths")
    p.add_argument("--assets", type=_number("assets", int, 1), default=1)
    p.add_argument("--rho", type=_number("rho"), default=0.0)

    p = sub.add_parser("compare", help="every estimator on shared paths plus reference prices")
    _common(p, timing=True)
    p.add_argument("--spot", type=_number("spot", float, 0, strict=True), default=100.0)
    p.add_argument("--strike", type=_number("strike", float, 0, strict=True), default=100.0)
    p.add_argument("--maturity", type=_number("maturity", float, 0, strict=True), default=1.0)
    p.add_argument("--rate", type=_number("rate"), default=0.02)
    p.add_argument("--vol", type=_number("vol", float, 0, strict=True), default=0.4)
    p.add_argument("--kind", choices=("put", "call"), default="put")
    p.add_argument("--paths", type=_number("paths", int, 2), default=10_000)
    p.add_argument("--steps", type=_number("steps", int, 1), default=25)
    p.add_argument("--estimators", type=names, default=COMPARE_ROSTER)
    p.add_argument("--order", type=_number("order", int, 0), default=2)
    p.add_argument("--scope", default="in_the_money_only")
    p.add_argument("--lattice-steps", type=_number("lattice-steps", int, 1), default=2000)
    p.add_argument("--decisions-dir", help="write decisions_<estimator>.csv files here")
    p.add_argument("--dump-paths", help="write the simulated paths as path,step,asset,time,price CSV")

    p = sub.add_parser("metrics", help="classification report from an exercise-decision CSV")
    _common(p)
    p.add_argument("decisions", help="CSV with a score and a label column")
    p.add_argument("--scores", default="score")
    p.add_argument("--labels", default="label")
    p.add_argument("--threshold", type=_number("threshold"), default=0.5)
    p.add_argument("--curves-dir", help="write roc_<name>.csv and pr_<name>.csv here")

    p = sub.add_parser("correlate", help="Pearson matrix of numeric quote columns")
    _common(p)
    p.add_argument("quotes", nargs="?", default=str(SAMPLE_QUOTES), help="quote CSV (default: bundled sample)")
    p.add_argument("--columns", type=names, default=None)
    p.add_argument("--lenient", action="store_true", help="skip bad rows instead of failing")

    p = sub.add_parser("train", help="fit an LSTM or GRU regressor on quote data")
    _common(p)
    p.add_argument("quotes", nargs="?", default=str(SAMPLE_QUOTES))
    p.add_argument("--target", default="bid")
    p.add_argument("--features", type=names, default=None, help="default: every other numeric column")
    p.add_argument("--cell", choices=("lstm", "gru"), default="gru")
    p.add_argument("--hidden", type=_sizes("hidden"), default=(8,))
    p.add_argument("--dense", type=_sizes("dense"), default=())
    p.add_argument("--activation", choices=("relu", "tanh"), default="relu")
    p.add_argument("--epochs", type=_number("epochs", int, 0), default=200)
    p.add_argument("--batch", type=_number("batch", int, 1), default=64)
    p.add_argument("--learning-rate", type=_number("learning-rate", float, 0), default=0.001)
    p.add_argument("--window", type=_number("window", int, 1), default=1)
    p.add_argument("--out-dir", help="history, model and metrics files (default: $%s or .)" % OUTPUT_DIR_ENV)
    return parser


# ----------------------------------------------------------------------------- config files

def read_config(path: str) -> list[tuple[str, str]]:
    pairs = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config: line {n} is not key=value: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs.append((key.replace("_", "-"), value))
    return pairs


def _config_argv(sub: argparse.ArgumentParser, pairs) -> list[str]:
    """Turn config pairs into flags understood by ``sub``."""
    actions = {opt: a for a in sub._actions for opt in a.option_strings}
    argv = []
    for key, value in pairs:
        flag = f"--{key}"
        action = actions.get(flag)
        if action is None or key == "config":
            raise UsageError(f"{key}: unknown configuration key")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"{key}: expected true or false, got {value!r}")
        else:
            argv.extend([flag, value])
    return argv


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        pairs = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        cut = argv.index(args.command) + 1
        # file-derived flags go first so explicit flags, parsed later, override them
        args = parser.parse_args(argv[:cut] + _config_argv(sub, pairs) + argv[cut:])
    return args


# ----------------------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_value(v)


def _elapsed(seconds: float) -> str:
    # millisecond resolution, rounded up so a measured duration never prints as zero
    return f"{math.ceil(seconds * 1000.0) / 1000.0:.3f}"


def render(header, rows, fmt: str) -> str:
    rows = [[_fmt(v) for v in r] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    widths = [max(len(str(h)), *(len(r[j]) for r in rows)) if rows else len(str(h)) for j, h in enumerate(header)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def _default_dir() -> Path | None:
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else None


def emit(text: str, output: str | None, command: str) -> None:
    target = Path(output) if output else None
    if target is None and _default_dir() is not None:
        target = _default_dir() / f"{command}.csv"
    if target is None:
        sys.stdout.write(text)
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8", newline="")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(header, rows, "csv"), encoding="utf-8", newline="")


# ----------------------------------------------------------------------------- commands

def cmd_sweep(args) -> int:
    cfg = SweepConfig(
        spots=args.spots, vols=args.vols, maturities=args.maturities, strike=args.strike, rate=args.rate,
        kind=args.kind, n_paths=args.paths, n_steps=args.steps, estimators=args.estimator, order=args.order,
        update_rule=args.update_rule, scope=args.scope, assets=args.assets, rho=args.rho, seed=args.seed,
        workers=args.workers,
    )
    rows = run_sweep(cfg)
    header = list(SWEEP_HEADER)
    out = []
    for r in rows:
        line = [r.estimator, cfg.assets, r.spot, r.vol, r.maturity, r.price, r.std_error, r.european, r.european_se]
        if not args.no_timing:
            line.append(_elapsed(r.elapsed))
        out.append(line)
    if args.no_timing:
        header.remove("elapsed")
    emit(render(header, out, args.format), args.output, "sweep")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = CompareConfig(
        spot=args.spot, strike=args.strike, maturity=args.maturity, rate=args.rate, vol=args.vol, kind=args.kind,
        n_paths=args.paths, n_steps=args.steps, estimators=args.estimators, order=args.order, scope=args.scope,
        lattice_steps=args.lattice_steps, seed=args.seed, workers=args.workers,
        record_decisions=args.decisions_dir is not None,
    )
    rows = run_compare(cfg)
    header = list(COMPARE_HEADER)
    out = []
    for r in rows:
        line = [r.method, r.price, r.std_error]
        if not args.no_timing:
            line.append(_elapsed(r.elapsed))
        out.append(line)
        if r.decisions is not None:
            path = Path(args.decisions_dir) / f"decisions_{r.method}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                write_decisions_csv(r.decisions, fh)
    if args.no_timing:
        header.remove("elapsed")
    if args.dump_paths:
        paths = simulate_paths(ModelParams.single(cfg.spot, cfg.rate, cfg.vol), cfg.n_paths, cfg.n_steps,
                               cfg.maturity, seed=cfg.seed, workers=cfg.workers)
        with open(args.dump_paths, "w", encoding="utf-8", newline="") as fh:
            write_paths_csv(paths, fh)
    emit(render(header, out, args.format), args.output, "compare")
    return EXIT_OK


def _read_columns(path: str, wanted: list[str]) -> dict[str, list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in wanted if c not in header]
            if missing:
                raise UsageError(f"{missing[0]}: column not found in {path} (have {', '.join(header)})")
            cols = {c: [] for c in wanted}
            for raw in reader:
                for c in wanted:
                    cols[c].append(raw[c])
    except OSError as exc:
        raise UsageError(f"decisions: cannot read {path}: {exc.strerror}") from None
    return cols


def cmd_metrics(args) -> int:
    cols = _read_columns(args.decisions, [args.scores, args.labels])
    try:
        scores = np.array([float(v) for v in cols[args.scores]])
        labels = np.array([float(v) for v in cols[args.labels]])
    except ValueError as exc:
        raise UsageError(f"{args.scores}/{args.labels}: non-numeric cell ({exc})") from None
    try:
        report = classification_report(labels, scores, args.threshold)
    except LsmError as exc:
        raise UsageError(f"decisions: {exc}") from None
    name = Path(args.decisions).stem
    emit(render(REPORT_HEADER, [report_row(report, name)], args.format), args.output, "metrics")
    if args.curves_dir:
        base = Path(args.curves_dir)
        base.mkdir(parents=True, exist_ok=True)
        roc = roc_curve(labels, scores)
        if roc is not None:
            with open(base / f"roc_{name}.csv", "w", encoding="utf-8", newline="") as fh:
                write_curve_csv(fh, "fpr", "tpr", roc[0], roc[1])
        pr = precision_recall_curve(labels, scores)
        if pr is not None:
            with open(base / f"pr_{name}.csv", "w", encoding="utf-8", newline="") as fh:
                write_curve_csv(fh, "recall", "precision", pr[0], pr[1])
    return EXIT_OK


def _load_quotes(path: str, strict: bool = True) -> quotes.QuoteTable:
    try:
        table = quotes.read_quotes(path, strict=strict)
    except OSError as exc:
        raise UsageError(f"quotes: cannot read {path}: {exc.strerror}") from None
    except QuoteParseError as exc:
        raise UsageError(f"{exc.column or 'quotes'}: {exc}") from None
    for d in table.diagnostics:
        log.warning("skipped row %d (%s): %s", d.row, d.column or "-", d.reason)
    return table


def cmd_correlate(args) -> int:
    table = _load_quotes(args.quotes, strict=not args.lenient)
    try:
        result = quotes.correlation_matrix(table, args.columns)
    except QuoteParseError as exc:
        raise UsageError(f"columns: {exc}") from None
    for c in result.constant_columns:
        log.warning("column %s is constant; its correlations are undefined", c)
    rows = [[name, *row] for name, row in zip(result.columns, result.matrix)]
    emit(render(["", *result.columns], rows, args.format), args.output, "correlate")
    return EXIT_OK


def cmd_train(args) -> int:
    table = _load_quotes(args.quotes)
    numeric = quotes.NUMERIC_COLUMNS
    if args.target not in numeric:
        raise UsageError(f"target: {args.target!r} is not a numeric column")
    features = args.features or tuple(c for c in numeric if c != args.target)
    for c in features:
        if c not in numeric:
            raise UsageError(f"features: {c!r} is not a numeric column")
    X = table.matrix(features)
    y = table.column(args.target)
    keep = ~(np.isnan(X).any(axis=1) | np.isnan(y))
    if not keep.all():
        log.warning("dropped %d rows with missing values", int((~keep).sum()))
    X, y = X[keep], y[keep]
    try:
        config = NetworkConfig(cell=args.cell, hidden_sizes=args.hidden, dense_sizes=args.dense,
                               activation=args.activation, epochs=args.epochs, batch_size=args.batch,
                               learning_rate=args.learning_rate, window=args.window, seed=args.seed)
        model, history, (_, val_idx) = train(config, X, y)
    except InsufficientData as exc:
        raise UsageError(f"quotes: {exc}") from None
    Xw, yw = make_windows(X, y, config.window)
    errors = regression_errors(yw[val_idx], model.predict(Xw[val_idx]))

    out_dir = Path(args.out_dir) if args.out_dir else (_default_dir() or Path("."))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"history_{args.cell}.csv", "w", encoding="utf-8", newline="") as fh:
        history.write_csv(fh)
    model.save(out_dir / f"model_{args.cell}.npz")
    header = ["cell", "epochs", "n_train", "n_val", "mae", "mse", "rmse"]
    row = [args.cell, len(history), len(yw) - len(val_idx), len(val_idx), *errors]
    text = render(header, [row], args.format)
    (out_dir / f"metrics_{args.cell}.csv").write_text(render(header, [row], "csv"), encoding="utf-8", newline="")
    emit(text, args.output, "train")
    return EXIT_OK


COMMANDS = {
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "metrics": cmd_metrics,
    "correlate": cmd_correlate,
    "train": cmd_train,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"lsm-ml: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # --help exits 0 through argparse
        return int(exc.code or 0)
    if args.verbose:
        logging.getLogger("lsm_ml").setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"lsm-ml: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"lsm-ml: training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (LsmError, OSError, ArithmeticError) as exc:
        print(f"lsm-ml: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
