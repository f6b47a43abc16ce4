"""Regression errors and binary-classification diagnostics.

Undefined quantities (precision with no positive predictions, ROC-AUC with a
single class, ...) are returned as ``None`` and serialised as ``undefined``;
they are never replaced by 0 or 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import LengthMismatch, LsmError, NonBinaryInput

UNDEFINED = "undefined"


class RegressionErrors(NamedTuple):
    mae: float
    mse: float
    rmse: float


def regression_errors(y, y_hat) -> RegressionErrors:
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise LengthMismatch(f"{y.shape[0]} targets vs {y_hat.shape[0]} predictions")
    if y.size == 0:
        raise LengthMismatch("need at least one observation")
    err = y - y_hat
    mse = float(np.mean(err**2))
    return RegressionErrors(float(np.mean(np.abs(err))), mse, math.sqrt(mse))


def _binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values).ravel()
    if arr.dtype == bool:
        return arr.astype(int)
    if not np.all((arr == 0) | (arr == 1)):
        raise NonBinaryInput(f"{name} must contain only 0 and 1")
    return arr.astype(int)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> Optional[float]:
        return _ratio(self.tp + self.tn, self.n)

    @property
    def precision(self) -> Optional[float]:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> Optional[float]:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> Optional[float]:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    def as_matrix(self) -> np.ndarray:
        """``[[tn, fp], [fn, tp]]``: rows are true class, columns predicted."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])


def confusion(labels, predicted) -> ConfusionMatrix:
    labels = _binary(labels, "labels")
    predicted = _binary(predicted, "predicted")
    if labels.shape != predicted.shape:
        raise LengthMismatch(f"{labels.size} labels vs {predicted.size} predictions")
    return ConfusionMatrix(
        tp=int(np.sum((labels == 1) & (predicted == 1))),
        tn=int(np.sum((labels == 0) & (predicted == 0))),
        fp=int(np.sum((labels == 0) & (predicted == 1))),
        fn=int(np.sum((labels == 1) & (predicted == 0))),
    )


def _scores(scores, n: int) -> np.ndarray:
    s = np.asarray(scores, dtype=float).ravel()
    if s.shape[0] != n:
        raise LengthMismatch(f"{n} labels vs {s.shape[0]} scores")
    if np.any(np.isnan(s)):
        raise LsmError("scores contain NaN")
    return s


def _threshold_counts(labels: np.ndarray, scores: np.ndarray):
    """Cumulative (tp, fp) counts when predicting positive for score >= each distinct score, high to low."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lab = labels[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(lab)[last_of_group]
    fp = (last_of_group + 1) - tp
    return tp, fp, s[last_of_group]


def roc_curve(labels, scores):
    """Return ``(fpr, tpr, thresholds)`` starting at (0, 0); None for a single-class sample."""
    labels = _binary(labels, "labels")
    scores = _scores(scores, labels.size)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        return None
    tp, fp, thr = _threshold_counts(labels, scores)
    tpr = np.r_[0, tp] / pos
    fpr = np.r_[0, fp] / neg
    return fpr, tpr, np.r_[np.inf, thr]


def roc_auc(labels, scores) -> Optional[float]:
    """Trapezoidal area under the ROC curve over all distinct-score thresholds.

    Tied scores form one diagonal segment, so ties count one half, and the area
    equals P(score_pos > score_neg) + P(tie) / 2. Integer counts keep it exact
    until the final division.
    """
    labels = _binary(labels, "labels")
    scores = _scores(scores, labels.size)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        return None
    tp, fp, _ = _threshold_counts(labels, scores)
    tp = np.r_[0, tp].astype(np.int64)
    fp = np.r_[0, fp].astype(np.int64)
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return twice_area / (2 * pos * neg)


def precision_recall_curve(labels, scores):
    """Return ``(recall, precision, thresholds)`` ordered by increasing recall."""
    labels = _binary(labels, "labels")
    scores = _scores(scores, labels.size)
    pos = int(labels.sum())
    if pos == 0:
        return None
    tp, fp, thr = _threshold_counts(labels, scores)
    precision = tp / (tp + fp)
    recall = tp / pos
    return np.r_[0.0, recall], np.r_[1.0, precision], np.r_[np.inf, thr]


def pr_auc(labels, scores) -> Optional[float]:
    """Step-wise area under the precision-recall curve (average precision).

    ``sum_k (R_k - R_{k-1}) * P_k`` over distinct-score thresholds. Linear
    interpolation between PR points is not used; it overstates the area.
    """
    curve = precision_recall_curve(labels, scores)
    if curve is None:
        return None
    recall, precision, _ = curve
    return float(np.sum(np.diff(recall) * precision[1:]))


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    roc_auc: Optional[float]
    pr_auc: Optional[float]
    threshold: float
    confusion: ConfusionMatrix

    METRICS = ("accuracy", "precision", "recall", "f1", "roc_auc", "pr_auc")

    def values(self) -> dict[str, Optional[float]]:
        return {m: getattr(self, m) for m in self.METRICS}


def classification_report(labels, scores, threshold: float = 0.5) -> ClassificationReport:
    """Thresholded metrics (positive when ``score > threshold``) plus ROC/PR areas."""
    labels = _binary(labels, "labels")
    scores = _scores(scores, labels.size)
    if np.any((scores < 0) | (scores > 1)):
        raise LsmError("scores must be probabilities in [0, 1]")
    cm = confusion(labels, (scores > threshold).astype(int))
    return ClassificationReport(
        accuracy=cm.accuracy,
        precision=cm.precision,
        recall=cm.recall,
        f1=cm.f1,
        roc_auc=roc_auc(labels, scores),
        pr_auc=pr_auc(labels, scores),
        threshold=threshold,
        confusion=cm,
    )


def format_value(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return UNDEFINED
    return repr(float(value))


REPORT_HEADER = ["model", *ClassificationReport.METRICS, "threshold", "tp", "tn", "fp", "fn"]


def report_row(report: ClassificationReport, model: str = "") -> list[str]:
    cm = report.confusion
    return [model, *(format_value(v) for v in report.values().values()), repr(report.threshold),
            str(cm.tp), str(cm.tn), str(cm.fp), str(cm.fn)]


def write_report_csv(reports: dict[str, ClassificationReport], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for model, rep in reports.items():
        writer.writerow(report_row(rep, model))


def write_curve_csv(stream, x_name: str, y_name: str, x, y) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([x_name, y_name])
    for a, b in zip(np.asarray(x, dtype=float), np.asarray(y, dtype=float)):
        writer.writerow([repr(float(a)), repr(float(b))])
