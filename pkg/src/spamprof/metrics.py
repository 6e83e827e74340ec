"""Classifier performance measures.

Confusion tables, the spam-filtering error rates fpr = FP/(TN+FP) and
fnr = FN/(TP+FN), ROC curves with trapezoidal AUC, operating points at a
fixed false-positive rate, and the per-class distribution of header line
counts. Spam is the positive class throughout: a false positive is a ham
email classified as spam.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .email_model import RawEmail, count_header_lines

POSITIVE_CLASS = "spam"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix: rows are true classes, columns predictions."""

    counts: np.ndarray
    classes: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def format(self) -> str:
        """Aligned text table, one row per true class."""
        names = list(self.classes)
        width = max(len(n) for n in names + ["true\\pred"])
        cell = max(width, max(len(str(int(v))) for v in self.counts.ravel()))
        head = "true\\pred".ljust(width) + "".join(f"  {n:>{cell}}" for n in names)
        rows = [
            name.ljust(width) + "".join(f"  {int(v):>{cell}}" for v in row)
            for name, row in zip(names, self.counts)
        ]
        return "\n".join([head] + rows)


def confusion(true_labels, predicted_labels, class_order) -> ConfusionMatrix:
    """Count matrix with entry (i, j) = emails of true class i predicted j."""
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise ValueError(
            f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions"
        )
    classes = tuple(class_order)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in index:
            raise ValueError(f"true label {t!r} not in class order {classes}")
        if p not in index:
            raise ValueError(f"predicted label {p!r} not in class order {classes}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts=counts, classes=classes)


@dataclass(frozen=True)
class BinaryRates:
    """fpr and fnr; a zero denominator yields 0.0 with the flag cleared."""

    fpr: float
    fnr: float
    fpr_defined: bool = True
    fnr_defined: bool = True


def fpr_fnr(matrix: ConfusionMatrix, positive_class: str = POSITIVE_CLASS) -> BinaryRates:
    """False positive and false negative rates of a binary confusion matrix."""
    if len(matrix.classes) != 2:
        raise ValueError(f"fpr/fnr need a binary matrix, got classes {matrix.classes}")
    if positive_class not in matrix.classes:
        raise ValueError(f"positive class {positive_class!r} not in {matrix.classes}")
    pos = matrix.classes.index(positive_class)
    neg = 1 - pos
    tp = int(matrix.counts[pos, pos])
    fn = int(matrix.counts[pos, neg])
    tn = int(matrix.counts[neg, neg])
    fp = int(matrix.counts[neg, pos])
    fpr_den = tn + fp
    fnr_den = tp + fn
    return BinaryRates(
        fpr=fp / fpr_den if fpr_den else 0.0,
        fnr=fn / fnr_den if fnr_den else 0.0,
        fpr_defined=fpr_den > 0,
        fnr_defined=fnr_den > 0,
    )


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over the decision threshold, plus the AUC.

    ``fpr`` and ``tpr`` are non-decreasing from (0, 0) to (1, 1);
    point i applies the rule "positive iff score >= thresholds[i]".
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc(scores, labels, positive_class: str = POSITIVE_CLASS) -> RocCurve:
    """ROC curve of positive-class scores; requires both classes present.

    Tied scores cross the threshold together and collapse into a single
    point. The AUC is the trapezoidal area, accumulated in exact integer
    arithmetic so it equals the probability that a random positive/negative
    pair is ranked correctly (ties counted half).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("scores must be a non-empty 1-d sequence")
    if not np.isfinite(s).all():
        raise ValueError("scores contain non-finite values")
    labels = list(labels)
    y = np.fromiter((l == positive_class for l in labels), dtype=bool, count=len(labels))
    if len(y) != len(s):
        raise ValueError(f"{len(s)} scores vs {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    cum_tp = np.cumsum(y_sorted)
    cum_fp = np.cumsum(~y_sorted)
    # one point per distinct score: the last index of each tie group
    last = np.flatnonzero(np.diff(s_sorted) != 0)
    last = np.append(last, len(s_sorted) - 1)
    tp = np.concatenate(([0], cum_tp[last]))
    fp = np.concatenate(([0], cum_fp[last]))
    thresholds = np.concatenate(([np.inf], s_sorted[last]))

    area2 = int(np.sum(np.diff(fp) * (tp[:-1] + tp[1:])))  # twice the area, integer
    return RocCurve(
        fpr=fp / n_neg,
        tpr=tp / n_pos,
        thresholds=thresholds,
        auc=area2 / (2 * n_neg * n_pos),
    )


@dataclass(frozen=True)
class OperatingPoint:
    """A threshold meeting a false-positive budget, and the fnr it attains."""

    target_fpr: float
    achieved_fpr: float
    fnr: float
    threshold: float


def fnr_at_fpr(scores, labels, target_fpr: float,
               positive_class: str = POSITIVE_CLASS) -> OperatingPoint:
    """Lowest fnr among thresholds whose fpr stays within the target.

    No interpolation between thresholds: the constraint is a hard
    ``achieved_fpr <= target_fpr``. When several thresholds reach the
    minimal fnr, the one with the smallest fpr is reported. If nothing but
    the predict-nothing threshold fits, the fnr is 1 there.
    """
    if not 0.0 < target_fpr < 1.0:
        raise ValueError(f"target fpr must be in (0, 1), got {target_fpr}")
    curve = roc(scores, labels, positive_class)
    feasible = int(np.searchsorted(curve.fpr, target_fpr, side="right"))  # fpr is sorted
    best_tpr = curve.tpr[feasible - 1]
    i = int(np.flatnonzero(curve.tpr[:feasible] == best_tpr)[0])
    return OperatingPoint(
        target_fpr=target_fpr,
        achieved_fpr=float(curve.fpr[i]),
        fnr=float(1.0 - curve.tpr[i]),
        threshold=float(curve.thresholds[i]),
    )


def header_line_histogram(emails: Iterable[RawEmail], cls: str) -> dict[int, int]:
    """Frequency table of header line counts for one class."""
    hist: dict[int, int] = {}
    for email in emails:
        if email.label != cls:
            continue
        lines = count_header_lines(email)
        hist[lines] = hist.get(lines, 0) + 1
    return hist


def header_line_histograms(emails: Iterable[RawEmail]) -> dict[str, dict[int, int]]:
    """Header line count distribution for every class in one pass."""
    hists: dict[str, dict[int, int]] = {}
    for email in emails:
        label = email.label if email.label is not None else ""
        hist = hists.setdefault(label, {})
        lines = count_header_lines(email)
        hist[lines] = hist.get(lines, 0) + 1
    return hists


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    """Write the curve as ``fpr,tpr,threshold`` rows with LF line endings."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("fpr,tpr,threshold\n")
        for f, t, thr in zip(curve.fpr, curve.tpr, curve.thresholds):
            fh.write(f"{float(f)!r},{float(t)!r},{float(thr)!r}\n")


def write_header_histogram_csv(hists: dict[str, dict[int, int]], path: str | Path) -> None:
    """Write ``class,line_count,email_count`` rows sorted for stable output."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("class,line_count,email_count\n")
        for cls in sorted(hists):
            for lines in sorted(hists[cls]):
                fh.write(f"{cls},{lines},{hists[cls][lines]}\n")
