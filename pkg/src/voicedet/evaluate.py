"""Evaluation: ROC / equal error rate, per-class accuracy, reports.

Scores are "probability the clip is synthetic"; a clip is classified
synthetic when its score is at or above the threshold.  The false
accept rate is the fraction of synthetic clips passed as real and the
false reject rate is the fraction of real clips flagged as synthetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, SingleClassLabels
from .validation import check_same_length

REPORT_CSV_HEADER = "dataset,model,classifier,task,family,synthetic_acc,real_acc,eer"


@dataclass(frozen=True)
class RocCurve:
    """Operating points swept from the highest threshold to the lowest.

    ``thresholds`` starts at +inf (everything classified real: FAR 1,
    FRR 0) and ends at -inf (everything synthetic: FAR 0, FRR 1), with
    the distinct scores in between in descending order.
    """

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray


def roc_curve(scores: Sequence[float], is_synthetic: Sequence[bool]) -> RocCurve:
    """Sweep every distinct score as a threshold.

    At threshold ``t`` a clip is called synthetic iff ``score >= t``;
    FAR(t) is the synthetic fraction scoring below ``t`` and FRR(t) the
    real fraction scoring at or above it.  Both rates are monotone in
    the threshold, which is what makes the equal-error crossing unique.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.asarray(is_synthetic, dtype=bool)
    check_same_length(scores, mask, "scores and labels")
    n_syn = int(mask.sum())
    n_real = int((~mask).sum())
    if n_syn == 0 or n_real == 0:
        raise SingleClassLabels("ROC needs both real and synthetic examples")

    syn_sorted = np.sort(scores[mask])
    real_sorted = np.sort(scores[~mask])
    thresholds = np.concatenate(([np.inf], np.unique(scores)[::-1], [-np.inf]))
    # count of synthetic scores strictly below t / real scores >= t
    far = np.searchsorted(syn_sorted, thresholds, side="left") / n_syn
    frr = (n_real - np.searchsorted(real_sorted, thresholds, side="left")) / n_real
    return RocCurve(thresholds, far, frr)


def compute_eer(roc: RocCurve) -> tuple[float, float]:
    """Equal error rate (percent) and the threshold achieving it.

    Walks the sweep to the first point where FAR and FRR meet or cross;
    between adjacent points both rates are interpolated linearly.
    """
    far, frr, thr = roc.far, roc.frr, roc.thresholds
    diff = far - frr
    for i in range(len(thr)):
        if diff[i] == 0.0:
            return float(far[i] * 100.0), float(thr[i])
        if i + 1 < len(thr) and diff[i] > 0.0 > diff[i + 1]:
            # Linear crossing between points i and i+1.
            alpha = diff[i] / (diff[i] - diff[i + 1])
            eer = far[i] + alpha * (far[i + 1] - far[i])
            lo, hi = thr[i + 1], thr[i]
            if np.isinf(hi):
                t_star = float(lo)
            elif np.isinf(lo):
                t_star = float(hi)
            else:
                t_star = float(hi + alpha * (lo - hi))
            return float(eer * 100.0), t_star
    # Monotone rates guarantee a crossing; defensive fallback.
    j = int(np.argmin(np.abs(diff)))
    return float(0.5 * (far[j] + frr[j]) * 100.0), float(thr[j])


def macro_accuracy(predicted: Sequence[str], actual: Sequence[str]) -> float:
    """Mean of per-class accuracies (classes weighted equally)."""
    check_same_length(predicted, actual, "predictions and labels")
    actual = np.asarray(list(actual))
    predicted = np.asarray(list(predicted))
    accs = [
        float(np.mean(predicted[actual == cls] == cls)) for cls in np.unique(actual)
    ]
    return float(np.mean(accs))


def class_accuracies(
    proba: np.ndarray,
    labels: Sequence[str],
    classes: Sequence[str],
    task: str,
    threshold: float = 0.5,
) -> tuple[float, float, np.ndarray]:
    """Per-class accuracies in percent plus the confusion matrix.

    Single-class: a clip is called synthetic when its synthetic
    probability is at or above ``threshold``.  Multi-class: argmax over
    all classes, and a synthetic clip only counts as correct when its
    own architecture is predicted.  Confusion rows are true classes,
    columns predicted, both in ``classes`` order.
    """
    proba = np.asarray(proba, dtype=np.float64)
    labels = list(labels)
    if proba.shape[0] != len(labels):
        raise LengthMismatch(f"{proba.shape[0]} probability rows vs {len(labels)} labels")
    if proba.shape[1] != len(classes):
        raise LengthMismatch(f"{proba.shape[1]} probability columns vs {len(classes)} classes")
    classes = list(classes)

    if task == "single":
        syn_col = classes.index("synthetic")
        predicted = [
            "synthetic" if proba[i, syn_col] >= threshold else "real"
            for i in range(len(labels))
        ]
    elif task == "multi":
        predicted = [classes[j] for j in np.argmax(proba, axis=1)]
    else:
        raise ValueError(f"unknown task {task!r}")

    index = {c: j for j, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for true, pred in zip(labels, predicted):
        if true not in index:
            raise ValueError(f"label {true!r} not among classes {classes}")
        confusion[index[true], index[pred]] += 1

    real_mask = np.array([lab == "real" for lab in labels])
    if not real_mask.any() or real_mask.all():
        raise SingleClassLabels("accuracy split needs both real and synthetic clips")
    hits = np.array([p == t for p, t in zip(predicted, labels)])
    syn_acc = float(hits[~real_mask].mean() * 100.0)
    real_acc = float(hits[real_mask].mean() * 100.0)
    return syn_acc, real_acc, confusion


@dataclass
class EvalReport:
    """One evaluated (dataset, model) cell of the results table."""

    dataset: str
    model: str
    classifier: str
    task: str
    family: str
    synthetic_acc: float
    real_acc: float
    eer: float | None  # None for multi-class rows, shown as "-"
    confusion: np.ndarray | None = field(default=None, compare=False, repr=False)


def _fmt_rate(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def report_csv(reports: Sequence[EvalReport]) -> str:
    """Machine-readable CSV, one row per report."""
    lines = [REPORT_CSV_HEADER]
    for r in reports:
        eer = "-" if r.eer is None else repr(float(r.eer))
        lines.append(
            f"{r.dataset},{r.model},{r.classifier},{r.task},{r.family},"
            f"{repr(float(r.synthetic_acc))},{repr(float(r.real_acc))},{eer}"
        )
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> list[EvalReport]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != REPORT_CSV_HEADER:
        raise ValueError("missing report CSV header")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 8:
            raise ValueError(f"bad report row: {ln!r}")
        dataset, model, classifier, task, family, syn, real, eer = parts
        out.append(
            EvalReport(
                dataset,
                model,
                classifier,
                task,
                family,
                float(syn),
                float(real),
                None if eer == "-" else float(eer),
            )
        )
    return out


def report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned text table grouped by dataset/classifier/task."""
    header = (
        "dataset",
        "classifier",
        "task",
        "family",
        "syn_acc%",
        "real_acc%",
        "eer%",
    )
    rows = [header]
    ordered = sorted(reports, key=lambda r: (r.dataset, r.classifier, r.task, r.family))
    for r in ordered:
        rows.append(
            (
                r.dataset,
                r.classifier,
                r.task,
                r.family,
                _fmt_rate(r.synthetic_acc),
                _fmt_rate(r.real_acc),
                _fmt_rate(r.eer),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for idx, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(lines) + "\n"
