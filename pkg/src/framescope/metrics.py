"""Confusion matrices, per-class rates, and throughput accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyConfusion, LabelOutOfRange


def confusion(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """C x C counts; rows are true classes, columns are predictions."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise LabelOutOfRange("label vectors differ in length")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    if t.size == 0:
        return matrix
    if t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes:
        raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    np.add.at(matrix, (t, p), 1)
    return matrix


@dataclass(frozen=True)
class MetricSummary:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    macro_precision: float
    macro_recall: float
    zero_denominator_classes: list[int]


def metrics(conf: np.ndarray) -> MetricSummary:
    """Accuracy plus per-class and macro precision/recall.

    Zero-denominator conventions keep the report total: a class that is
    never predicted has precision 0, an absent class has recall 0. Macro
    recall averages over classes present in the truth; macro precision
    over classes that are present or were ever predicted.
    """
    conf = np.asarray(conf, dtype=np.int64)
    total = int(conf.sum())
    if total < 1:
        raise EmptyConfusion("confusion matrix is empty")
    diag = np.diag(conf).astype(np.float64)
    row = conf.sum(axis=1).astype(np.float64)
    col = conf.sum(axis=0).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, diag / np.maximum(col, 1), 0.0)
        recall = np.where(row > 0, diag / np.maximum(row, 1), 0.0)
    present = row > 0
    scored_p = present | (col > 0)
    flagged = [int(c) for c in np.flatnonzero((present & (col == 0)) | (~present & (col > 0)))]
    return MetricSummary(
        accuracy=float(np.trace(conf)) / total,
        precision=precision,
        recall=recall,
        macro_precision=float(precision[scored_p].mean()) if scored_p.any() else 0.0,
        macro_recall=float(recall[present].mean()) if present.any() else 0.0,
        zero_denominator_classes=flagged,
    )


def realtime_factor(num_items: int, frames_per_item: float, fps: float, wall_seconds: float) -> float:
    """Video-duration-processed over wall-clock time."""
    if num_items <= 0 or frames_per_item <= 0 or fps <= 0 or wall_seconds <= 0:
        raise ValueError("all throughput inputs must be positive")
    return (num_items * frames_per_item / fps) / wall_seconds


@dataclass
class EvalReport:
    """One evaluation run: counts, rates, and timing."""

    class_names: list[str]
    confusion: np.ndarray
    summary: MetricSummary
    wall_time_seconds: float = 0.0
    frames_processed: int = 0
    real_time_factor: float = 0.0
    notes: list[str] = field(default_factory=list)

    def rows(self) -> list[dict]:
        """Machine-readable records, one per class plus one overall row."""
        out = [
            {
                "record": "overall",
                "accuracy": self.summary.accuracy,
                "macro_precision": self.summary.macro_precision,
                "macro_recall": self.summary.macro_recall,
                "items": int(self.confusion.sum()),
                "wall_time_seconds": self.wall_time_seconds,
                "frames_processed": self.frames_processed,
                "real_time_factor": self.real_time_factor,
            }
        ]
        for i, name in enumerate(self.class_names):
            out.append(
                {
                    "record": "class",
                    "class": name,
                    "precision": float(self.summary.precision[i]),
                    "recall": float(self.summary.recall[i]),
                    "true_count": int(self.confusion[i].sum()),
                    "predicted_count": int(self.confusion[:, i].sum()),
                }
            )
        return out

    def table(self) -> str:
        lines = [
            f"items: {int(self.confusion.sum())}  accuracy: {self.summary.accuracy:.4f}"
            f"  macro precision: {self.summary.macro_precision:.4f}"
            f"  macro recall: {self.summary.macro_recall:.4f}",
        ]
        if self.wall_time_seconds > 0:
            lines.append(
                f"wall time: {self.wall_time_seconds:.3f}s  frames: {self.frames_processed}"
                f"  real-time factor: {self.real_time_factor:.1f}"
            )
        width = max((len(n) for n in self.class_names), default=5)
        lines.append(f"{'class':<{width}}  precision  recall  true  predicted")
        for i, name in enumerate(self.class_names):
            lines.append(
                f"{name:<{width}}  {self.summary.precision[i]:9.4f}"
                f"  {self.summary.recall[i]:6.4f}"
                f"  {int(self.confusion[i].sum()):4d}"
                f"  {int(self.confusion[:, i].sum()):9d}"
            )
        if self.summary.zero_denominator_classes:
            names = [self.class_names[i] for i in self.summary.zero_denominator_classes]
            lines.append(f"zero-denominator classes (rate reported as 0): {names}")
        for note in self.notes:
            lines.append(note)
        return "\n".join(lines)
