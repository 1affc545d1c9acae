"""Multi-label evaluation: per-label confusion counts, macro and micro P/R/F1.

Conventions: any 0/0 precision, recall, or F1 term is defined as 0. The
headline macro F1 is the harmonic mean of macro precision and macro recall;
the arithmetic mean of per-label F1 values is reported separately as
`macro_f1_by_class` because the two readings differ in general.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, ShapeMismatchError

__all__ = ["ConfusionCounts", "MetricsReport", "confusion", "macro_prf", "micro_prf", "compute_report"]


@dataclass
class ConfusionCounts:
    tp: np.ndarray  # (c,) int64
    fp: np.ndarray
    fn: np.ndarray
    n_docs: int

    @property
    def n_labels(self) -> int:
        return len(self.tp)


@dataclass
class MetricsReport:
    precision: np.ndarray  # per label
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_f1_by_class: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    counts: ConfusionCounts

    def to_dict(self, labels: list[str] | None = None) -> dict:
        c = self.counts.n_labels
        names = labels if labels is not None else [str(i) for i in range(c)]
        per_label = [
            {
                "label": names[i],
                "tp": int(self.counts.tp[i]),
                "fp": int(self.counts.fp[i]),
                "fn": int(self.counts.fn[i]),
                "precision": float(self.precision[i]),
                "recall": float(self.recall[i]),
                "f1": float(self.f1[i]),
            }
            for i in range(c)
        ]
        return {
            "n_docs": self.counts.n_docs,
            "n_labels": c,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "macro_f1_by_class": self.macro_f1_by_class,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "per_label": per_label,
        }


def _safe_div(num: np.ndarray | float, den: np.ndarray | float):
    """Elementwise num/den with 0/0 -> 0."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out if out.ndim else float(out)


def _harmonic(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def confusion(predictions: np.ndarray, targets: np.ndarray) -> ConfusionCounts:
    """Per-label TP/FP/FN from (n_docs, c) boolean matrices."""
    predictions = np.asarray(predictions, dtype=bool)
    targets = np.asarray(targets, dtype=bool)
    if predictions.shape != targets.shape or predictions.ndim != 2:
        raise ShapeMismatchError(f"predictions {predictions.shape} vs targets {targets.shape}")
    if predictions.shape[0] == 0:
        raise EmptyDatasetError("confusion counts need at least one document")
    tp = (predictions & targets).sum(axis=0).astype(np.int64)
    fp = (predictions & ~targets).sum(axis=0).astype(np.int64)
    fn = (~predictions & targets).sum(axis=0).astype(np.int64)
    return ConfusionCounts(tp, fp, fn, n_docs=predictions.shape[0])


def macro_prf(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Class-averaged precision and recall; F1 is their harmonic mean."""
    p = float(np.mean(_safe_div(counts.tp, counts.tp + counts.fp)))
    r = float(np.mean(_safe_div(counts.tp, counts.tp + counts.fn)))
    return p, r, _harmonic(p, r)


def micro_prf(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Precision and recall over pooled counts; F1 is their harmonic mean."""
    tp, fp, fn = int(counts.tp.sum()), int(counts.fp.sum()), int(counts.fn.sum())
    p = _safe_div(tp, tp + fp)
    r = _safe_div(tp, tp + fn)
    return p, r, _harmonic(p, r)


def compute_report(predictions: np.ndarray, targets: np.ndarray) -> MetricsReport:
    """Full report from boolean prediction/target matrices."""
    counts = confusion(predictions, targets)
    per_p = _safe_div(counts.tp, counts.tp + counts.fp)
    per_r = _safe_div(counts.tp, counts.tp + counts.fn)
    per_f = np.array([_harmonic(p, r) for p, r in zip(per_p, per_r)])
    macro_p, macro_r, macro_f = macro_prf(counts)
    micro_p, micro_r, micro_f = micro_prf(counts)
    return MetricsReport(
        precision=per_p,
        recall=per_r,
        f1=per_f,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        macro_f1_by_class=float(per_f.mean()),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f,
        counts=counts,
    )
