"""Confusion-matrix evaluation: per-class precision/recall/F1, macro and
micro F1, and hate-class recall.  Zero-denominator cells score 0 so tiny
evaluation sets with missing classes stay well defined."""

from __future__ import annotations

import numpy as np

from .corpus import LABEL_NAMES, N_CLASSES


class ConfusionMatrix:
    """3x3 integer counts; rows are true classes, columns predictions."""

    def __init__(self, counts: "np.ndarray | None" = None):
        if counts is None:
            counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (N_CLASSES, N_CLASSES):
            raise ValueError(f"confusion matrix must be 3x3, got {self.counts.shape}")

    def add(self, true_label: int, predicted: int) -> None:
        self.counts[true_label, predicted] += 1

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def total(self) -> int:
        return int(self.counts.sum())


def accumulate(pairs) -> ConfusionMatrix:
    """Tally (true, predicted) label pairs."""
    cm = ConfusionMatrix()
    for true_label, predicted in pairs:
        cm.add(int(true_label), int(predicted))
    return cm


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def report(cm: ConfusionMatrix) -> dict:
    """Metric record with frozen field names.

    precision_X / recall_X / f1_X per class, macro_f1 (unweighted mean),
    micro_f1 (trace over total; equals accuracy), hate_recall.
    """
    counts = cm.counts
    out: dict = {}
    f1s = []
    for c, name in enumerate(LABEL_NAMES):
        tp = float(counts[c, c])
        precision = _safe_div(tp, counts[:, c].sum())
        recall = _safe_div(tp, counts[c, :].sum())
        f1 = _safe_div(2 * precision * recall, precision + recall)
        out[f"precision_{name}"] = precision
        out[f"recall_{name}"] = recall
        out[f"f1_{name}"] = f1
        f1s.append(f1)
    out["macro_f1"] = float(np.mean(f1s))
    out["micro_f1"] = _safe_div(float(np.trace(counts)), counts.sum())
    out["hate_recall"] = out["recall_H"]
    out["n_posts"] = cm.total()
    return out


def format_report(rep: dict) -> str:
    lines = []
    for key in ("macro_f1", "micro_f1", "hate_recall"):
        lines.append(f"{key:>12}: {rep[key]:.4f}")
    for name in LABEL_NAMES:
        lines.append(
            f"     class {name}: precision {rep[f'precision_{name}']:.4f}  "
            f"recall {rep[f'recall_{name}']:.4f}  f1 {rep[f'f1_{name}']:.4f}"
        )
    lines.append(f"{'n_posts':>12}: {rep['n_posts']}")
    return "\n".join(lines)
