"""Classification metrics and rule-list statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .extraction import HardRuleList


def _check_pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    return y_true, y_pred


def confusion_matrix(y_true, y_pred, n_classes: int | None = None) -> np.ndarray:
    y_true, y_pred = _check_pair(y_true, y_pred)
    if n_classes is None:
        n_classes = int(max(y_true.max(), y_pred.max())) + 1
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def weighted_f1(y_true, y_pred) -> float:
    """Per-class F1 averaged with true-class frequencies as weights.

    A class with zero precision+recall contributes F1 = 0.
    """
    y_true, y_pred = _check_pair(y_true, y_pred)
    cm = confusion_matrix(y_true, y_pred)
    n_classes = cm.shape[0]
    total = 0.0
    for c in range(n_classes):
        tp = cm[c, c]
        denom = 2 * tp + (cm[:, c].sum() - tp) + (cm[c, :].sum() - tp)
        f1 = 2 * tp / denom if denom > 0 else 0.0
        total += f1 * cm[c, :].sum() / y_true.size
    return float(total)


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _check_pair(y_true, y_pred)
    return float((y_true == y_pred).mean())


def rule_stats(rl: HardRuleList, dataset: Dataset) -> tuple[dict[int, int], np.ndarray]:
    """(rule-length histogram over non-default rules, per-rule hard coverage).

    Coverage counts the fraction of samples whose first firing rule is each
    list position; the last entry is the default rule.
    """
    _, fired = rl.predict(dataset.original_units())
    n_rules = len(rl.rules)
    hist: dict[int, int] = {}
    for rule in rl.rules:
        hist[len(rule.conditions)] = hist.get(len(rule.conditions), 0) + 1
    cov = np.bincount(fired, minlength=n_rules + 1) / dataset.n_samples
    return hist, cov


@dataclass
class EvalReport:
    weighted_f1: float
    accuracy: float
    confusion: np.ndarray
    rule_usage: np.ndarray       # firing counts per list position + default
    length_histogram: dict[int, int]
    labels: list[str]

    def to_text(self) -> str:
        lines = [
            f"weighted F1: {self.weighted_f1:.4f}",
            f"accuracy:    {self.accuracy:.4f}",
            "confusion matrix (rows = true, cols = predicted):",
        ]
        lines.append("  " + " ".join(f"{l:>10}" for l in self.labels))
        for i, l in enumerate(self.labels):
            lines.append(f"  {l:>10} " + " ".join(f"{v:>10d}" for v in self.confusion[i]))
        usage = ", ".join(
            (f"rule {i}: {int(c)}" if i < len(self.rule_usage) - 1 else f"default: {int(c)}")
            for i, c in enumerate(self.rule_usage))
        lines.append(f"rule usage: {usage}")
        hist = ", ".join(f"{ln} cond: {ct}" for ln, ct in sorted(self.length_histogram.items()))
        lines.append(f"rule lengths: {hist}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["section,key,value"]
        lines.append(f"metric,weighted_f1,{self.weighted_f1!r}")
        lines.append(f"metric,accuracy,{self.accuracy!r}")
        for i in range(self.confusion.shape[0]):
            for j in range(self.confusion.shape[1]):
                lines.append(
                    f"confusion,{self.labels[i]}->{self.labels[j]},{int(self.confusion[i, j])}")
        for i, c in enumerate(self.rule_usage):
            key = f"rule_{i}" if i < len(self.rule_usage) - 1 else "default"
            lines.append(f"usage,{key},{int(c)}")
        for ln, ct in sorted(self.length_histogram.items()):
            lines.append(f"length_histogram,{ln},{ct}")
        return "\n".join(lines) + "\n"


def evaluate(rl: HardRuleList, X_original: np.ndarray, y: np.ndarray) -> EvalReport:
    pred, fired = rl.predict(X_original)
    hist: dict[int, int] = {}
    for rule in rl.rules:
        hist[len(rule.conditions)] = hist.get(len(rule.conditions), 0) + 1
    return EvalReport(
        weighted_f1=weighted_f1(y, pred),
        accuracy=accuracy(y, pred),
        confusion=confusion_matrix(y, pred, n_classes=len(rl.labels)),
        rule_usage=np.bincount(fired, minlength=len(rl.rules) + 1),
        length_histogram=hist,
        labels=list(rl.labels),
    )
