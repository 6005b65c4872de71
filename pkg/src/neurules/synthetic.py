"""Ground-truth rule-list generator for controlled experiments.

Features are i.i.d. uniform on [0, 1]. Each of k rules picks m feature
indices without replacement and places an interval of width s**(1/m) at a
uniform position, so a rule covers a fraction s of the data in expectation.
Rules get unique random priorities and random binary consequents; labels
follow the rule-list semantics, and samples no rule covers are labeled by a
fair coin.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureMeta
from .extraction import Condition, HardRule, HardRuleList

log = logging.getLogger("neurules")


@dataclass
class SyntheticSpec:
    d: int = 20          # feature count
    n: int = 5000        # sample count
    s: float = 0.1       # target per-rule coverage fraction
    k: int = 2           # number of rules
    m: int = 2           # predicates per rule
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m > self.d:
            raise ValueError(f"m={self.m} predicates need at least that many features")
        if not (0 < self.s < 1):
            raise ValueError(f"rule fraction s must be in (0,1), got {self.s}")
        if self.d < 1 or self.n < 1 or self.k < 1:
            raise ValueError("d, n, k must be positive")


def generate(spec: SyntheticSpec) -> tuple[Dataset, HardRuleList]:
    rng = np.random.default_rng(spec.seed & 0xFFFFFFFF)
    X = rng.random((spec.n, spec.d))
    width = spec.s ** (1.0 / spec.m)

    features = [FeatureMeta(name=f"x{i}", kind="numeric", source=f"x{i}",
                            min=0.0, max=1.0) for i in range(spec.d)]
    labels = ["0", "1"]

    priorities = rng.permutation(spec.k) + 1
    rules = []
    for j in range(spec.k):
        idx = rng.choice(spec.d, size=spec.m, replace=False)
        lows = rng.uniform(0.0, 1.0 - width, size=spec.m)
        consequent = int(rng.integers(0, 2))
        probs = np.zeros(2)
        probs[consequent] = 1.0
        rules.append(HardRule(
            conditions=[Condition(feature=f"x{i}", lower=float(lo),
                                  upper=float(lo + width))
                        for i, lo in zip(idx, lows)],
            class_probs=probs, priority=float(priorities[j]), source_index=j))
    rules.sort(key=lambda r: (-r.priority, r.source_index))

    ground_truth = HardRuleList(rules=rules, default_probs=np.array([0.5, 0.5]),
                                features=features, labels=labels)
    pred, fired = ground_truth.predict(X)
    covered = fired < len(rules)
    y = np.where(covered, pred, rng.integers(0, 2, size=spec.n))

    ds = Dataset(X=X, y=y.astype(int), features=features, labels=labels,
                 label_column="y")
    log.info("synthetic data: covered fraction %.3f, class balance %.3f",
             covered.mean(), np.mean(y))
    ground_truth.default_support = float(1.0 - covered.mean())
    for pos, rule in enumerate(ground_truth.rules):
        rule.support = float((fired == pos).mean())
    return ds, ground_truth


def benchmark_sweeps() -> dict[str, list[SyntheticSpec]]:
    """The three benchmark sweeps: rule complexity, list size, sample size."""
    base = dict(d=20, n=5000, s=0.1)
    return {
        "rule_complexity": [SyntheticSpec(**base, k=2, m=m) for m in (2, 4, 6, 8)],
        "list_size": [SyntheticSpec(**base, k=k, m=2) for k in (2, 4, 6, 8, 12)],
        "sample_size": [SyntheticSpec(d=20, n=n, s=0.1, k=2, m=2)
                        for n in (100, 500, 1000, 5000, 10000)],
    }


def to_csv(ds: Dataset) -> str:
    header = [f.name for f in ds.features] + [ds.label_column]
    lines = [",".join(header)]
    for i in range(ds.n_samples):
        row = [repr(float(v)) for v in ds.X[i]] + [ds.labels[ds.y[i]]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
