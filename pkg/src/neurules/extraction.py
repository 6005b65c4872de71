"""Turn a trained soft model into a crisp, human-readable rule list.

Per rule, a predicate survives only if its conjunction weight clears the
threshold and its interval actually constrains the feature within the
observed (scaled) training range; intervals that span the whole observed
range are vacuous. Bounds are mapped back to original units, rules are
ordered by trained priority (ties by rule index), and the always-active
default rule goes last. Prediction scans the list and fires the first rule
whose every condition holds (closed intervals).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .conjunction import softplus
from .data import Dataset, FeatureMeta
from .rulelist import SoftRuleList, stable_softmax

log = logging.getLogger("neurules")

RULELIST_FORMAT = "neurules-rulelist/1"
WEIGHT_THRESHOLD = 0.01


class ExtractionError(RuntimeError):
    pass


@dataclass
class Condition:
    feature: str
    lower: float | None        # original units; None = unbounded side
    upper: float | None

    def holds(self, value: float) -> bool:
        if self.lower is not None and value < self.lower:
            return False
        if self.upper is not None and value > self.upper:
            return False
        return True


@dataclass
class HardRule:
    conditions: list[Condition]
    class_probs: np.ndarray
    priority: float
    source_index: int
    support: float | None = None           # fraction of training rows fired
    class_freqs: np.ndarray | None = None  # empirical label mix when fired


@dataclass
class HardRuleList:
    rules: list[HardRule]
    default_probs: np.ndarray
    features: list[FeatureMeta]
    labels: list[str]
    label_column: str = "label"
    default_support: float | None = None
    default_freqs: np.ndarray | None = None

    @property
    def feature_index(self) -> dict[str, int]:
        return {f.name: j for j, f in enumerate(self.features)}

    def predict_row(self, x) -> tuple[int, np.ndarray, int]:
        """(class index, class probs, fired rule position; len(rules) = default).

        ``x`` is an original-unit encoded vector or a {feature: value} dict;
        a dict missing any referenced feature is rejected.
        """
        if isinstance(x, dict):
            lookup = x.__getitem__
            missing = {c.feature for r in self.rules for c in r.conditions} - set(x)
            if missing:
                raise ValueError(f"missing features: {sorted(missing)}")
        else:
            x = np.asarray(x, dtype=float)
            if x.shape[-1] != len(self.features):
                raise ValueError(
                    f"expected {len(self.features)} features, got {x.shape[-1]}")
            index = self.feature_index
            lookup = lambda name: x[index[name]]
        for pos, rule in enumerate(self.rules):
            if all(c.holds(lookup(c.feature)) for c in rule.conditions):
                return int(np.argmax(rule.class_probs)), rule.class_probs, pos
        return (int(np.argmax(self.default_probs)), self.default_probs,
                len(self.rules))

    def predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized scan: (predicted class, fired rule position) per row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        fired = np.full(n, len(self.rules), dtype=int)
        pred = np.full(n, int(np.argmax(self.default_probs)), dtype=int)
        index = self.feature_index
        open_rows = np.ones(n, dtype=bool)
        for pos, rule in enumerate(self.rules):
            hold = open_rows.copy()
            for c in rule.conditions:
                col = X[:, index[c.feature]]
                if c.lower is not None:
                    hold &= col >= c.lower
                if c.upper is not None:
                    hold &= col <= c.upper
            fired[hold] = pos
            pred[hold] = int(np.argmax(rule.class_probs))
            open_rows &= ~hold
        return pred, fired

    def to_doc(self) -> dict:
        def rule_doc(r: HardRule) -> dict:
            return {
                "conditions": [{"feature": c.feature, "lower": c.lower,
                                "upper": c.upper} for c in r.conditions],
                "class_probs": [float(v) for v in r.class_probs],
                "priority": r.priority,
                "source_index": r.source_index,
                "support": r.support,
                "class_freqs": None if r.class_freqs is None
                               else [float(v) for v in r.class_freqs],
            }
        return {
            "format": RULELIST_FORMAT,
            "rules": [rule_doc(r) for r in self.rules],
            "default_rule": {
                "class_probs": [float(v) for v in self.default_probs],
                "support": self.default_support,
                "class_freqs": None if self.default_freqs is None
                               else [float(v) for v in self.default_freqs],
            },
            "features": [f.to_doc() for f in self.features],
            "labels": self.labels,
            "label_column": self.label_column,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "HardRuleList":
        if doc.get("format") != RULELIST_FORMAT:
            raise ValueError(
                f"unsupported rule list format {doc.get('format')!r}, "
                f"expected {RULELIST_FORMAT!r}")
        rules = []
        for rd in doc["rules"]:
            rules.append(HardRule(
                conditions=[Condition(**cd) for cd in rd["conditions"]],
                class_probs=np.array(rd["class_probs"]),
                priority=rd["priority"],
                source_index=rd["source_index"],
                support=rd["support"],
                class_freqs=None if rd["class_freqs"] is None
                            else np.array(rd["class_freqs"]),
            ))
        dd = doc["default_rule"]
        return cls(
            rules=rules,
            default_probs=np.array(dd["class_probs"]),
            features=[FeatureMeta.from_doc(fd) for fd in doc["features"]],
            labels=list(doc["labels"]),
            label_column=doc.get("label_column", "label"),
            default_support=dd["support"],
            default_freqs=None if dd["class_freqs"] is None
                          else np.array(dd["class_freqs"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HardRuleList":
        return cls.from_doc(json.loads(text))


def extract(mp: SoftRuleList, dataset: Dataset,
            weight_threshold: float = WEIGHT_THRESHOLD) -> HardRuleList:
    """Crisp rule list from trained parameters, in original feature units."""
    obs_min, obs_max = dataset.observed_range()
    weights = softplus(mp.raw_w)
    priorities = softplus(mp.raw_p)
    rules: list[HardRule] = []
    for j in range(mp.n_learned):
        conds: list[Condition] = []
        unsat = False
        for i, fm in enumerate(dataset.features):
            if weights[j, i] < weight_threshold:
                continue
            lo, hi = float(mp.alpha[j, i]), float(mp.beta[j, i])
            if lo > hi:
                log.warning("rule %d has an empty interval on %r; dropping rule",
                            j, fm.name)
                unsat = True
                break
            lower_active = lo > obs_min[i]
            upper_active = hi < obs_max[i]
            if not lower_active and not upper_active:
                continue  # spans the whole observed range: vacuous
            scale = fm.max - fm.min
            conds.append(Condition(
                feature=fm.name,
                lower=fm.min + lo * scale if lower_active else None,
                upper=fm.min + hi * scale if upper_active else None))
        if unsat:
            continue
        if not conds:
            log.warning("rule %d has no active conditions; dropping rule", j)
            continue
        rules.append(HardRule(conditions=conds,
                              class_probs=stable_softmax(mp.cons[j]),
                              priority=float(priorities[j]), source_index=j))
    if not rules:
        raise ExtractionError("no satisfiable rule survived extraction; "
                              "the model is degenerate")
    rules.sort(key=lambda r: (-r.priority, r.source_index))
    rl = HardRuleList(rules=rules,
                      default_probs=stable_softmax(mp.cons[mp.n_rules - 1]),
                      features=list(dataset.features), labels=list(dataset.labels),
                      label_column=dataset.label_column)
    _attach_usage(rl, dataset)
    return rl


def _attach_usage(rl: HardRuleList, dataset: Dataset) -> None:
    """Per-rule empirical support and class frequencies on training data."""
    _, fired = rl.predict(dataset.original_units())
    n, l = dataset.n_samples, dataset.n_classes
    for pos, rule in enumerate(rl.rules):
        hit = fired == pos
        rule.support = float(hit.sum()) / n
        rule.class_freqs = (np.bincount(dataset.y[hit], minlength=l) / hit.sum()
                            if hit.any() else np.zeros(l))
    hit = fired == len(rl.rules)
    rl.default_support = float(hit.sum()) / n
    rl.default_freqs = (np.bincount(dataset.y[hit], minlength=l) / hit.sum()
                        if hit.any() else np.zeros(l))


def hard_predict(rl: HardRuleList, x) -> tuple[int, np.ndarray, int]:
    return rl.predict_row(x)


def _render_condition(c: Condition, meta: dict[str, FeatureMeta]) -> str:
    fm = meta[c.feature]
    if fm.kind == "onehot":
        # interval on a 0/1 indicator: containing 1 means "=", 0 means "!="
        includes_one = c.upper is None or c.upper >= 1.0
        return (f"{fm.source} = {fm.category}" if includes_one
                else f"{fm.source} ≠ {fm.category}")
    if c.lower is not None and c.upper is not None:
        return f"{c.lower:.2f} < {c.feature} < {c.upper:.2f}"
    if c.upper is not None:
        return f"{c.feature} < {c.upper:.2f}"
    return f"{c.feature} > {c.lower:.2f}"


def _render_consequent(probs: np.ndarray, labels: list[str]) -> str:
    if len(labels) == 2:
        cls, p = labels[1], probs[1]
    else:
        ix = int(np.argmax(probs))
        cls, p = labels[ix], probs[ix]
    return f"P({cls}) = {100 * p:.0f}%"


def render_text(rl: HardRuleList) -> str:
    meta = {f.name: f for f in rl.features}
    lines = []
    for pos, rule in enumerate(rl.rules):
        kw = "if" if pos == 0 else "else if"
        conds = " ∧ ".join(_render_condition(c, meta) for c in rule.conditions)
        lines.append(f"{kw} {conds}")
        lines.append(f"    then {_render_consequent(rule.class_probs, rl.labels)}")
    lines.append(f"else {_render_consequent(rl.default_probs, rl.labels)}")
    return "\n".join(lines) + "\n"
