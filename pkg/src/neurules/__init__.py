"""Differentiable rule list learning with crisp extraction."""

from .conjunction import ConjunctionParams, conjunction_backward, conjunction_forward
from .data import Dataset, FeatureMeta, load_csv, stratified_kfold
from .evaluation import EvalReport, accuracy, evaluate, rule_stats, weighted_f1
from .extraction import HardRuleList, extract, hard_predict, render_text
from .predicate import (PredicateParams, hard_predicate, soft_predicate_backward,
                        soft_predicate_forward)
from .rulelist import (SoftRuleList, active_priority, soft_indicator,
                       soft_rulelist_backward, soft_rulelist_forward)
from .synthetic import SyntheticSpec, benchmark_sweeps, generate
from .training import TrainConfig, TrainReport, gradient_check, train

__version__ = "0.1.0"

__all__ = [
    "ConjunctionParams", "conjunction_backward", "conjunction_forward",
    "Dataset", "FeatureMeta", "load_csv", "stratified_kfold",
    "EvalReport", "accuracy", "evaluate", "rule_stats", "weighted_f1",
    "HardRuleList", "extract", "hard_predict", "render_text",
    "PredicateParams", "hard_predicate", "soft_predicate_backward",
    "soft_predicate_forward",
    "SoftRuleList", "active_priority", "soft_indicator",
    "soft_rulelist_backward", "soft_rulelist_forward",
    "SyntheticSpec", "benchmark_sweeps", "generate",
    "TrainConfig", "TrainReport", "gradient_check", "train",
]
