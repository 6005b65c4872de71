"""Soft interval predicates.

A predicate tests ``alpha <= x <= beta`` on a single scaled feature. Its
differentiable relaxation is the middle component of a softmax over the
three logits ``(x, 2x - alpha, 3x - alpha - beta)``, each divided by a
temperature. Subtracting the middle logit before exponentiating gives the
numerically stable form used throughout:

    soft(x) = 1 / (exp((alpha - x)/t) + 1 + exp((x - beta)/t))

which converges to the hard predicate as t -> 0 (value 1/2 exactly on a
bound; hardening ceils that to 1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# exp() overflows just above 709; 700 keeps sums finite while the
# reciprocal still underflows to a strictly positive subnormal.
EXP_CLIP = 700.0


@dataclass
class PredicateParams:
    alpha: float
    beta: float
    temp: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("predicate bounds must be finite")
        if not (np.isfinite(self.temp) and self.temp > 0):
            raise ValueError(f"temperature must be positive, got {self.temp}")


def _check_input(x: float) -> None:
    if not np.isfinite(x):
        raise ValueError(f"predicate input must be finite, got {x}")


def soft_predicate_forward(x: float, p: PredicateParams) -> float:
    """Activation of the soft predicate, strictly inside (0, 1)."""
    _check_input(x)
    ea = np.exp(min((p.alpha - x) / p.temp, EXP_CLIP))
    ec = np.exp(min((x - p.beta) / p.temp, EXP_CLIP))
    return float(1.0 / (ea + 1.0 + ec))


def soft_predicate_backward(x: float, p: PredicateParams) -> tuple[float, float, float]:
    """Analytic partials (d/dx, d/dalpha, d/dbeta) of the activation."""
    _check_input(x)
    ea = np.exp(min((p.alpha - x) / p.temp, EXP_CLIP))
    ec = np.exp(min((x - p.beta) / p.temp, EXP_CLIP))
    denom = ea + 1.0 + ec
    scale = 1.0 / (p.temp * denom * denom)
    d_alpha = -ea * scale
    d_beta = ec * scale
    d_x = (ea - ec) * scale
    return float(d_x), float(d_alpha), float(d_beta)


def hard_predicate(x: float, alpha: float, beta: float) -> int:
    """Crisp predicate; bounds included (the boundary value 1/2 is ceiled)."""
    return int(alpha <= x <= beta)


def soft_predicates(x: np.ndarray, alpha: np.ndarray, beta: np.ndarray,
                    temp: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized forward over a batch: x (n, d), alpha/beta (m, d) -> (act, ea, ec), each (n, m, d)."""
    if temp <= 0:
        raise ValueError(f"temperature must be positive, got {temp}")
    ea = np.exp(np.clip((alpha[None, :, :] - x[:, None, :]) / temp, None, EXP_CLIP))
    ec = np.exp(np.clip((x[:, None, :] - beta[None, :, :]) / temp, None, EXP_CLIP))
    return 1.0 / (ea + 1.0 + ec), ea, ec


def soft_predicates_backward(d_act: np.ndarray, act: np.ndarray, ea: np.ndarray,
                             ec: np.ndarray, temp: float) -> tuple[np.ndarray, np.ndarray]:
    """Chain upstream (n, m, d) gradients to (m, d) alpha/beta gradients."""
    scale = d_act * act * act / temp
    d_alpha = -(scale * ea).sum(axis=0)
    d_beta = (scale * ec).sum(axis=0)
    return d_alpha, d_beta
