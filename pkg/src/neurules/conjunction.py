"""Relaxed differentiable logical conjunction.

A rule antecedent combines its predicate activations with a weighted
harmonic mean. The strict form vanishes (value and gradient) as soon as one
weighted predicate hits zero; the relaxed form adds a slack constant

    eta = epsilon / sum(w)

so the conjunction of an inactive predicate is bounded by epsilon instead
of zero and gradients keep flowing. Weights are kept positive through
``w = softplus(u)``; eta is recomputed from the current weights on every
call, never cached.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# cap for 1/pred on the epsilon=0 path, where an exactly-zero predicate
# would otherwise produce an infinite reciprocal
RECIP_CAP = 1e12


def softplus(u: np.ndarray | float) -> np.ndarray | float:
    return np.logaddexp(0.0, u)


def softplus_inv(w: np.ndarray | float) -> np.ndarray | float:
    """Raw parameter whose softplus equals w (w > 0)."""
    w = np.asarray(w, dtype=float)
    out = w + np.log(-np.expm1(-w))
    return float(out) if out.ndim == 0 else out


def sigmoid(u: np.ndarray | float) -> np.ndarray | float:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(u, dtype=float)))


@dataclass
class ConjunctionParams:
    raw_weights: np.ndarray
    epsilon: float = 0.05

    def __post_init__(self) -> None:
        self.raw_weights = np.asarray(self.raw_weights, dtype=float)
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def weights(self) -> np.ndarray:
        return softplus(self.raw_weights)


def _recip_terms(preds: np.ndarray, weights: np.ndarray, epsilon: float):
    """Per-predicate terms w_i * (1+eta)/(pred_i+eta) and helpers."""
    wsum = weights.sum()
    if epsilon > 0:
        eta = epsilon / wsum
        t = (1.0 + eta) / (preds + eta)
    else:
        eta = 0.0
        with np.errstate(divide="ignore"):
            t = np.minimum(1.0 / preds, RECIP_CAP)
    return wsum, eta, t


def conjunction_forward(preds: np.ndarray, cp: ConjunctionParams) -> float:
    """Relaxed conjunction sum(w) / sum(w * (1+eta)/(pred+eta)) in [0, 1]."""
    preds = np.asarray(preds, dtype=float)
    w = cp.weights
    wsum, _, t = _recip_terms(preds, w, cp.epsilon)
    return float(wsum / (w * t).sum())


def conjunction_backward(preds: np.ndarray,
                         cp: ConjunctionParams) -> tuple[np.ndarray, np.ndarray]:
    """Partials of the conjunction: (d/dpred_j, d/draw_weight_j).

    The predicate partials hold the weights fixed. The raw-weight partials
    are total derivatives: they include eta's dependence on sum(w) and the
    softplus chain.
    """
    preds = np.asarray(preds, dtype=float)
    w = cp.weights
    wsum, eta, t = _recip_terms(preds, w, cp.epsilon)
    denom = (w * t).sum()

    # d/dpred_j = sum(w) * w_j * (1+eta) / ((pred_j+eta)^2 * denom^2)
    if cp.epsilon > 0:
        dt_dpred = -t / (preds + eta)
    else:
        with np.errstate(divide="ignore"):
            dt_dpred = np.where(1.0 / preds < RECIP_CAP, -t / preds, 0.0)
    d_pred = -wsum * w * dt_dpred / denom**2

    # total d/dw_j; for epsilon > 0, eta shifts with sum(w):
    #   d a / d w_j = (denom - wsum * t_j + eta * dD/deta) / denom^2
    if cp.epsilon > 0:
        dD_deta = (w * (preds - 1.0) / (preds + eta) ** 2).sum()
        d_w = (denom - wsum * t + eta * dD_deta) / denom**2
    else:
        d_w = (denom - wsum * t) / denom**2
    d_raw = d_w * sigmoid(cp.raw_weights)
    return d_pred, d_raw
