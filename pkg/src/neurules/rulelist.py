"""Soft rule list: predicates -> weighted conjunctions -> priority-ordered
rule selection -> class probabilities.

Rule k-1 is the always-active default rule: it has no predicates or
conjunction weights (its antecedent is the constant 1) and a small frozen
priority below every learned rule's initial priority, so it only fires when
nothing else does. The firing rule is selected softly: active priorities
(antecedent times priority) plus Gumbel noise go through a softmax at
temperature ``t_list``, which converges to the hard argmax as the
temperature anneals to zero.

All gradients are computed analytically in ``model_backward``; there is no
autodiff anywhere in the package, which is why the finite-difference checks
in the training module exist.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .conjunction import RECIP_CAP, sigmoid, softplus, softplus_inv
from .predicate import soft_predicates, soft_predicates_backward

# frozen priority of the always-active default rule: below every learned
# rule's initial priority, but far enough above the floored activations of
# inactive rules (epsilon * priority) that uncovered samples still select
# the default crisply at the final list temperature
DEFAULT_PRIORITY = 0.45


def stable_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def gumbel_noise(shape, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(shape)
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    return -np.log(-np.log(u))


def noise_rng(seed: int, epoch: int, batch: int) -> np.random.Generator:
    """Noise stream is a pure function of (seed, epoch, batch)."""
    return np.random.default_rng([seed & 0xFFFFFFFF, epoch, batch])


def active_priority(antecedents: np.ndarray, priorities: np.ndarray) -> np.ndarray:
    antecedents = np.asarray(antecedents, dtype=float)
    priorities = np.asarray(priorities, dtype=float)
    if antecedents.shape[-1] != priorities.shape[-1]:
        raise ValueError(
            f"length mismatch: {antecedents.shape[-1]} antecedents vs "
            f"{priorities.shape[-1]} priorities")
    return antecedents * priorities


def soft_indicator(ap: np.ndarray, noise: np.ndarray, t_list: float) -> np.ndarray:
    if t_list <= 0:
        raise ValueError(f"list temperature must be positive, got {t_list}")
    return stable_softmax((np.asarray(ap, dtype=float) + noise) / t_list)


def init_priorities(n_learned: int) -> np.ndarray:
    """Distinct initial priorities, linearly spaced in [0.5, 1.5] + jitter."""
    if n_learned == 1:
        base = np.array([1.0])
    else:
        base = np.linspace(0.5, 1.5, n_learned)
    return base + 1e-3 * np.arange(n_learned)


@dataclass
class SoftRuleList:
    """All learnable tensors plus the two scheduled temperatures.

    Learned-rule arrays have k-1 rows; the default rule contributes only its
    consequent row in ``cons`` and the frozen ``DEFAULT_PRIORITY``.
    """
    alpha: np.ndarray        # (k-1, d) lower bounds, scaled-feature units
    beta: np.ndarray         # (k-1, d) upper bounds
    raw_w: np.ndarray        # (k-1, d) conjunction weights pre-softplus
    raw_p: np.ndarray        # (k-1,)  priorities pre-softplus
    cons: np.ndarray         # (k, l)  consequent logits, incl. default rule
    epsilon: float = 0.05
    t_pred: float = 0.5
    t_list: float = 0.5

    def __post_init__(self) -> None:
        if self.n_rules < 2:
            raise ValueError("need k >= 2: at least one learned rule plus the default")
        if self.t_pred <= 0 or self.t_list <= 0:
            raise ValueError("temperatures must be positive")

    @property
    def n_learned(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_rules(self) -> int:
        return self.cons.shape[0]

    @property
    def n_features(self) -> int:
        return self.alpha.shape[1]

    @property
    def n_classes(self) -> int:
        return self.cons.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return softplus(self.raw_w)

    @property
    def priorities(self) -> np.ndarray:
        """Effective priorities of all k rules, default last."""
        return np.append(softplus(self.raw_p), DEFAULT_PRIORITY)

    @classmethod
    def init_random(cls, d: int, k: int, l: int, rng: np.random.Generator,
                    epsilon: float = 0.05) -> "SoftRuleList":
        if k < 2:
            raise ValueError("need k >= 2")
        m = k - 1
        bounds = np.sort(rng.random((2, m, d)), axis=0)
        raw_w = rng.uniform(-2.0, 0.0, size=(m, d))
        raw_p = softplus_inv(init_priorities(m))
        # small random consequents: with exactly equal rows the indicator
        # softmax receives a constant upstream vector and no gradient ever
        # reaches priorities, weights, or bounds (an exact saddle)
        cons = rng.uniform(-1.0, 1.0, size=(k, l))
        return cls(alpha=bounds[0], beta=bounds[1], raw_w=raw_w,
                   raw_p=np.atleast_1d(raw_p), cons=cons, epsilon=epsilon)

    def copy(self) -> "SoftRuleList":
        return replace(self, alpha=self.alpha.copy(), beta=self.beta.copy(),
                       raw_w=self.raw_w.copy(), raw_p=self.raw_p.copy(),
                       cons=self.cons.copy())


def model_forward(mp: SoftRuleList, X: np.ndarray, noise: np.ndarray | None) -> dict:
    """Batched forward pass; returns every intermediate the backward needs.

    X is (n, d) in scaled [0,1] units; noise is (n, k) or None for zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if d != mp.n_features:
        raise ValueError(f"expected {mp.n_features} features, got {d}")
    m, k = mp.n_learned, mp.n_rules

    P, EA, EC = soft_predicates(X, mp.alpha, mp.beta, mp.t_pred)
    W = mp.weights                       # (m, d)
    S = W.sum(axis=1)                    # (m,)
    if mp.epsilon > 0:
        eta = mp.epsilon / S             # recomputed every pass
        T = (1.0 + eta[None, :, None]) / (P + eta[None, :, None])
    else:
        eta = np.zeros(m)
        with np.errstate(divide="ignore"):
            T = np.minimum(1.0 / P, RECIP_CAP)
    D = (W[None, :, :] * T).sum(axis=2)  # (n, m)
    A = S[None, :] / D                   # (n, m) antecedents
    A_full = np.concatenate([A, np.ones((n, 1))], axis=1)

    p_full = mp.priorities
    AP = active_priority(A_full, p_full)
    if noise is None:
        noise = np.zeros((n, k))
    I = soft_indicator(AP, noise, mp.t_list)
    # noise-free selection; the support regularizer reads coverage off this
    # one so exploration noise cannot mask a starved rule
    I0 = soft_indicator(AP, np.zeros((n, k)), mp.t_list)
    logits = I @ mp.cons                 # (n, l)
    probs = stable_softmax(logits)
    return {"X": X, "P": P, "EA": EA, "EC": EC, "W": W, "S": S, "eta": eta,
            "T": T, "D": D, "A": A, "A_full": A_full, "p_full": p_full,
            "AP": AP, "I": I, "I0": I0, "logits": logits, "probs": probs}


def model_backward(mp: SoftRuleList, inter: dict, d_logits: np.ndarray,
                   d_indicator0: np.ndarray | None = None) -> dict:
    """Analytic gradients of the scalar objective w.r.t. all free parameters.

    ``d_logits`` is the upstream gradient at the mixed class logits (n, l);
    ``d_indicator0`` is the upstream gradient at the noise-free indicator
    (the support regularizer's path).
    """
    X, P, EA, EC = inter["X"], inter["P"], inter["EA"], inter["EC"]
    W, S, eta, T, D = inter["W"], inter["S"], inter["eta"], inter["T"], inter["D"]
    A, A_full, p_full, I = inter["A"], inter["A_full"], inter["p_full"], inter["I"]
    m = mp.n_learned

    d_cons = I.T @ d_logits
    dI = d_logits @ mp.cons.T
    dZ = I * (dI - (dI * I).sum(axis=1, keepdims=True))
    if d_indicator0 is not None:
        I0 = inter["I0"]
        dZ = dZ + I0 * (d_indicator0 - (d_indicator0 * I0).sum(axis=1, keepdims=True))
    dAP = dZ / mp.t_list
    d_Afull = dAP * p_full[None, :]
    dp_full = (dAP * A_full).sum(axis=0)
    d_raw_p = dp_full[:m] * sigmoid(mp.raw_p)

    dA = d_Afull[:, :m]                          # (n, m)
    q = dA / (D * D)                             # (n, m)

    # predicates: d a / d pred = S * w * (1+eta) / ((pred+eta)^2 * D^2)
    if mp.epsilon > 0:
        dT_dP = -T / (P + eta[None, :, None])
    else:
        with np.errstate(divide="ignore"):
            dT_dP = np.where(1.0 / P < RECIP_CAP, -T / P, 0.0)
    dP = (-(q * S[None, :])[:, :, None]) * W[None, :, :] * dT_dP
    d_alpha, d_beta = soft_predicates_backward(dP, P, EA, EC, mp.t_pred)

    # weights: total derivative including eta's dependence on sum(w)
    dW = (q * D).sum(axis=0)[:, None] - S[:, None] * np.einsum("nj,nji->ji", q, T)
    if mp.epsilon > 0:
        dD_deta = (W[None, :, :] * (P - 1.0) / (P + eta[None, :, None]) ** 2).sum(axis=2)
        dW = dW + (eta * (q * dD_deta).sum(axis=0))[:, None]
    d_raw_w = dW * sigmoid(mp.raw_w)

    return {"alpha": d_alpha, "beta": d_beta, "raw_w": d_raw_w,
            "raw_p": d_raw_p, "cons": d_cons}


def soft_rulelist_forward(x: np.ndarray, mp: SoftRuleList,
                          noise: np.ndarray | None = None
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-sample forward: (class_probs, indicator, antecedents)."""
    nrow = None if noise is None else np.atleast_2d(noise)
    inter = model_forward(mp, np.atleast_2d(x), nrow)
    return inter["probs"][0], inter["I"][0], inter["A_full"][0]


def soft_rulelist_backward(x: np.ndarray, mp: SoftRuleList,
                           noise: np.ndarray | None,
                           upstream: np.ndarray) -> dict:
    """Single-sample gradients given an upstream gradient at the class
    probabilities (length l)."""
    nrow = None if noise is None else np.atleast_2d(noise)
    inter = model_forward(mp, np.atleast_2d(x), nrow)
    probs = inter["probs"]
    up = np.atleast_2d(np.asarray(upstream, dtype=float))
    d_logits = probs * (up - (up * probs).sum(axis=1, keepdims=True))
    return model_backward(mp, inter, d_logits)


MODEL_FORMAT = "neurules-model/1"


def model_to_doc(mp: SoftRuleList, features: list, labels: list[str],
                 label_column: str, config_echo: dict | None = None) -> dict:
    """JSON-ready document holding every parameter plus data metadata."""
    return {
        "format": MODEL_FORMAT,
        "n_rules": mp.n_rules,
        "n_features": mp.n_features,
        "n_classes": mp.n_classes,
        "alpha": mp.alpha.tolist(),
        "beta": mp.beta.tolist(),
        "raw_weights": mp.raw_w.tolist(),
        "raw_priorities": mp.raw_p.tolist(),
        "default_priority": DEFAULT_PRIORITY,
        "consequents": mp.cons.tolist(),
        "epsilon": mp.epsilon,
        "t_pred": mp.t_pred,
        "t_list": mp.t_list,
        "features": [f.to_doc() for f in features],
        "labels": list(labels),
        "label_column": label_column,
        "config": config_echo or {},
    }


def model_from_doc(doc: dict) -> tuple["SoftRuleList", list, list[str], str]:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}, "
                         f"expected {MODEL_FORMAT!r}")
    from .data import FeatureMeta
    mp = SoftRuleList(
        alpha=np.array(doc["alpha"], dtype=float),
        beta=np.array(doc["beta"], dtype=float),
        raw_w=np.array(doc["raw_weights"], dtype=float),
        raw_p=np.array(doc["raw_priorities"], dtype=float),
        cons=np.array(doc["consequents"], dtype=float),
        epsilon=doc["epsilon"], t_pred=doc["t_pred"], t_list=doc["t_list"])
    features = [FeatureMeta.from_doc(fd) for fd in doc["features"]]
    return mp, features, list(doc["labels"]), doc.get("label_column", "label")


def mean_top_indicator(k: int, t_list: float, n_samples: int,
                       rng: np.random.Generator) -> float:
    """Mean weight of the winning rule under training-style sampling.

    Priorities follow the training initialization (learned rules spaced in
    [0.5, 1.5], default at DEFAULT_PRIORITY), antecedents are uniform for
    learned rules and 1 for the default, and standard Gumbel noise enters
    the indicator as in its definition.
    """
    p = np.append(init_priorities(k - 1), DEFAULT_PRIORITY)
    a = np.concatenate([rng.random((n_samples, k - 1)),
                        np.ones((n_samples, 1))], axis=1)
    ap = active_priority(a, p)
    g = gumbel_noise((n_samples, k), rng)
    return float(soft_indicator(ap, g, t_list).max(axis=1).mean())
