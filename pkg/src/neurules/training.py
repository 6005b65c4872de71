"""Objective, optimizer loop, temperature schedules, and gradient checking.

The objective is mean cross-entropy plus a support regularizer that keeps
each rule's (soft, per-minibatch) coverage inside a user band. Both
temperatures follow geometric schedules toward their end values so the
model hardens as training progresses. Adam is implemented here directly;
gradients come from the analytic backward pass and are validated against
central finite differences by ``gradient_check``.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .rulelist import (SoftRuleList, gumbel_noise, model_backward,
                       model_forward)

log = logging.getLogger("neurules")

PROB_FLOOR = 1e-12


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 256
    learning_rate: float = 0.025
    lam: float = 0.5
    cov_min: float = 0.1
    cov_max: float = 0.9
    epsilon: float = 0.05
    t_pred_schedule: tuple[float, float] = (0.5, 0.01)
    t_list_schedule: tuple[float, float] = (0.5, 0.05)
    # slack anneals with the temperatures so the floored activations
    # (epsilon * priority) sink back below the default rule's priority
    epsilon_end: float = 0.002
    clip_norm: float = 5.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.lam < 0 or self.epsilon < 0:
            raise ValueError("lambda and epsilon must be nonnegative")
        if not (0 <= self.cov_min < self.cov_max <= 1):
            raise ValueError("need 0 <= cov_min < cov_max <= 1")
        for name, (start, end) in (("t_pred", self.t_pred_schedule),
                                   ("t_list", self.t_list_schedule)):
            if not (start >= end > 0):
                raise ValueError(f"{name} schedule needs start >= end > 0")


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    regs: list[float] = field(default_factory=list)
    t_preds: list[float] = field(default_factory=list)
    t_lists: list[float] = field(default_factory=list)
    coverages: list[np.ndarray] = field(default_factory=list)
    final_model: SoftRuleList | None = None

    def to_csv(self) -> str:
        k = len(self.coverages[0]) if self.coverages else 0
        header = ["epoch", "loss", "reg", "t_pred", "t_list"]
        header += [f"cov_{j + 1}" for j in range(k)]
        lines = [",".join(header)]
        for e in range(len(self.losses)):
            row = [str(e), repr(self.losses[e]), repr(self.regs[e]),
                   repr(self.t_preds[e]), repr(self.t_lists[e])]
            row += [repr(float(c)) for c in self.coverages[e]]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def cross_entropy_loss(class_probs: np.ndarray, y: int) -> float:
    class_probs = np.asarray(class_probs, dtype=float)
    if not (0 <= y < class_probs.shape[-1]):
        raise ValueError(f"class index {y} out of range for {class_probs.shape[-1]} classes")
    return float(-np.log(max(class_probs[y], PROB_FLOOR)))


def coverage(indicators: np.ndarray) -> np.ndarray:
    indicators = np.atleast_2d(np.asarray(indicators, dtype=float))
    if indicators.shape[0] == 0:
        raise ValueError("coverage of an empty batch is undefined")
    return indicators.mean(axis=0)


def support_regularizer(cov: np.ndarray, cov_min: float, cov_max: float) -> float:
    cov = np.asarray(cov, dtype=float)
    low = np.maximum(0.0, cov_min - cov)
    high = np.maximum(0.0, cov - cov_max)
    return float((low**2 + high**2).mean())


def _regularizer_grad(cov: np.ndarray, cov_min: float, cov_max: float) -> np.ndarray:
    low = np.maximum(0.0, cov_min - cov)
    high = np.maximum(0.0, cov - cov_max)
    return (-2.0 * low + 2.0 * high) / cov.size


def anneal(epoch: int, total: int, start: float, end: float) -> float:
    if total <= 0:
        return end
    return float(start * (end / start) ** (epoch / total))


def batch_objective(mp: SoftRuleList, X: np.ndarray, y: np.ndarray,
                    noise: np.ndarray | None, lam: float, cov_min: float,
                    cov_max: float) -> tuple[float, float, float, dict]:
    """Objective value on one minibatch: (total, ce, reg, intermediates)."""
    inter = model_forward(mp, X, noise)
    probs = inter["probs"]
    n = probs.shape[0]
    ce = float(-np.log(np.clip(probs[np.arange(n), y], PROB_FLOOR, None)).mean())
    cov = coverage(inter["I0"])
    reg = support_regularizer(cov, cov_min, cov_max)
    inter["cov"] = cov
    return ce + lam * reg, ce, reg, inter


def _batch_grads(mp: SoftRuleList, inter: dict, y: np.ndarray, lam: float,
                 cov_min: float, cov_max: float) -> dict:
    probs = inter["probs"]
    n = probs.shape[0]
    d_logits = probs.copy()
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    d_extra = None
    if lam > 0:
        dcov = lam * _regularizer_grad(inter["cov"], cov_min, cov_max) / n
        d_extra = np.broadcast_to(dcov, inter["I0"].shape)
    return model_backward(mp, inter, d_logits, d_extra)


def batch_objective_grads(mp: SoftRuleList, X: np.ndarray, y: np.ndarray,
                          noise: np.ndarray | None, lam: float, cov_min: float,
                          cov_max: float, threads: int = 1):
    """Fused objective + gradients; optionally chunk the batch over threads.

    Chunks are reduced in index order, so results are reproducible for a
    fixed thread count.
    """
    if threads <= 1 or X.shape[0] < 2 * threads:
        obj, ce, reg, inter = batch_objective(mp, X, y, noise, lam, cov_min, cov_max)
        return obj, ce, reg, inter["cov"], _batch_grads(mp, inter, y, lam, cov_min, cov_max)

    n = X.shape[0]
    splits = np.array_split(np.arange(n), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        inters = list(pool.map(
            lambda ix: model_forward(mp, X[ix], None if noise is None else noise[ix]),
            splits))
        probs = np.concatenate([it["probs"] for it in inters], axis=0)
        I0 = np.concatenate([it["I0"] for it in inters], axis=0)
        ce = float(-np.log(np.clip(probs[np.arange(n), y], PROB_FLOOR, None)).mean())
        cov = coverage(I0)
        reg = support_regularizer(cov, cov_min, cov_max)
        dcov = lam * _regularizer_grad(cov, cov_min, cov_max) / n if lam > 0 else None

        def chunk_grads(args):
            ix, inter = args
            d_logits = inter["probs"].copy()
            d_logits[np.arange(len(ix)), y[ix]] -= 1.0
            d_logits /= n
            d_extra = None
            if dcov is not None:
                d_extra = np.broadcast_to(dcov, inter["I0"].shape)
            return model_backward(mp, inter, d_logits, d_extra)

        partials = list(pool.map(chunk_grads, zip(splits, inters)))
    grads = {k: sum(p[k] for p in partials) for k in partials[0]}
    return ce + lam * reg, ce, reg, cov, grads


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> dict:
    """Scale the whole gradient down when its global norm exceeds max_norm.

    Near the end of the schedule, single boundary samples contribute
    gradients that scale like 1/t_pred; without clipping those spikes
    random-walk converged bounds into inverted intervals.
    """
    if max_norm <= 0:
        return grads
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        return {k: g * scale for k, g in grads.items()}
    return grads


class Adam:
    """Standard Adam with bias correction."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _shuffle_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, 1, epoch])


def _noise_rng(seed: int, epoch: int, batch: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, 2, epoch, batch])


def train(dataset: Dataset, config: TrainConfig, k: int,
          threads: int = 1) -> tuple[SoftRuleList, TrainReport]:
    """Minibatch Adam on the annealed soft rule list."""
    n = dataset.n_samples
    if n == 0:
        raise ValueError("dataset is empty")
    if k < 2:
        raise ValueError("need k >= 2 rules (learned rules plus the default)")
    l = dataset.n_classes
    if len(np.unique(dataset.y)) < 2:
        warnings.warn("dataset has a single label class; training proceeds")

    init_rng = np.random.default_rng([config.seed & 0xFFFFFFFF, 0])
    mp = SoftRuleList.init_random(dataset.n_features, k, l, init_rng,
                                  epsilon=config.epsilon)
    params = {"alpha": mp.alpha, "beta": mp.beta, "raw_w": mp.raw_w,
              "raw_p": mp.raw_p, "cons": mp.cons}
    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    report = TrainReport()
    bs = min(config.batch_size, n)
    t0, t1 = config.t_pred_schedule
    s0, s1 = config.t_list_schedule

    eps_end = min(config.epsilon, config.epsilon_end)
    for epoch in range(config.epochs):
        mp.t_pred = anneal(epoch, config.epochs - 1, t0, t1)
        mp.t_list = anneal(epoch, config.epochs - 1, s0, s1)
        if config.epsilon > 0:
            mp.epsilon = anneal(epoch, config.epochs - 1, config.epsilon, eps_end)
        perm = _shuffle_rng(config.seed, epoch).permutation(n)
        ce_sum, reg_sum, nb = 0.0, 0.0, 0
        cov_sum = np.zeros(k)
        for b, start in enumerate(range(0, n, bs)):
            ix = perm[start:start + bs]
            # noise amplitude follows the list temperature: full Gumbel
            # exploration early, exact priority argmax as t_list -> 0
            noise = mp.t_list * gumbel_noise((len(ix), k),
                                             _noise_rng(config.seed, epoch, b))
            obj, ce, reg, cov, grads = batch_objective_grads(
                mp, dataset.X[ix], dataset.y[ix], noise, config.lam,
                config.cov_min, config.cov_max, threads=threads)
            if not np.isfinite(obj):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {b}: {obj}")
            opt.step(params, clip_gradients(grads, config.clip_norm))
            ce_sum += ce * len(ix)
            reg_sum += reg
            cov_sum += cov
            nb += 1
        report.losses.append(ce_sum / n)
        report.regs.append(reg_sum / nb)
        report.t_preds.append(mp.t_pred)
        report.t_lists.append(mp.t_list)
        report.coverages.append(cov_sum / nb)
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            log.info("epoch %d: loss=%.4f reg=%.5f t_pred=%.4f t_list=%.4f",
                     epoch, report.losses[-1], report.regs[-1], mp.t_pred, mp.t_list)

    mp.t_pred, mp.t_list = t1, s1
    if config.epsilon > 0:
        mp.epsilon = eps_end
    report.final_model = mp
    return mp, report


# gradient checking ---------------------------------------------------------

_PARAM_ORDER = ("alpha", "beta", "raw_w", "raw_p", "cons")


def _pack(mp: SoftRuleList) -> np.ndarray:
    return np.concatenate([getattr(mp, name).ravel() for name in _PARAM_ORDER])


def _unpack_into(mp: SoftRuleList, vec: np.ndarray) -> SoftRuleList:
    out = mp.copy()
    pos = 0
    for name in _PARAM_ORDER:
        arr = getattr(out, name)
        size = arr.size
        arr[...] = vec[pos:pos + size].reshape(arr.shape)
        pos += size
    return out

# Relative error floor: below this magnitude, central differences with step
# 1e-5 are dominated by float64 cancellation noise, not by the gradient.
REL_FLOOR = 1e-6
EXCLUDE_BELOW = 1e-8
FD_STEP = 1e-5


def gradient_check(dims: tuple[int, int, int], config: TrainConfig,
                   n_probes: int, batch: int = 2) -> float:
    """Worst relative error of the analytic gradient over random probes.

    ``dims`` bounds (d, k, l); each probe draws a model size within the
    bounds, random parameters and inputs, temperatures in [0.05, 0.5] and
    [0.1, 0.7], and compares every free coordinate against central finite
    differences. Coordinates where both sides are below ``EXCLUDE_BELOW``
    are skipped as saturated.
    """
    d_max, k_max, l = dims
    worst = 0.0
    for probe in range(n_probes):
        rng = np.random.default_rng([config.seed & 0xFFFFFFFF, 3, probe])
        d = int(rng.integers(2, d_max + 1))
        k = int(rng.integers(2, k_max + 1))
        mp = SoftRuleList.init_random(d, k, l, rng, epsilon=config.epsilon)
        mp.raw_p = mp.raw_p + rng.normal(0.0, 0.3, mp.raw_p.shape)
        mp.cons = rng.uniform(-1.0, 1.0, mp.cons.shape)
        mp.t_pred = float(rng.uniform(0.05, 0.5))
        mp.t_list = float(rng.uniform(0.1, 0.7))
        X = rng.random((batch, d))
        y = rng.integers(0, l, batch)
        # alternate zero and fixed nonzero noise so both indicator paths
        # (noisy for the loss, noise-free for the regularizer) are exercised
        noise = None if probe % 2 == 0 else rng.gumbel(size=(batch, k))

        _, _, _, _, grads = batch_objective_grads(
            mp, X, y, noise, config.lam, config.cov_min, config.cov_max)
        analytic = np.concatenate([grads[name].ravel() for name in _PARAM_ORDER])

        theta = _pack(mp)
        fd = np.empty_like(theta)
        for i in range(theta.size):
            for sign, slot in ((1.0, 0), (-1.0, 1)):
                vec = theta.copy()
                vec[i] += sign * FD_STEP
                val = batch_objective(_unpack_into(mp, vec), X, y, noise,
                                      config.lam, config.cov_min, config.cov_max)[0]
                if slot == 0:
                    plus = val
                else:
                    fd[i] = (plus - val) / (2 * FD_STEP)
        keep = np.maximum(np.abs(analytic), np.abs(fd)) >= EXCLUDE_BELOW
        if keep.any():
            err = np.abs(analytic - fd) / np.maximum(
                np.maximum(np.abs(analytic), np.abs(fd)), REL_FLOOR)
            worst = max(worst, float(err[keep].max()))
    return worst
