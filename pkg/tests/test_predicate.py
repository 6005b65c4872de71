import mpmath
import numpy as np
import pytest

from neurules.predicate import (PredicateParams, hard_predicate,
                                soft_predicate_backward, soft_predicate_forward,
                                soft_predicates)


def reference_activation(x, alpha, beta, temp):
    """Independent oracle: three-logit softmax at 50-digit precision."""
    with mpmath.workdps(50):
        t = mpmath.mpf(temp)
        logits = [mpmath.mpf(x) / t,
                  (2 * mpmath.mpf(x) - alpha) / t,
                  (3 * mpmath.mpf(x) - alpha - beta) / t]
        exps = [mpmath.e**v for v in logits]
        return float(exps[1] / sum(exps))


def fd_partials(x, p, h=1e-5):
    outs = []
    for bump in ("x", "alpha", "beta"):
        def f(v):
            if bump == "x":
                return soft_predicate_forward(v, p)
            if bump == "alpha":
                return soft_predicate_forward(x, PredicateParams(v, p.beta, p.temp))
            return soft_predicate_forward(x, PredicateParams(p.alpha, v, p.temp))
        base = {"x": x, "alpha": p.alpha, "beta": p.beta}[bump]
        outs.append((f(base + h) - f(base - h)) / (2 * h))
    return tuple(outs)


def test_forward_reference_value():
    p = PredicateParams(0.2, 0.8, 0.1)
    got = soft_predicate_forward(0.5, p)
    assert got == pytest.approx(1.0 / (1.0 + 2.0 * np.exp(-3.0)), abs=1e-12)
    assert got == pytest.approx(reference_activation(0.5, 0.2, 0.8, 0.1), abs=1e-12)
    assert got == pytest.approx(0.90945, abs=5e-5)


def test_forward_matches_reference_on_random_inputs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = float(rng.uniform(-0.5, 1.5))
        a, b = sorted(rng.uniform(0, 1, 2))
        t = float(rng.uniform(0.02, 1.0))
        got = soft_predicate_forward(x, PredicateParams(a, b, t))
        assert got == pytest.approx(reference_activation(x, a, b, t), rel=1e-10, abs=1e-12)


def test_boundary_value_is_one_half_in_the_limit():
    for t in (1e-2, 1e-3):
        v = soft_predicate_forward(0.2, PredicateParams(0.2, 0.8, t))
        assert v == pytest.approx(0.5, abs=1e-3)
    v = soft_predicate_forward(0.8, PredicateParams(0.2, 0.8, 1e-3))
    assert v == pytest.approx(0.5, abs=1e-3)


def test_interior_point_converges_to_one():
    v = soft_predicate_forward(0.5, PredicateParams(0.2, 0.8, 0.001))
    assert abs(v - 1.0) < 1e-9


def test_output_strictly_inside_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(500):
        x = float(rng.uniform(-2, 3))
        a, b = sorted(rng.uniform(0, 1, 2))
        t = float(rng.choice([1e-6, 1e-3, 0.05, 0.5, 5.0]))
        v = soft_predicate_forward(x, PredicateParams(a, b, t))
        assert 0.0 < v < 1.0


def test_convergence_to_hard_predicate():
    rng = np.random.default_rng(42)
    n = 10_000
    a, b = 0.3, 0.7
    x = rng.uniform(-0.5, 1.5, n)
    x = x[(np.abs(x - a) >= 0.05) & (np.abs(x - b) >= 0.05)]
    act, _, _ = soft_predicates(x[:, None], np.array([[a]]), np.array([[b]]), 1e-3)
    hard = np.array([hard_predicate(v, a, b) for v in x])
    assert np.abs(act[:, 0, 0] - hard).max() < 1e-6


def test_monotone_sharpening():
    temps = np.geomspace(1.0, 1e-3, 25)
    p_int = [soft_predicate_forward(0.5, PredicateParams(0.2, 0.8, t)) for t in temps]
    p_ext = [soft_predicate_forward(0.9, PredicateParams(0.2, 0.8, t)) for t in temps]
    assert all(b >= a - 1e-15 for a, b in zip(p_int, p_int[1:]))
    assert all(b <= a + 1e-15 for a, b in zip(p_ext, p_ext[1:]))


def test_backward_symmetry_at_midpoint():
    p = PredicateParams(0.3, 0.7, 0.1)
    _, da, db = soft_predicate_backward(0.5, p)
    assert da == pytest.approx(-db, rel=1e-12)


def test_backward_vanishes_when_saturated():
    p = PredicateParams(0.1, 0.9, 0.025)
    grads = soft_predicate_backward(0.5, p)
    assert all(abs(g) < 1e-6 for g in grads)


def test_backward_matches_finite_differences_reference_point():
    p = PredicateParams(0.2, 0.8, 0.1)
    ana = soft_predicate_backward(0.5, p)
    num = fd_partials(0.5, p)
    for a, n in zip(ana, num):
        assert a == pytest.approx(n, rel=1e-4, abs=1e-10)


def test_backward_matches_finite_differences_random_sweep():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 1000:
        x = float(rng.uniform(0, 1))
        a, b = sorted(rng.uniform(0, 1, 2))
        t = float(rng.uniform(0.05, 0.5))
        p = PredicateParams(a, b, t)
        act = soft_predicate_forward(x, p)
        if not (1e-6 <= act <= 1 - 1e-6):
            continue
        ana = soft_predicate_backward(x, p)
        num = fd_partials(x, p)
        for g_a, g_n in zip(ana, num):
            if max(abs(g_a), abs(g_n)) < 1e-8:
                continue
            assert abs(g_a - g_n) / max(abs(g_a), abs(g_n), 1e-6) < 1e-4
        checked += 1


def test_hard_predicate_boundaries():
    assert hard_predicate(0.3, 0.2, 0.8) == 1
    assert hard_predicate(0.2, 0.2, 0.8) == 1
    assert hard_predicate(0.8, 0.2, 0.8) == 1
    assert hard_predicate(0.9, 0.2, 0.8) == 0
    assert hard_predicate(0.1, 0.2, 0.8) == 0


def test_invalid_arguments_rejected():
    with pytest.raises(ValueError):
        PredicateParams(0.2, 0.8, 0.0)
    with pytest.raises(ValueError):
        PredicateParams(0.2, 0.8, -0.1)
    with pytest.raises(ValueError):
        PredicateParams(np.nan, 0.8, 0.1)
    with pytest.raises(ValueError):
        soft_predicate_forward(np.inf, PredicateParams(0.2, 0.8, 0.1))
    with pytest.raises(ValueError):
        soft_predicate_backward(np.nan, PredicateParams(0.2, 0.8, 0.1))
