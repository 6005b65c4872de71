import numpy as np
import pytest

from neurules.conjunction import (ConjunctionParams, conjunction_backward,
                                  conjunction_forward, softplus, softplus_inv)


def params(weights, epsilon):
    return ConjunctionParams(softplus_inv(np.asarray(weights, dtype=float)), epsilon)


def test_all_active_gives_exactly_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = rng.integers(1, 8)
        cp = params(rng.uniform(0.1, 3.0, d), epsilon=float(rng.uniform(0, 0.2)))
        assert conjunction_forward(np.ones(d), cp) == pytest.approx(1.0, abs=1e-12)


def test_strict_conjunction_zero_when_any_predicate_off():
    cp = params([1.0, 1.0], epsilon=0.0)
    assert conjunction_forward(np.array([1.0, 0.0]), cp) < 1e-9


def test_relaxed_hand_value():
    cp = params([1.0, 1.0], epsilon=0.1)
    got = conjunction_forward(np.array([1.0, 0.0]), cp)
    assert got == pytest.approx(2.0 / 22.0, abs=1e-12)
    assert got == pytest.approx(0.1 / (0.1 + 1.0), abs=1e-12)


def test_epsilon_bound_with_unit_weights():
    rng = np.random.default_rng(1)
    eps = 0.05
    for _ in range(2000):
        d = int(rng.integers(2, 10))
        w = rng.uniform(1.0, 4.0, d)
        preds = rng.uniform(0.0, 1.0, d)
        j = int(rng.integers(0, d))
        preds[j] = 0.0
        a = conjunction_forward(preds, params(w, eps))
        assert a <= eps + 1e-12


def test_epsilon_bound_relaxes_for_small_weights():
    # with w_j < 1 the bound becomes eps / (eps + w_j), not eps itself
    rng = np.random.default_rng(2)
    eps = 0.05
    for _ in range(500):
        d = int(rng.integers(2, 8))
        w = rng.uniform(0.05, 3.0, d)
        preds = np.ones(d)
        j = int(rng.integers(0, d))
        preds[j] = 0.0
        a = conjunction_forward(preds, params(w, eps))
        assert a <= eps / (eps + w[j]) + 1e-12


def test_equality_case_of_the_bound():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = int(rng.integers(2, 8))
        w = rng.uniform(1.0, 5.0, d)
        eps = float(rng.uniform(0.01, 0.2))
        j = int(rng.integers(0, d))
        preds = np.ones(d)
        preds[j] = 0.0
        a = conjunction_forward(preds, params(w, eps))
        assert a == pytest.approx(eps / (eps + w[j]), abs=1e-9)


def test_all_predicates_off_gradient_direction():
    rng = np.random.default_rng(4)
    for _ in range(300):
        d = int(rng.integers(2, 10))
        w = rng.uniform(0.5, 2.0, d)
        cp = params(w, 0.05)
        d_pred, _ = conjunction_backward(np.zeros(d), cp)
        expected = w / w.sum()
        assert np.all(np.abs(d_pred - expected) <= 0.1 * expected)


def test_strict_gradient_vanishes_for_other_predicates():
    cp = params([1.0, 1.0, 1.0], epsilon=0.0)
    d_pred, _ = conjunction_backward(np.array([0.8, 0.0, 0.9]), cp)
    assert d_pred[0] == pytest.approx(0.0, abs=1e-20)
    assert d_pred[2] == pytest.approx(0.0, abs=1e-20)


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(300):
        d = int(rng.integers(2, 8))
        preds = rng.uniform(0.05, 0.95, d)
        raw = softplus_inv(rng.uniform(0.05, 2.0, d))
        eps = 0.05
        cp = ConjunctionParams(raw.copy(), eps)
        d_pred, d_raw = conjunction_backward(preds, cp)
        for i in range(d):
            up = preds.copy(); up[i] += h
            dn = preds.copy(); dn[i] -= h
            fd = (conjunction_forward(up, cp) - conjunction_forward(dn, cp)) / (2 * h)
            assert abs(d_pred[i] - fd) / max(abs(fd), abs(d_pred[i]), 1e-6) < 1e-4
            up = raw.copy(); up[i] += h
            dn = raw.copy(); dn[i] -= h
            fd = (conjunction_forward(preds, ConjunctionParams(up, eps)) -
                  conjunction_forward(preds, ConjunctionParams(dn, eps))) / (2 * h)
            assert abs(d_raw[i] - fd) / max(abs(fd), abs(d_raw[i]), 1e-6) < 1e-4


def test_weight_gradient_positive_with_active_predicate():
    rng = np.random.default_rng(6)
    for _ in range(200):
        d = int(rng.integers(2, 8))
        preds = np.zeros(d)
        preds[int(rng.integers(0, d))] = float(rng.uniform(0.1, 1.0))
        raw = softplus_inv(rng.uniform(0.2, 2.0, d))
        _, d_raw = conjunction_backward(preds, ConjunctionParams(raw, 0.05))
        assert np.all(d_raw > 0)


def test_weight_gating_removes_predicate_influence():
    raw = np.array([softplus_inv(1.0), -30.0])  # second weight ~ 1e-13
    cp = ConjunctionParams(raw, 0.05)
    lo = conjunction_forward(np.array([0.9, 0.0]), cp)
    hi = conjunction_forward(np.array([0.9, 1.0]), cp)
    assert hi - lo < 1e-10
    d_pred, _ = conjunction_backward(np.array([0.9, 0.3]), cp)
    assert abs(d_pred[1]) < 1e-10


def test_range_invariant():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        d = int(rng.integers(1, 10))
        preds = rng.uniform(0, 1, d)
        cp = params(rng.uniform(0.01, 5.0, d), float(rng.choice([0.0, 0.01, 0.05, 0.3])))
        a = conjunction_forward(preds, cp)
        assert -1e-12 <= a <= 1.0 + 1e-12


def test_binary_limit_equals_logical_and():
    rng = np.random.default_rng(8)
    for _ in range(300):
        d = int(rng.integers(1, 8))
        preds = rng.integers(0, 2, d).astype(float)
        w = rng.uniform(0.2, 2.0, d)
        a = conjunction_forward(preds, params(w, 0.0))
        assert round(a) == int(preds.min())


def test_negative_epsilon_rejected():
    with pytest.raises(ValueError):
        ConjunctionParams(np.zeros(3), epsilon=-0.1)
