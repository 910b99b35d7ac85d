import math

import numpy as np
import pytest

from dpboost.audit import (
    audit_selection,
    audit_weak_learner,
    empirical_epsilon,
    nonprivate_1r,
    toy_neighboring_pair,
)
from dpboost.data import DataError
from dpboost.learners import DecisionTree, OneRule, label_leaves_noisy, train_1r, train_dp_1r
from dpboost.mechanisms import weighted_exponential_mechanism
from dpboost.rng import RngStream


def test_empirical_epsilon_counts():
    rep = empirical_epsilon(["a"] * 200 + ["b"] * 100, ["a"] * 100 + ["b"] * 200)
    assert rep.epsilon_hat == pytest.approx(math.log(2))
    assert rep.rows[0].count + rep.rows[0].count_prime == 300
    rare = empirical_epsilon(["a"] * 1000 + ["b"] * 5, ["a"] * 1005)
    assert rare.epsilon_hat == pytest.approx(math.log(1005 / 1000))
    assert empirical_epsilon(["a"] * 100, ["b"] * 100).epsilon_hat == math.inf
    lines = rep.csv_lines()
    assert lines[0] == "outcome,freq,freq_prime,log_ratio"
    assert len(lines) == 3


def test_toy_pair_flips_argmin():
    ds, other = toy_neighboring_pair()
    mu = np.full(8, 1 / 8)
    assert train_1r(ds, mu) == OneRule("literal", 0)
    assert train_1r(other, mu) == OneRule("literal", 1)
    assert int(np.sum(np.any(ds.x != other.x, axis=1) | (ds.y != other.y))) == 1


def test_identical_inputs_give_small_epsilon():
    q = np.zeros(4)
    rep = audit_selection(weighted_exponential_mechanism, q, q, 1.0, 100_000, RngStream(1))
    assert rep.epsilon_hat <= 0.05


def test_dp_1r_audit_within_budget():
    ds, other = toy_neighboring_pair()
    mu = np.full(8, 1 / 8)
    zeta = 1 / (0.5 * 8)
    eta = 1.0 / (4 * zeta)
    rep = audit_weak_learner(lambda d, m, r: train_dp_1r(d, m, eta, r), ds, other, mu, mu.copy(),
                             20_000, RngStream(2), zeta)
    assert rep.epsilon_hat <= 1.2


def test_nonprivate_control_is_flagged():
    ds, other = toy_neighboring_pair()
    mu = np.full(8, 1 / 8)
    rep = audit_weak_learner(nonprivate_1r, ds, other, mu, mu.copy(), 10_000, RngStream(3))
    assert rep.epsilon_hat >= 3


def test_leaf_labels_audit_within_budget():
    ds, _ = toy_neighboring_pair()
    other = ds.with_record(0, ds.x[0], -1)
    mu = np.full(8, 1 / 8)
    zeta = 1 / 8
    tree = DecisionTree().split(0, 0)
    budget = 1.0
    rep = audit_weak_learner(lambda d, m, r: label_leaves_noisy(tree, d, m, budget, r, zeta),
                             ds, other, mu, mu.copy(), 40_000, RngStream(4), zeta)
    assert rep.epsilon_hat <= budget + 0.2


def test_audit_preconditions():
    ds, other = toy_neighboring_pair()
    mu = np.full(8, 1 / 8)
    with pytest.raises(ValueError):
        audit_weak_learner(nonprivate_1r, ds, other, mu, mu, 100, RngStream(0))
    far = other.with_record(0, [0, 0], -1)
    with pytest.raises(DataError):
        audit_weak_learner(nonprivate_1r, ds, far, mu, mu, 10_000, RngStream(0))
    skew = np.full(8, 1 / 8)
    skew[0], skew[1] = 0.5, 0.0
    skew /= skew.sum()
    with pytest.raises(ValueError):
        audit_weak_learner(nonprivate_1r, ds, other, mu, skew, 10_000, RngStream(0), zeta=0.01)
