import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

from dpboost.data import BooleanDataset
from dpboost.learners import (
    DecisionTree,
    OneRule,
    _weighted_gini,
    gini,
    hypothesis_from_json,
    improvement,
    label_leaves_majority,
    label_leaves_noisy,
    leaf_stats,
    stump_errors,
    train_1r,
    train_dp_1r,
    train_dp_topdown,
    tree_error,
    tree_potential,
    weighted_error,
)
from dpboost.rng import RngStream

from conftest import random_dataset, random_distribution


def ds_from(x, y):
    x = np.asarray(x, dtype=np.uint8)
    return BooleanDataset(x, np.asarray(y, dtype=np.int8), tuple(f"f{j}" for j in range(x.shape[1])))


def all_rules(r):
    return [OneRule.from_index(i, r) for i in range(2 * r + 2)]


def domain_tv(a, mu, b, nu):
    """Total variation between two weighted samples viewed as distributions over (x, y)."""
    p, q = defaultdict(float), defaultdict(float)
    for i in range(a.n):
        p[(a.x[i].tobytes(), int(a.y[i]))] += mu[i]
        q[(b.x[i].tobytes(), int(b.y[i]))] += nu[i]
    return 0.5 * sum(abs(p[k] - q[k]) for k in set(p) | set(q))


def random_neighbours(rng):
    n, r = int(rng.integers(2, 12)), int(rng.integers(1, 5))
    ds = random_dataset(rng, n, r)
    k = int(rng.integers(n))
    other = ds.with_record(k, rng.integers(0, 2, r), int(rng.choice([-1, 1])))
    mu = random_distribution(rng, n)
    nu = np.abs(mu + rng.normal(0, float(rng.choice([1e-3, 0.03, 0.3])), n)) + 1e-9
    return ds, other, mu, nu / nu.sum()


# -- 1-rules ---------------------------------------------------------------------

def test_canonical_order():
    r = 3
    rules = all_rules(r)
    assert rules[0] == OneRule("literal", 0) and rules[1] == OneRule("negated-literal", 0)
    assert rules[6] == OneRule("const-true") and rules[7] == OneRule("const-false")
    assert all(h.index(r) == i for i, h in enumerate(rules))
    with pytest.raises(ValueError):
        OneRule.from_index(8, r)
    with pytest.raises(ValueError):
        OneRule("literal")


def test_one_rule_predict_and_json():
    x = np.array([[0, 1], [1, 0]])
    assert OneRule("literal", 1).predict(x).tolist() == [1, -1]
    assert OneRule("negated-literal", 1).predict(x).tolist() == [-1, 1]
    assert OneRule("const-true").predict(x).tolist() == [1, 1]
    for h in all_rules(2):
        assert hypothesis_from_json(h.to_json()) == h
    assert OneRule("negated-literal", 1).describe(["a", "b"]) == "-[b]"


def test_weighted_error_examples():
    one = ds_from([[0], [0]], [1, 1])
    assert weighted_error(one, [0.5, 0.5], OneRule("const-true")) == 0.0
    two = ds_from([[0], [0]], [1, -1])
    assert weighted_error(two, [0.5, 0.5], OneRule("const-true")) == 0.5
    four = ds_from([[1], [0], [1], [0]], [-1, -1, 1, 1])
    # literal x0 errs on examples 1 and 4
    assert weighted_error(four, [0.4, 0.3, 0.2, 0.1], OneRule("literal", 0)) == pytest.approx(0.5)


def test_stump_errors_match_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ds = random_dataset(rng, int(rng.integers(1, 20)), int(rng.integers(0, 5)))
        mu = random_distribution(rng, ds.n)
        brute = [weighted_error(ds, mu, h) for h in all_rules(ds.r)]
        assert np.allclose(stump_errors(ds, mu), brute, atol=1e-12)


def test_train_1r_examples():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, (40, 5))
    ds = ds_from(x, 2 * x[:, 3] - 1)
    h = train_1r(ds, np.full(40, 1 / 40))
    assert h == OneRule("literal", 3)
    assert weighted_error(ds, np.full(40, 1 / 40), h) == 0.0
    ds = ds_from(np.array([[0, 1], [1, 1], [1, 0]]), [1, 1, 1])
    assert train_1r(ds, np.full(3, 1 / 3)) == OneRule("const-true")
    xor = ds_from([[0, 0], [0, 1], [1, 0], [1, 1]], [-1, 1, 1, -1])
    errs = stump_errors(xor, np.full(4, 0.25))
    assert errs.min() == pytest.approx(0.5)
    assert weighted_error(xor, np.full(4, 0.25), train_1r(xor, np.full(4, 0.25))) == 0.5


def test_train_dp_1r_sharp_limit_and_validation():
    rng = np.random.default_rng(2)
    x = rng.integers(0, 2, (30, 4))
    ds = ds_from(x, 2 * x[:, 2] - 1)
    mu = np.full(30, 1 / 30)
    base = RngStream(5)
    assert all(train_dp_1r(ds, mu, 1e6, base.child(i)) == OneRule("literal", 2)
               for i in range(10_000))
    with pytest.raises(ValueError):
        train_dp_1r(ds, mu, 0.0, base)


def test_train_dp_1r_utility_bound():
    rng = np.random.default_rng(3)
    ds = random_dataset(rng, 50, 6)
    mu = random_distribution(rng, 50)
    errs = stump_errors(ds, mu)
    eta, beta = 40.0, 0.1
    slack = math.log(errs.size / beta) / eta
    base = RngStream(6)
    bad = sum(weighted_error(ds, mu, train_dp_1r(ds, mu, eta, base.child(i))) > errs.min() + slack
              for i in range(10_000))
    assert bad / 10_000 <= beta


def test_train_dp_1r_planted_advantage():
    rng = np.random.default_rng(4)
    n, gamma = 200, 0.2
    x = rng.integers(0, 2, (n, 5))
    y = 2 * x[:, 0] - 1
    flip = rng.random(n) < 0.5 - gamma
    y[flip] *= -1
    ds = ds_from(x, y)
    mu = np.full(n, 1 / n)
    best = stump_errors(ds, mu).min()
    eta, beta = 100.0, 0.05
    bound = best + math.log(12 / beta) / eta
    base = RngStream(7)
    errs = [weighted_error(ds, mu, train_dp_1r(ds, mu, eta, base.child(i))) for i in range(2000)]
    assert np.mean(np.array(errs) <= bound) >= 1 - beta


def test_error_robust_sensitivity():
    rng = np.random.default_rng(10)
    violations = 0
    for _ in range(1000):
        ds, other, mu, nu = random_neighbours(rng)
        d = domain_tv(ds, mu, other, nu)
        diff = np.abs(stump_errors(ds, mu) - stump_errors(other, nu))
        violations += int(np.any(diff > 2 * d + 1e-12))
    assert violations == 0


# -- Gini and trees ----------------------------------------------------------------

def test_gini_values():
    assert gini(0.5) == 1.0
    assert gini(0.0) == 0.0 and gini(1.0) == 0.0
    assert gini(0.25) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        gini(1.5)


def test_leaf_stats_examples():
    ds = ds_from([[0], [1], [0], [1]], [-1, 1, -1, 1])
    mu = np.full(4, 0.25)
    (root,) = leaf_stats(DecisionTree(), ds, mu)
    assert (root.weight, root.positive_fraction) == (pytest.approx(1.0), pytest.approx(0.5))
    split = DecisionTree().split(0, 0)
    stats = {s.leaf: s for s in leaf_stats(split, ds, mu)}
    assert stats[split.left[0]].positive_fraction == 0.0
    assert stats[split.right[0]].positive_fraction == 1.0
    assert stats[split.right[0]].weight == pytest.approx(0.5)
    pure = ds_from([[0], [0]], [1, -1])
    empty = leaf_stats(DecisionTree().split(0, 0), pure, [0.5, 0.5])
    assert [(s.weight, s.positive_fraction) for s in empty][1] == (0.0, 0.5)


def test_potential_and_error():
    ds = ds_from([[0], [1], [0], [1]], [-1, 1, -1, 1])
    mu = np.full(4, 0.25)
    assert tree_potential(DecisionTree(), ds, mu) == pytest.approx(1.0)
    assert tree_error(DecisionTree(), ds, mu) == pytest.approx(0.5)
    split = DecisionTree().split(0, 0)
    assert tree_potential(split, ds, mu) == 0.0 and tree_error(split, ds, mu) == 0.0
    assert improvement(DecisionTree(), 0, 0, ds, mu) == pytest.approx(1.0)


def random_tree(rng, r, splits):
    tree = DecisionTree()
    for _ in range(splits):
        tree = tree.split(int(rng.choice(tree.leaves())), int(rng.integers(r)))
    return tree


def test_error_below_potential_and_nonnegative_improvement():
    rng = np.random.default_rng(11)
    for _ in range(300):
        ds = random_dataset(rng, 8, 3)
        mu = random_distribution(rng, 8)
        tree = random_tree(rng, 3, int(rng.integers(0, 4)))
        assert tree_error(tree, ds, mu) <= tree_potential(tree, ds, mu) + 1e-12
        for leaf in tree.leaves():
            for f in range(3):
                im = improvement(tree, leaf, f, ds, mu)
                assert im >= -1e-12
                direct = tree_potential(tree, ds, mu) - tree_potential(tree.split(leaf, f), ds, mu)
                assert im == pytest.approx(direct, abs=1e-12)


def test_constant_split_has_zero_improvement():
    ds = ds_from([[1, 0], [1, 1], [1, 0]], [1, -1, -1])
    assert improvement(DecisionTree(), 0, 0, ds, np.full(3, 1 / 3)) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        improvement(DecisionTree().split(0, 0), 0, 0, ds, np.full(3, 1 / 3))


def test_improvement_robust_sensitivity():
    rng = np.random.default_rng(12)
    violations = 0
    node_worst = 0.0
    for _ in range(1000):
        ds, other, mu, nu = random_neighbours(rng)
        zeta = domain_tv(ds, mu, other, nu) * (1 + 1e-9) + 1e-15
        tree = random_tree(rng, ds.r, int(rng.integers(0, 3)))
        for leaf in tree.leaves():
            for f in range(ds.r):
                d = abs(improvement(tree, leaf, f, ds, mu) - improvement(tree, leaf, f, other, nu))
                violations += int(d > 4 * zeta + 1e-12)
        # single node: |w G(q) - w' G(q')| / 4 <= 5/4 zeta
        a = {s.leaf: s for s in leaf_stats(tree, ds, mu)}
        b = {s.leaf: s for s in leaf_stats(tree, other, nu)}
        for leaf in tree.leaves():
            wg = a[leaf].weight * gini(a[leaf].positive_fraction)
            wg2 = b[leaf].weight * gini(b[leaf].positive_fraction)
            node_worst = max(node_worst, abs(wg - wg2) / 4 / zeta)
    assert violations == 0
    assert node_worst <= 1.25 + 1e-9


def test_weighted_gini_matches_definition():
    for pos, neg in [(0.2, 0.3), (0.0, 0.5), (0.25, 0.25)]:
        w = pos + neg
        assert _weighted_gini(pos, neg) == pytest.approx(w * gini(pos / w))
    assert _weighted_gini(0.0, 0.0) == 0.0


def test_tree_json_round_trip_and_predict():
    tree = DecisionTree().split(0, 1)
    tree = tree.split(tree.left[0], 0)
    ds = ds_from([[0, 0], [1, 0], [0, 1], [1, 1]], [-1, 1, 1, 1])
    labeled = label_leaves_majority(tree, ds, np.full(4, 0.25))
    assert labeled.predict(ds.x).tolist() == [-1, 1, 1, 1]
    obj = labeled.to_json()
    assert obj["split"] == 1 and obj["right"] == {"label": 1}
    assert hypothesis_from_json(obj) == labeled
    assert labeled.features_used() == {0, 1}
    with pytest.raises(ValueError):
        tree.predict(ds.x)


def test_topdown_sharp_limit():
    x = np.array([[a, b, c] for a, b, c in itertools.product([0, 1], repeat=3)] * 3)
    ds = ds_from(x, 2 * x[:, 2] - 1)
    mu = np.full(ds.n, 1 / ds.n)
    tree = train_dp_topdown(ds, mu, 1, 1e6, RngStream(0), zeta=1 / (0.5 * ds.n))
    assert tree.feature[0] == 2
    assert tree.label[tree.left[0]] == -1 and tree.label[tree.right[0]] == 1
    assert tree_error(tree, ds, mu) == 0.0
    assert np.all(tree.predict(ds.x) == ds.y)
    with pytest.raises(ValueError):
        train_dp_topdown(ds, mu, 1, 0.0, RngStream(0))


def test_topdown_deterministic_and_sized():
    rng = np.random.default_rng(13)
    ds = random_dataset(rng, 60, 6)
    mu = random_distribution(rng, 60)
    a = train_dp_topdown(ds, mu, 4, 5.0, RngStream(9))
    b = train_dp_topdown(ds, mu, 4, 5.0, RngStream(9))
    assert a == b and a.t == 4 and len(a.leaves()) == 5
    tiny = random_dataset(rng, 3, 2)
    assert train_dp_topdown(tiny, np.full(3, 1 / 3), 10, 5.0, RngStream(1)).t == 2


def test_noisy_labels_limits():
    ds = ds_from([[0], [1], [1], [0]], [1, 1, -1, -1])
    mu = np.array([0.4, 0.3, 0.2, 0.1])
    tree = DecisionTree().split(0, 0)
    noisy = label_leaves_noisy(tree, ds, mu, 1e9, RngStream(1))
    assert noisy == label_leaves_majority(tree, ds, mu)
    # the right leaf of this split gets no examples when feature 0 is constant
    empty = ds_from([[0], [0]], [1, -1])
    base = RngStream(2)
    labels = [label_leaves_noisy(tree, empty, [0.5, 0.5], 1.0, base.child(i)).label[tree.right[0]]
              for i in range(10_000)]
    assert abs(np.mean(np.array(labels) == 1) - 0.5) <= 0.02
    with pytest.raises(ValueError):
        label_leaves_noisy(tree, ds, mu, 0.0, base)
