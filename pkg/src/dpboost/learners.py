"""Weak learners over Boolean data: 1-rules and TopDown decision trees.

The 1-rule class holds the ``2r + 2`` hypotheses ``x_1, -x_1, ..., x_r, -x_r,
+1, -1`` in that canonical order; index ``2j`` is the literal on feature
``j``, ``2j + 1`` its negation.

Trees split on single features: an example goes to the right child when the
feature is 1. Split quality is the drop in the Gini potential
``sum_leaves w(l) G(q(l))`` with ``G(q) = 4q(1-q)``, where ``w(l)`` is the
probability mass reaching leaf ``l`` and ``q(l)`` the positive fraction of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import BooleanDataset
from .mechanisms import check_noise_rate, sample_laplace, weighted_exponential_mechanism
from .rng import RngStream

LITERAL = "literal"
NEGATED = "negated-literal"
TRUE = "const-true"
FALSE = "const-false"


def _check_mu(ds: BooleanDataset, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (ds.n,):
        raise ValueError(f"distribution has length {mu.size}, dataset has {ds.n} examples")
    return mu


# -- 1-rules -------------------------------------------------------------------

@dataclass(frozen=True)
class OneRule:
    kind: str
    feature: int | None = None

    def __post_init__(self):
        if self.kind not in (LITERAL, NEGATED, TRUE, FALSE):
            raise ValueError(f"unknown 1-rule kind {self.kind!r}")
        if (self.kind in (LITERAL, NEGATED)) != (self.feature is not None):
            raise ValueError("a feature index is required exactly for (negated) literals")

    @classmethod
    def from_index(cls, index: int, r: int) -> "OneRule":
        if not 0 <= index < 2 * r + 2:
            raise ValueError(f"1-rule index {index} out of range for r={r}")
        if index == 2 * r:
            return cls(TRUE)
        if index == 2 * r + 1:
            return cls(FALSE)
        return cls(LITERAL if index % 2 == 0 else NEGATED, index // 2)

    def index(self, r: int) -> int:
        if self.kind == TRUE:
            return 2 * r
        if self.kind == FALSE:
            return 2 * r + 1
        return 2 * self.feature + (self.kind == NEGATED)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        n = x.shape[0]
        if self.kind == TRUE:
            return np.ones(n, dtype=np.int8)
        if self.kind == FALSE:
            return -np.ones(n, dtype=np.int8)
        col = x[:, self.feature].astype(np.int8)
        return 2 * col - 1 if self.kind == LITERAL else 1 - 2 * col

    def features_used(self) -> set[int]:
        return set() if self.feature is None else {self.feature}

    def describe(self, names) -> str:
        if self.kind == TRUE:
            return "+1"
        if self.kind == FALSE:
            return "-1"
        sign = "" if self.kind == LITERAL else "-"
        return f"{sign}[{names[self.feature]}]"

    def to_json(self) -> dict:
        return {"kind": self.kind, "feature": self.feature}


def stump_errors(ds: BooleanDataset, mu) -> np.ndarray:
    """Weighted error of every 1-rule, in canonical order."""
    mu = _check_mu(ds, mu)
    total = mu.sum()
    pos = mu[ds.y > 0].sum()
    corr = (mu * ds.y) @ ds.xf  # sum_i mu_i y_i x_ij
    lit = np.clip(pos - corr, 0.0, total)
    errs = np.empty(2 * ds.r + 2)
    errs[0:2 * ds.r:2] = lit
    errs[1:2 * ds.r:2] = total - lit
    errs[2 * ds.r] = total - pos
    errs[2 * ds.r + 1] = pos
    return errs


def weighted_error(ds: BooleanDataset, mu, h) -> float:
    """``sum_i mu_i [h(x_i) != y_i]``."""
    mu = _check_mu(ds, mu)
    return float(mu[h.predict(ds.x) != ds.y].sum())


def train_1r(ds: BooleanDataset, mu) -> OneRule:
    """Exact minimum-error 1-rule; ties go to the lowest canonical index."""
    errs = stump_errors(ds, mu)
    best = int(np.flatnonzero(errs <= errs.min() + 1e-12)[0])
    return OneRule.from_index(best, ds.r)


def train_dp_1r(ds: BooleanDataset, mu, eta: float, rng: RngStream) -> OneRule:
    """1-rule drawn with probability proportional to ``exp(-eta * error)``."""
    eta = check_noise_rate(eta)
    errs = stump_errors(ds, mu)
    return OneRule.from_index(weighted_exponential_mechanism(-errs, eta, rng), ds.r)


# -- Gini potential --------------------------------------------------------------

def gini(q):
    """``G(q) = 4q(1-q)``."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~(q_arr >= 0)) or np.any(q_arr > 1):
        raise ValueError(f"Gini argument must lie in [0, 1], got {q}")
    out = 4.0 * q_arr * (1.0 - q_arr)
    return float(out) if out.ndim == 0 else out


def _weighted_gini(pos, neg):
    """``w * G(q)`` from positive and negative leaf masses."""
    pos = np.maximum(pos, 0.0)
    neg = np.maximum(neg, 0.0)
    w = pos + neg
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w > 0, 4.0 * pos * neg / w, 0.0)
    return out


@dataclass(frozen=True)
class LeafStats:
    leaf: int
    weight: float
    positive_fraction: float


# -- decision trees ----------------------------------------------------------------

class DecisionTree:
    """Binary tree over feature splits; node 0 is the root.

    Internal nodes have ``feature >= 0``; leaves have ``feature == -1`` and a
    label in {+1, -1} (0 while unlabeled).
    """

    def __init__(self, feature=(-1,), left=(-1,), right=(-1,), label=(0,)):
        self.feature = list(feature)
        self.left = list(left)
        self.right = list(right)
        self.label = list(label)

    @property
    def t(self) -> int:
        """Number of internal nodes."""
        return sum(f >= 0 for f in self.feature)

    def leaves(self) -> list[int]:
        return [i for i, f in enumerate(self.feature) if f < 0]

    def is_leaf(self, node: int) -> bool:
        return 0 <= node < len(self.feature) and self.feature[node] < 0

    def copy(self) -> "DecisionTree":
        return DecisionTree(self.feature, self.left, self.right, self.label)

    def split(self, leaf: int, feature: int) -> "DecisionTree":
        """Tree with ``leaf`` replaced by a split on ``feature``."""
        if not self.is_leaf(leaf):
            raise ValueError(f"node {leaf} is not a leaf")
        out = self.copy()
        lo = len(out.feature)
        out.feature[leaf] = feature
        out.left[leaf], out.right[leaf] = lo, lo + 1
        out.label[leaf] = 0
        out.feature += [-1, -1]
        out.left += [-1, -1]
        out.right += [-1, -1]
        out.label += [0, 0]
        return out

    def route(self, x: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row of ``x``."""
        x = np.asarray(x)
        feature = np.array(self.feature)
        left = np.array(self.left)
        right = np.array(self.right)
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            f = feature[node]
            active = f >= 0
            if not active.any():
                return node
            go = x[rows[active], f[active]] == 1
            node[active] = np.where(go, right[node[active]], left[node[active]])

    def predict(self, x: np.ndarray) -> np.ndarray:
        labels = np.array(self.label, dtype=np.int8)
        if np.any(labels[self.leaves()] == 0):
            raise ValueError("tree has unlabeled leaves")
        return labels[self.route(x)]

    def features_used(self) -> set[int]:
        return {f for f in self.feature if f >= 0}

    def to_json(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"label": self.label[node]}
        return {"split": self.feature[node],
                "left": self.to_json(self.left[node]),
                "right": self.to_json(self.right[node])}

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionTree":
        tree = cls([], [], [], [])

        def add(o):
            i = len(tree.feature)
            tree.feature.append(-1)
            tree.left.append(-1)
            tree.right.append(-1)
            tree.label.append(0)
            if "split" in o:
                tree.feature[i] = int(o["split"])
                tree.left[i] = add(o["left"])
                tree.right[i] = add(o["right"])
            else:
                tree.label[i] = int(o["label"])
            return i

        add(obj)
        return tree

    def describe(self, names, node: int = 0, indent: str = "") -> str:
        if self.feature[node] < 0:
            return f"{indent}-> {self.label[node]:+d}"
        return (f"{indent}if [{names[self.feature[node]]}]:\n"
                f"{self.describe(names, self.right[node], indent + '  ')}\n"
                f"{indent}else:\n"
                f"{self.describe(names, self.left[node], indent + '  ')}")

    def __eq__(self, other):
        return isinstance(other, DecisionTree) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"DecisionTree({self.to_json()})"


def _leaf_masses(tree: DecisionTree, ds: BooleanDataset, mu: np.ndarray):
    """Positive and negative probability mass per node id."""
    node = tree.route(ds.x)
    size = len(tree.feature)
    pos = np.bincount(node, weights=mu * (ds.y > 0), minlength=size)
    neg = np.bincount(node, weights=mu * (ds.y < 0), minlength=size)
    return node, pos, neg


def leaf_stats(tree: DecisionTree, ds: BooleanDataset, mu) -> list[LeafStats]:
    """Weight and positive fraction per leaf; an empty leaf reports ``q = 1/2``."""
    mu = _check_mu(ds, mu)
    _, pos, neg = _leaf_masses(tree, ds, mu)
    out = []
    for leaf in tree.leaves():
        w = pos[leaf] + neg[leaf]
        out.append(LeafStats(leaf, float(w), float(pos[leaf] / w) if w > 0 else 0.5))
    return out


def tree_potential(tree: DecisionTree, ds: BooleanDataset, mu) -> float:
    return float(sum(s.weight * gini(s.positive_fraction) for s in leaf_stats(tree, ds, mu)))


def tree_error(tree: DecisionTree, ds: BooleanDataset, mu) -> float:
    """Error of the tree under majority labeling of its leaves."""
    return float(sum(s.weight * min(s.positive_fraction, 1 - s.positive_fraction)
                     for s in leaf_stats(tree, ds, mu)))


def _split_improvements(rows: np.ndarray, ds: BooleanDataset, mu: np.ndarray) -> np.ndarray:
    """Potential drop for splitting the leaf holding ``rows`` on each feature."""
    m = mu[rows]
    is_pos = ds.y[rows] > 0
    xs = ds.xf[rows]
    pos_all, neg_all = m[is_pos].sum(), m[~is_pos].sum()
    pos1 = (m * is_pos) @ xs
    neg1 = (m * ~is_pos) @ xs
    return (_weighted_gini(pos_all, neg_all)
            - _weighted_gini(pos_all - pos1, neg_all - neg1)
            - _weighted_gini(pos1, neg1))


def improvement(tree: DecisionTree, leaf: int, feature: int, ds: BooleanDataset, mu) -> float:
    """``G(T, mu) - G(T(leaf, feature), mu)``."""
    mu = _check_mu(ds, mu)
    if not tree.is_leaf(leaf):
        raise ValueError(f"node {leaf} is not a leaf")
    if not 0 <= feature < ds.r:
        raise ValueError(f"feature {feature} out of range")
    rows = np.flatnonzero(tree.route(ds.x) == leaf)
    return float(_split_improvements(rows, ds, mu)[feature])


def label_leaves_noisy(tree: DecisionTree, ds: BooleanDataset, mu, epsilon: float,
                       rng: RngStream, zeta: float = 1.0) -> DecisionTree:
    """Label each leaf by the sign of its noisy signed mass.

    The signed mass ``sum_{i -> leaf} mu_i y_i`` moves by at most ``2 zeta``
    between neighbouring inputs, so Laplace noise of scale ``2 zeta / epsilon``
    per leaf makes the labeling ``epsilon``-private; leaves partition the data.
    Ties go to +1.
    """
    if not epsilon > 0:
        raise ValueError(f"labeling budget must be positive, got {epsilon}")
    mu = _check_mu(ds, mu)
    _, pos, neg = _leaf_masses(tree, ds, mu)
    out = tree.copy()
    scale = 2.0 * zeta / epsilon
    for leaf in out.leaves():
        noisy = pos[leaf] - neg[leaf] + sample_laplace(scale, rng)
        out.label[leaf] = 1 if noisy >= 0 else -1
    return out


def label_leaves_majority(tree: DecisionTree, ds: BooleanDataset, mu) -> DecisionTree:
    """Exact weighted-majority labels (ties and empty leaves go to +1)."""
    mu = _check_mu(ds, mu)
    _, pos, neg = _leaf_masses(tree, ds, mu)
    out = tree.copy()
    for leaf in out.leaves():
        out.label[leaf] = 1 if pos[leaf] >= neg[leaf] else -1
    return out


def train_dp_topdown(ds: BooleanDataset, mu, t: int, eta: float, rng: RngStream,
                     zeta: float = 1.0) -> DecisionTree:
    """Grow ``t`` splits by exponential-mechanism selection, then label noisily.

    Each selection samples a (leaf, feature) pair with probability
    proportional to ``exp(eta * improvement)``. Leaf labels use Laplace noise
    with budget ``8 t eta zeta``; ``zeta`` cancels out of the noise scale and
    only matters for reporting. Growth stops early once the tree would have
    more leaves than examples; ``tree.t`` then records the actual size.
    """
    eta = check_noise_rate(eta)
    if t < 1:
        raise ValueError("need at least one internal node")
    mu = _check_mu(ds, mu)
    target = min(t, ds.n - 1) if ds.r > 0 else 0

    tree = DecisionTree()
    node = np.zeros(ds.n, dtype=np.int64)
    scores = {0: _split_improvements(np.arange(ds.n), ds, mu)}
    while tree.t < target:
        leaves = sorted(scores)
        flat = np.concatenate([scores[leaf] for leaf in leaves])
        pick = weighted_exponential_mechanism(flat, eta, rng)
        leaf, feature = leaves[pick // ds.r], pick % ds.r
        tree = tree.split(leaf, feature)
        del scores[leaf]
        rows = np.flatnonzero(node == leaf)
        right = ds.x[rows, feature] == 1
        node[rows[~right]] = tree.left[leaf]
        node[rows[right]] = tree.right[leaf]
        for child in (tree.left[leaf], tree.right[leaf]):
            scores[child] = _split_improvements(np.flatnonzero(node == child), ds, mu)
    return label_leaves_noisy(tree, ds, mu, 8 * t * eta * zeta, rng, zeta)


def hypothesis_from_json(obj: dict):
    if "kind" in obj:
        feature = obj.get("feature")
        return OneRule(obj["kind"], None if feature is None else int(feature))
    return DecisionTree.from_json(obj)
