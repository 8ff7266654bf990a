"""Weight-aware weak learners: decision stump, greedy decision tree, naive Bayes.

All learners take per-instance weights directly. Zero-weight instances are
dropped before training, and the remaining weights are rescaled to sum to the
number of instances left. This keeps leaf-size limits and Laplace smoothing
in instance units whatever scale the booster uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.special import xlogy

from .data import Dataset, Instance

CRITERIA = ("entropy", "gini", "error")

# Relative tolerance for treating two split scores (or class weights) as tied.
TIE_RTOL = 1e-9


def _argmax_first(counts: np.ndarray, tol: float) -> int:
    """Lowest index whose value is within ``tol`` of the maximum."""
    return int(np.flatnonzero(counts >= counts.max() - tol)[0])


def _impurity(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Weight-scaled impurity of each row of class weights (sums over branches add)."""
    total = counts.sum(axis=-1)
    if criterion == "error":
        return total - counts.max(axis=-1)
    if criterion == "gini":
        sq = (counts * counts).sum(axis=-1)
        return total - np.divide(sq, total, out=np.zeros_like(total), where=total > 0)
    if criterion == "entropy":
        return (xlogy(total, total) - xlogy(counts, counts).sum(axis=-1)) / math.log(2)
    raise ValueError(f"unknown split criterion {criterion!r}; expected one of {CRITERIA}")


# ---------------------------------------------------------------------------
# Trees


@dataclass(frozen=True, eq=False)
class Node:
    """A tree node. Leaves have no children.

    Numeric splits have two children (``value < threshold`` goes left); missing
    values follow the branch that held more training weight. Nominal splits
    have one child per declared value plus a trailing child for missing values.
    """

    label: int
    counts: np.ndarray
    attribute: int = -1
    threshold: float = math.nan
    missing_left: bool = True
    children: tuple["Node", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_nominal_split(self) -> bool:
        return bool(self.children) and math.isnan(self.threshold)

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.depth() for c in self.children)

    def n_nodes(self) -> int:
        return 1 + sum(c.n_nodes() for c in self.children)


def _route(node: Node, column: np.ndarray) -> list[np.ndarray]:
    """Boolean masks, one per child, for the rows in ``column``."""
    missing = np.isnan(column)
    if not node.is_nominal_split:
        with np.errstate(invalid="ignore"):
            left = column < node.threshold
        if node.missing_left:
            left |= missing
        return [left, ~left]
    codes = np.where(missing, len(node.children) - 1, np.nan_to_num(column)).astype(np.intp)
    return [codes == b for b in range(len(node.children))]


def _predict_into(node: Node, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf or rows.size == 0:
        out[rows] = node.label
        return
    for child, mask in zip(node.children, _route(node, X[rows, node.attribute])):
        _predict_into(child, X, rows[mask], out)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    root: Node
    n_classes: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        out = np.empty(len(X), dtype=np.intp)
        _predict_into(self.root, X, np.arange(len(X)), out)
        return out

    def describe(self, data: Dataset | None = None) -> str:
        lines: list[str] = []
        self._describe(self.root, data, 0, lines)
        return "\n".join(lines)

    def _describe(self, node, data, indent, lines):
        pad = "  " * indent
        name = (lambda c: data.classes[c]) if data is not None else str
        if node.is_leaf:
            lines.append(f"{pad}-> {name(node.label)}")
            return
        attr = data.attributes[node.attribute].name if data is not None else f"a{node.attribute}"
        if node.is_nominal_split:
            values = data.attributes[node.attribute].values if data is not None else range(len(node.children) - 1)
            tags = [f"{attr} = {v}" for v in values] + [f"{attr} is missing"]
        else:
            tags = [f"{attr} < {node.threshold:g}", f"{attr} >= {node.threshold:g}"]
        for tag, child in zip(tags, node.children):
            lines.append(f"{pad}{tag}")
            self._describe(child, data, indent + 1, lines)


@dataclass(frozen=True, eq=False)
class DecisionStump(DecisionTree):
    """A one-split tree; a single leaf when no split exists."""

    @property
    def attribute(self) -> int | None:
        return None if self.root.is_leaf else self.root.attribute

    @property
    def threshold(self) -> float | None:
        if self.root.is_leaf or self.root.is_nominal_split:
            return None
        return self.root.threshold

    @property
    def branch_labels(self) -> tuple[int, ...]:
        if self.root.is_leaf:
            return (self.root.label,)
        return tuple(c.label for c in self.root.children)


@dataclass(frozen=True)
class _Split:
    attribute: int
    impurity: float
    threshold: float = math.nan
    missing_left: bool = True


def _numeric_candidates(col, y, w, K, criterion, min_leaf):
    present = ~np.isnan(col)
    missing = np.bincount(y[~present], weights=w[~present], minlength=K)
    uniq, inv = np.unique(col[present], return_inverse=True)
    if len(uniq) < 2:
        return None
    hist = np.bincount(inv * K + y[present], weights=w[present], minlength=len(uniq) * K).reshape(-1, K)
    left = np.cumsum(hist, axis=0)[:-1]
    right = np.cumsum(hist[::-1], axis=0)[::-1][1:]
    missing_left = left.sum(axis=1) >= right.sum(axis=1)
    left = left + np.outer(missing_left, missing)
    right = right + np.outer(~missing_left, missing)
    imp = _impurity(left, criterion) + _impurity(right, criterion)
    valid = (left.sum(axis=1) >= min_leaf) & (right.sum(axis=1) >= min_leaf)
    if min_leaf <= 0:
        valid &= (left.sum(axis=1) > 0) & (right.sum(axis=1) > 0)
    return uniq, imp, valid, missing_left


def _threshold(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    # keep lo < t <= hi so "value < t" separates exactly as during training
    return mid if lo < mid <= hi else hi


def _best_split(X, y, w, K, attributes, criterion, min_leaf, tol) -> _Split | None:
    best: _Split | None = None
    for j, attr in enumerate(attributes):
        col = X[:, j]
        if attr.is_nominal:
            present = ~np.isnan(col)
            V = len(attr.values)
            hist = np.bincount(col[present].astype(np.intp) * K + y[present], weights=w[present],
                               minlength=V * K).reshape(V, K)
            branches = np.vstack([hist, np.bincount(y[~present], weights=w[~present], minlength=K)])
            sizes = branches.sum(axis=1)
            big_enough = sizes >= min_leaf if min_leaf > 0 else sizes > 0
            if big_enough.sum() < 2:
                continue
            cand = _Split(j, float(_impurity(branches, criterion).sum()))
        else:
            found = _numeric_candidates(col, y, w, K, criterion, min_leaf)
            if found is None:
                continue
            uniq, imp, valid, missing_left = found
            if not valid.any():
                continue
            lowest = imp[valid].min()
            i = int(np.flatnonzero(valid & (imp <= lowest + tol))[0])
            cand = _Split(j, float(imp[i]), _threshold(uniq[i], uniq[i + 1]), bool(missing_left[i]))
        if best is None or cand.impurity < best.impurity - tol:
            best = cand
    return best


def _skeleton(split: _Split, n_values: int) -> Node:
    # a childless stand-in carrying just enough structure for _route
    n_children = 2 if not math.isnan(split.threshold) else n_values + 1
    dummy = Node(0, np.zeros(0))
    return Node(0, np.zeros(0), split.attribute, split.threshold, split.missing_left,
                tuple(dummy for _ in range(n_children)))


@dataclass(frozen=True)
class TreeParams:
    criterion: str = "entropy"
    max_depth: int | None = None
    min_leaf_weight: float = 2.0
    prune_fraction: float = 0.0

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown split criterion {self.criterion!r}; expected one of {CRITERIA}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.min_leaf_weight < 0:
            raise ValueError("min_leaf_weight must be non-negative")
        if not 0.0 <= self.prune_fraction < 1.0:
            raise ValueError("prune_fraction must lie in [0, 1)")


# REPTree-like defaults: information gain, two-instance leaves, one third held out for pruning.
REPTREE_PARAMS = TreeParams("entropy", None, 2.0, 1.0 / 3.0)
# Stand-in for SimpleCART: same growth and pruning with the Gini index.
CART_PARAMS = TreeParams("gini", None, 2.0, 1.0 / 3.0)


def _prepare(data: Dataset, weights):
    w = data.weights if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (data.n_instances,):
        raise ValueError(f"expected {data.n_instances} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
        raise ValueError("weights must be finite, non-negative and have a positive sum")
    keep = np.flatnonzero(w > 0)
    w = w[keep]
    return data.X[keep], data.y[keep], w * (len(w) / w.sum())


def _grow(X, y, w, K, attributes, params: TreeParams, depth: int, parent_label: int) -> Node:
    counts = np.bincount(y, weights=w, minlength=K).astype(np.float64)
    total = counts.sum()
    tol = TIE_RTOL * max(total, 1.0)
    label = _argmax_first(counts, tol) if total > 0 else parent_label
    node = Node(label, counts)
    if total <= 0 or (params.max_depth is not None and depth >= params.max_depth):
        return node
    if np.count_nonzero(counts > tol) <= 1 or total < 2 * params.min_leaf_weight:
        return node
    split = _best_split(X, y, w, K, attributes, params.criterion, params.min_leaf_weight, tol)
    # zero-gain splits are allowed: XOR-like targets only pay off one level down
    if split is None:
        return node
    skeleton = _skeleton(split, len(attributes[split.attribute].values or ()))
    children = tuple(
        _grow(X[mask], y[mask], w[mask], K, attributes, params, depth + 1, label)
        for mask in _route(skeleton, X[:, split.attribute])
    )
    return replace(node, attribute=split.attribute, threshold=split.threshold,
                   missing_left=split.missing_left, children=children)


def _reduced_error_prune(node: Node, X, y, w, K) -> tuple[Node, float]:
    """Collapse subtrees whose majority leaf is no worse on the held-out rows."""
    held = np.bincount(y, weights=w, minlength=K)
    leaf_error = float(held.sum() - held[node.label])
    if node.is_leaf:
        return node, leaf_error
    children = []
    subtree_error = 0.0
    for child, mask in zip(node.children, _route(node, X[:, node.attribute])):
        pruned, err = _reduced_error_prune(child, X[mask], y[mask], w[mask], K)
        children.append(pruned)
        subtree_error += err
    if leaf_error <= subtree_error + TIE_RTOL * max(float(held.sum()), 1.0):
        return Node(node.label, node.counts), leaf_error
    return replace(node, children=tuple(children)), subtree_error


def train_tree(data: Dataset, weights=None, params: TreeParams = REPTREE_PARAMS, seed: int = 0) -> DecisionTree:
    """Greedy top-down induction on the weighted distribution.

    With ``params.prune_fraction > 0`` the last fraction of a seeded shuffle
    of the (positive-weight) instances is held out, and reduced-error pruning
    replaces any subtree that does not beat its majority leaf on it.
    """
    X, y, w = _prepare(data, weights)
    K = data.n_classes
    fallback = data.majority_class()
    if params.prune_fraction > 0 and len(y) >= 2:
        order = np.random.default_rng(seed).permutation(len(y))
        n_hold = min(len(y) - 1, max(1, int(round(len(y) * params.prune_fraction))))
        grow_idx, hold_idx = order[: len(y) - n_hold], order[len(y) - n_hold:]
        root = _grow(X[grow_idx], y[grow_idx], w[grow_idx], K, data.attributes, params, 0, fallback)
        root, _ = _reduced_error_prune(root, X[hold_idx], y[hold_idx], w[hold_idx], K)
    else:
        root = _grow(X, y, w, K, data.attributes, params, 0, fallback)
    return DecisionTree(root, K)


def train_stump(data: Dataset, weights=None) -> DecisionStump:
    """Single split minimising weighted misclassification error.

    Each branch predicts its weighted-majority class. Ties go to the lowest
    attribute index, then the lowest threshold, then the lowest class index.
    A dataset with no usable split gives a single majority leaf.
    """
    X, y, w = _prepare(data, weights)
    K = data.n_classes
    counts = np.bincount(y, weights=w, minlength=K)
    tol = TIE_RTOL * max(counts.sum(), 1.0)
    root = Node(_argmax_first(counts, tol), counts)
    split = _best_split(X, y, w, K, data.attributes, "error", 0.0, tol)
    if split is not None:
        skeleton = _skeleton(split, len(data.attributes[split.attribute].values or ()))
        children = []
        for mask in _route(skeleton, X[:, split.attribute]):
            c = np.bincount(y[mask], weights=w[mask], minlength=K)
            children.append(Node(_argmax_first(c, tol) if c.sum() > 0 else root.label, c))
        root = replace(root, attribute=split.attribute, threshold=split.threshold,
                       missing_left=split.missing_left, children=tuple(children))
    return DecisionStump(root, K)


# ---------------------------------------------------------------------------
# Naive Bayes

VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Class priors plus per-attribute class-conditional statistics.

    ``nominal[j]`` is a (values x classes) table of log probabilities;
    ``numeric[j]`` is a (means, variances) pair over classes. Classes that had
    no training weight get a log prior of -inf and are never predicted.
    """

    log_prior: np.ndarray
    nominal: dict
    numeric: dict

    @property
    def n_classes(self) -> int:
        return len(self.log_prior)

    def log_posterior(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        scores = np.tile(self.log_prior, (len(X), 1))
        for j, table in self.nominal.items():
            col = X[:, j]
            present = ~np.isnan(col)
            scores[present] += table[col[present].astype(np.intp)]
        for j, (mean, var) in self.numeric.items():
            col = X[:, j]
            present = ~np.isnan(col)
            diff = col[present, None] - mean
            scores[present] += -0.5 * np.log(2 * np.pi * var) - diff * diff / (2 * var)
        return scores

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.log_posterior(X), axis=1)


def train_naive_bayes(data: Dataset, weights=None) -> NaiveBayesModel:
    """Weighted naive Bayes with add-one smoothing and Gaussian numeric likelihoods."""
    X, y, w = _prepare(data, weights)
    K = data.n_classes
    class_w = np.bincount(y, weights=w, minlength=K)
    log_prior = np.log((class_w + 1.0) / (class_w.sum() + K))
    log_prior[class_w <= 0] = -np.inf
    nominal = {}
    numeric = {}
    for j, attr in enumerate(data.attributes):
        col = X[:, j]
        present = ~np.isnan(col)
        if attr.is_nominal:
            V = len(attr.values)
            hist = np.bincount(col[present].astype(np.intp) * K + y[present], weights=w[present],
                               minlength=V * K).reshape(V, K)
            nominal[j] = np.log((hist + 1.0) / (hist.sum(axis=0) + V))
            continue
        xs, ys, ws = col[present], y[present], w[present]
        if len(xs) == 0:
            continue
        cw = np.bincount(ys, weights=ws, minlength=K)
        pooled_mean = np.average(xs, weights=ws)
        pooled_var = np.average((xs - pooled_mean) ** 2, weights=ws)
        sums = np.bincount(ys, weights=ws * xs, minlength=K)
        mean = np.divide(sums, cw, out=np.full(K, pooled_mean), where=cw > 0)
        sq = np.bincount(ys, weights=ws * (xs - mean[ys]) ** 2, minlength=K)
        var = np.divide(sq, cw, out=np.full(K, pooled_var), where=cw > 0)
        numeric[j] = (mean, np.maximum(var, VARIANCE_FLOOR))
    return NaiveBayesModel(log_prior, nominal, numeric)


# ---------------------------------------------------------------------------
# Dispatch

WeakModel = Union[DecisionStump, DecisionTree, NaiveBayesModel]

LEARNER_KINDS = ("stump", "tree", "cart", "nb")


@dataclass(frozen=True)
class LearnerSpec:
    """Which base learner to train, with tree parameters where relevant."""

    kind: str = "stump"
    tree: TreeParams | None = None

    def __post_init__(self):
        kind = {"naive_bayes": "nb", "naivebayes": "nb", "reptree": "tree", "ds": "stump"}.get(self.kind, self.kind)
        if kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner {self.kind!r}; expected one of {LEARNER_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind in ("tree", "cart") and self.tree is None:
            object.__setattr__(self, "tree", REPTREE_PARAMS if kind == "tree" else CART_PARAMS)

    @property
    def abbrev(self) -> str:
        return {"stump": "D", "tree": "RT", "cart": "SC", "nb": "NB"}[self.kind]

    def train(self, data: Dataset, weights=None, seed: int = 0) -> WeakModel:
        if self.kind == "stump":
            return train_stump(data, weights)
        if self.kind == "nb":
            return train_naive_bayes(data, weights)
        return train_tree(data, weights, self.tree, seed=seed)


def predict(model: WeakModel, instance: Instance | np.ndarray) -> int:
    values = instance.values if isinstance(instance, Instance) else instance
    return int(model.predict(np.asarray(values, dtype=np.float64).reshape(1, -1))[0])
