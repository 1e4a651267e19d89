"""Random-tree ensembles: the label-free embedding forest whose co-leaf
frequencies define the proximity matrix, and the extremely randomized trees
classifier used for label propagation and small-class merging.

Trees are stored as flat node arrays (feature, threshold, children, leaf id)
so routing is a handful of vector ops per node. Every tree draws from its own
RNG substream derived from (seed, kind, tree index), which makes parallel and
serial fits identical.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputWarning, SchemaMismatch, SingleClassWarning, TooFewClasses
from .rng import substream

EMBEDDING = "embedding"
CLASSIFIER = "classifier"
_CONST_DRAW_LIMIT = 10
_IDENTICAL_CHECK_MAX_ROWS = 64


@dataclass
class Tree:
    feature: np.ndarray  # int32; -1 marks a leaf
    threshold: np.ndarray  # float64; nan at leaves
    left: np.ndarray  # int32 child node index; -1 at leaves
    right: np.ndarray
    leaf_id: np.ndarray  # int32 dense 0..L-1; -1 at internal nodes
    leaf_counts: np.ndarray | None = None  # (n_leaves, n_classes), classifier only

    @property
    def n_leaves(self) -> int:
        return int((self.feature == -1).sum())


@dataclass
class Forest:
    trees: list[Tree]
    kind: str
    n_trees: int
    max_depth: int | None
    n_features: int
    seed: int
    class_labels: np.ndarray | None = None


class _TreeBuilder:
    """Accumulates flat node arrays during recursive growth."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_id: list[int] = []
        self.leaf_payload: list[np.ndarray] = []

    def add_leaf(self, payload: np.ndarray | None = None) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_id.append(len(self.leaf_payload) if payload is not None else -1)
        if payload is not None:
            self.leaf_payload.append(payload)
        return idx

    def add_split(self, f: int, thr: float) -> int:
        idx = len(self.feature)
        self.feature.append(f)
        self.threshold.append(thr)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_id.append(-1)
        return idx

    def finish(self, with_counts: bool) -> Tree:
        feature = np.asarray(self.feature, dtype=np.int32)
        leaf_id = np.asarray(self.leaf_id, dtype=np.int32)
        if not with_counts:
            # Dense leaf ids in construction (preorder) order.
            leaf_id = leaf_id.copy()
            leaf_id[feature == -1] = np.arange(int((feature == -1).sum()), dtype=np.int32)
        return Tree(
            feature=feature,
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            leaf_id=leaf_id,
            leaf_counts=np.stack(self.leaf_payload) if with_counts else None,
        )


def _interior_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    """Uniform threshold strictly inside (lo, hi)."""
    u = rng.random()
    if u == 0.0:
        u = 0.5
    return lo + (hi - lo) * u


def _grow_embedding_tree(X: np.ndarray, max_depth: int, rng: np.random.Generator) -> Tree:
    d = X.shape[1]
    builder = _TreeBuilder()

    def build(rows: np.ndarray, depth: int) -> int:
        if depth >= max_depth or rows.size == 1:
            return builder.add_leaf()
        sub = X[rows]
        if rows.size <= _IDENTICAL_CHECK_MAX_ROWS and bool((sub == sub[0]).all()):
            return builder.add_leaf()
        consecutive_const = 0
        while consecutive_const < _CONST_DRAW_LIMIT:
            f = int(rng.integers(d))
            col = sub[:, f]
            lo = float(col.min())
            hi = float(col.max())
            if lo == hi:
                consecutive_const += 1
                continue
            thr = _interior_uniform(rng, lo, hi)
            node = builder.add_split(f, thr)
            mask = col <= thr
            left = build(rows[mask], depth + 1)
            right = build(rows[~mask], depth + 1)
            builder.left[node] = left
            builder.right[node] = right
            return node
        return builder.add_leaf()

    build(np.arange(X.shape[0]), 0)
    return builder.finish(with_counts=False)


def _entropy_bits(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _split_gains(cols: np.ndarray, thr: np.ndarray, y: np.ndarray, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Information gain (bits) of K candidate splits on one node.

    cols is (m, K); invalid candidates (empty side) come back as -inf.
    """
    m, k = cols.shape
    left_mask = cols <= thr  # (m, K)
    left_counts = np.zeros((n_classes, k))
    for c in np.unique(y):
        left_counts[c] = left_mask[y == c].sum(axis=0)
    total_counts = np.bincount(y, minlength=n_classes).astype(float)
    right_counts = total_counts[:, None] - left_counts
    n_left = left_counts.sum(axis=0)
    n_right = m - n_left

    def entropy_cols(counts, totals):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = counts / totals
            term = np.where(counts > 0, p * np.log2(p), 0.0)
        return -term.sum(axis=0)

    parent = _entropy_bits(total_counts)
    gain = parent - (n_left / m) * entropy_cols(left_counts, n_left) - (n_right / m) * entropy_cols(
        right_counts, n_right
    )
    gain[(n_left == 0) | (n_right == 0)] = -np.inf
    return gain, left_mask


def _grow_classifier_tree(
    X: np.ndarray, y: np.ndarray, n_classes: int, max_depth: int | None, rng: np.random.Generator
) -> Tree:
    d = X.shape[1]
    k_candidates = math.ceil(math.sqrt(d))
    builder = _TreeBuilder()

    def build(rows: np.ndarray, depth: int) -> int:
        y_node = y[rows]
        counts = np.bincount(y_node, minlength=n_classes).astype(np.float64)
        pure = bool((counts > 0).sum() <= 1)
        if pure or rows.size < 2 or (max_depth is not None and depth >= max_depth):
            return builder.add_leaf(counts)

        feats = rng.integers(d, size=k_candidates)
        us = rng.random(k_candidates)
        us[us == 0.0] = 0.5
        cols = X[np.ix_(rows, feats)]
        lo = cols.min(axis=0)
        hi = cols.max(axis=0)
        thr = lo + (hi - lo) * us
        gains, left_mask = _split_gains(cols, thr, y_node, n_classes)
        gains[lo == hi] = -np.inf
        best = int(np.argmax(gains))
        if not np.isfinite(gains[best]):
            return builder.add_leaf(counts)

        node = builder.add_split(int(feats[best]), float(thr[best]))
        mask = left_mask[:, best]
        left = build(rows[mask], depth + 1)
        right = build(rows[~mask], depth + 1)
        builder.left[node] = left
        builder.right[node] = right
        return node

    build(np.arange(X.shape[0]), 0)
    return builder.finish(with_counts=True)


def _check_matrix(X: np.ndarray, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite entries")
    return X


def _fit_trees(grow, n_trees: int, threads: int) -> list[Tree]:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(grow, range(n_trees)))
    return [grow(t) for t in range(n_trees)]


def fit_random_trees_embedding(
    X: np.ndarray, n_trees: int = 2000, max_depth: int = 5, seed: int = 0, threads: int = 1
) -> Forest:
    """Label-free forest of uniformly random (feature, threshold) splits."""
    X = _check_matrix(X)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit an embedding forest")
    if bool((X == X[0]).all()):
        warnings.warn("all feature rows identical; every tree is a single leaf", DegenerateInputWarning)
        trees = []
        for _ in range(n_trees):
            builder = _TreeBuilder()
            builder.add_leaf()
            trees.append(builder.finish(with_counts=False))
        return Forest(trees, EMBEDDING, n_trees, max_depth, X.shape[1], seed)

    def grow(t: int) -> Tree:
        return _grow_embedding_tree(X, max_depth, substream(seed, "embed-tree", t))

    trees = _fit_trees(grow, n_trees, threads)
    return Forest(trees, EMBEDDING, n_trees, max_depth, X.shape[1], seed)


def fit_extra_trees(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 2000,
    max_depth: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> Forest:
    """Extremely randomized trees with the entropy criterion.

    Each node draws ceil(sqrt(d)) random (feature, threshold) candidates and
    keeps the one with the largest information gain.
    """
    X = _check_matrix(X)
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y disagree on the number of rows")
    class_labels = np.unique(y)
    if class_labels.size < 2:
        warnings.warn("single-class training set; the classifier is constant", SingleClassWarning)
    y_enc = np.searchsorted(class_labels, y).astype(np.int64)
    n_classes = class_labels.size

    def grow(t: int) -> Tree:
        return _grow_classifier_tree(X, y_enc, n_classes, max_depth, substream(seed, "extra-tree", t))

    trees = _fit_trees(grow, n_trees, threads)
    return Forest(trees, CLASSIFIER, n_trees, max_depth, X.shape[1], seed, class_labels=class_labels)


def _route_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.int32)
    stack = [(0, np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        f = tree.feature[node]
        if f == -1:
            out[rows] = tree.leaf_id[node]
        else:
            mask = X[rows, f] <= tree.threshold[node]
            stack.append((tree.left[node], rows[mask]))
            stack.append((tree.right[node], rows[~mask]))
    return out


def leaf_assignments(forest: Forest, X: np.ndarray, threads: int = 1) -> np.ndarray:
    """Leaf id reached by each row in each tree; shape (N, n_trees)."""
    X = _check_matrix(X)
    if X.shape[1] != forest.n_features:
        raise SchemaMismatch(f"forest expects {forest.n_features} features, got {X.shape[1]}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(lambda t: _route_tree(t, X), forest.trees))
    else:
        cols = [_route_tree(t, X) for t in forest.trees]
    return np.stack(cols, axis=1)


def proximity_matrix(assignments: np.ndarray) -> np.ndarray:
    """Breiman proximity: fraction of trees in which two rows share a leaf."""
    assignments = np.asarray(assignments)
    if assignments.ndim != 2 or assignments.size == 0:
        raise ValueError("assignments must be a non-empty (N, n_trees) matrix")
    n, n_trees = assignments.shape
    counts = np.zeros((n, n), dtype=np.int64)
    for t in range(n_trees):
        col = assignments[:, t]
        counts += col[:, None] == col[None, :]
    P = counts / n_trees
    assert np.allclose(np.diag(P), 1.0)
    assert P.min() >= 0.0 and P.max() <= 1.0
    assert np.array_equal(P, P.T)
    return P


def predict_proba(forest: Forest, X: np.ndarray, threads: int = 1) -> np.ndarray:
    if forest.kind != CLASSIFIER:
        raise SchemaMismatch("predict requires a classifier forest")
    assignments = leaf_assignments(forest, X, threads=threads)
    n_classes = forest.class_labels.size
    proba = np.zeros((X.shape[0], n_classes))
    for t, tree in enumerate(forest.trees):
        counts = tree.leaf_counts
        totals = counts.sum(axis=1, keepdims=True)
        dist = counts / np.maximum(totals, 1.0)
        proba += dist[assignments[:, t]]
    return proba / forest.n_trees


def predict(forest: Forest, X: np.ndarray, threads: int = 1) -> np.ndarray:
    """Majority label; ties resolve to the smallest label id."""
    proba = predict_proba(forest, X, threads=threads)
    return forest.class_labels[np.argmax(proba, axis=1)]


def forest_to_json(forest: Forest) -> dict:
    return {
        "kind": forest.kind,
        "n_trees": forest.n_trees,
        "max_depth": forest.max_depth,
        "n_features": forest.n_features,
        "seed": forest.seed,
        "class_labels": None if forest.class_labels is None else forest.class_labels.tolist(),
        "trees": [
            {
                "nodes": [
                    [
                        int(t.feature[i]),
                        None if math.isnan(t.threshold[i]) else float(t.threshold[i]),
                        int(t.left[i]),
                        int(t.right[i]),
                        int(t.leaf_id[i]),
                    ]
                    for i in range(t.feature.size)
                ],
                "leaf_counts": None if t.leaf_counts is None else t.leaf_counts.tolist(),
            }
            for t in forest.trees
        ],
    }


def forest_from_json(payload: dict) -> Forest:
    trees = []
    for entry in payload["trees"]:
        nodes = entry["nodes"]
        trees.append(
            Tree(
                feature=np.array([n[0] for n in nodes], dtype=np.int32),
                threshold=np.array(
                    [math.nan if n[1] is None else n[1] for n in nodes], dtype=np.float64
                ),
                left=np.array([n[2] for n in nodes], dtype=np.int32),
                right=np.array([n[3] for n in nodes], dtype=np.int32),
                leaf_id=np.array([n[4] for n in nodes], dtype=np.int32),
                leaf_counts=None if entry["leaf_counts"] is None else np.array(entry["leaf_counts"]),
            )
        )
    labels = payload["class_labels"]
    return Forest(
        trees=trees,
        kind=payload["kind"],
        n_trees=payload["n_trees"],
        max_depth=payload["max_depth"],
        n_features=payload["n_features"],
        seed=payload["seed"],
        class_labels=None if labels is None else np.array(labels),
    )


def save_forest(forest: Forest, path) -> None:
    Path(path).write_text(json.dumps(forest_to_json(forest), sort_keys=True), encoding="utf-8")


def load_forest(path) -> Forest:
    return forest_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_proximity(P: np.ndarray, path) -> None:
    """Row-major float32 with an 8-byte little-endian row-count header."""
    P = np.asarray(P)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", P.shape[0]))
        fh.write(P.astype("<f4").tobytes(order="C"))


def load_proximity(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (n,) = struct.unpack("<Q", raw[:8])
    return np.frombuffer(raw[8:], dtype="<f4").reshape(n, n).astype(np.float64)
