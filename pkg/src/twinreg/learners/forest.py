"""CART regression trees (variance reduction) and bootstrap random forests."""

from __future__ import annotations

import numba
import numpy as np

from ..errors import InvalidArgumentError
from .config import ForestParams


@numba.njit(cache=True)
def _build_tree(X, y, samples, max_depth, mtry, min_leaf, min_split, seed):
    np.random.seed(seed)
    n = samples.shape[0]
    nfeat = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)

    idx = samples.copy()
    tmp = np.empty(n, np.int64)
    xs = np.empty(n)
    ys = np.empty(n)
    feats = np.arange(nfeat)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        m = end - start

        s = 0.0
        ymin = np.inf
        ymax = -np.inf
        for p in range(start, end):
            v = y[idx[p]]
            s += v
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        value[node] = s / m
        if depth >= max_depth or m < min_split or m < 2 * min_leaf or ymin == ymax:
            continue

        # choose mtry features by partial Fisher-Yates, then visit them in index order
        for a in range(mtry):
            b = a + np.random.randint(0, nfeat - a)
            t = feats[a]
            feats[a] = feats[b]
            feats[b] = t
        chosen = np.sort(feats[:mtry].copy())

        best_proxy = -np.inf
        best_f = -1
        best_t = 0.0
        for ci in range(mtry):
            f = chosen[ci]
            for p in range(m):
                xs[p] = X[idx[start + p], f]
            order = np.argsort(xs[:m], kind="mergesort")
            if xs[order[0]] == xs[order[m - 1]]:
                continue
            for p in range(m):
                ys[p] = y[idx[start + order[p]]]
            cum = 0.0
            for p in range(m - 1):
                cum += ys[p]
                nl = p + 1
                nr = m - nl
                if nl < min_leaf:
                    continue
                if nr < min_leaf:
                    break
                x0 = xs[order[p]]
                x1 = xs[order[p + 1]]
                if x0 == x1:
                    continue
                rs = s - cum
                proxy = cum * cum / nl + rs * rs / nr
                if proxy > best_proxy:
                    best_proxy = proxy
                    best_f = f
                    thr = 0.5 * (x0 + x1)
                    if thr >= x1:
                        thr = x0
                    best_t = thr
        if best_f < 0:
            continue

        # stable partition of idx[start:end] on the chosen split
        nl = 0
        for p in range(start, end):
            if X[idx[p], best_f] <= best_t:
                tmp[nl] = idx[p]
                nl += 1
        k = nl
        for p in range(start, end):
            if X[idx[p], best_f] > best_t:
                tmp[k] = idx[p]
                k += 1
        for p in range(m):
            idx[start + p] = tmp[p]

        feature[node] = best_f
        threshold[node] = best_t
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is built first
        st_node[sp] = rnode
        st_start[sp] = start + nl
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lnode
        st_start[sp] = start
        st_end[sp] = start + nl
        st_depth[sp] = depth + 1
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@numba.njit(cache=True)
def _predict_tree(X, feature, threshold, left, right, value, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]


@numba.njit(cache=True)
def _predict_forest(X, offsets, feature, threshold, left, right, value):
    n_trees = offsets.shape[0] - 1
    out = np.zeros(X.shape[0])
    for r in range(X.shape[0]):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feature[base + node] >= 0:
                if X[r, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += value[base + node]
        out[r] = acc / n_trees
    return out


class Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def node_count(self):
        return self.feature.shape[0]

    @property
    def depth(self):
        depth = np.zeros(self.node_count, dtype=int)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        out = np.empty(X.shape[0])
        _predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value, out)
        return out

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in self.__slots__}


def fit_tree(X, y, params: ForestParams, seed=0, samples=None) -> Tree:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if samples is None:
        samples = np.arange(len(y))
    mtry = max(1, int(params.max_features * X.shape[1]))
    arrays = _build_tree(X, y, np.asarray(samples, dtype=np.int64), params.max_depth, mtry,
                         params.min_samples_leaf, params.min_samples_split, seed)
    return Tree(*arrays)


class ForestModel:
    kind = "random_forest"

    def __init__(self, trees, n_features, params: ForestParams | None = None):
        self.trees = list(trees)
        self.n_features = int(n_features)
        self.params = params
        self._pack()

    def _pack(self):
        sizes = [t.node_count for t in self.trees]
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self._arrays = tuple(
            np.concatenate([getattr(t, k) for t in self.trees]) for k in Tree.__slots__
        )

    @property
    def parameter_count(self):
        # split nodes store (feature, threshold), leaves store a value
        internal = sum(int((t.feature >= 0).sum()) for t in self.trees)
        leaves = sum(t.node_count for t in self.trees) - internal
        return 2 * internal + leaves

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"expected {self.n_features} feature columns, got shape {X.shape}"
            )
        return _predict_forest(X, self._offsets, *self._arrays)

    def tree_predictions(self, X):
        return np.stack([t.predict(X) for t in self.trees])

    def to_dict(self):
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "params": None if self.params is None else vars(self.params).copy(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        params = ForestParams(**d["params"]) if d.get("params") else None
        return cls([Tree(**t) for t in d["trees"]], d["n_features"], params)


def fit_forest(X, y, params: ForestParams, seed=0, bootstrap=True) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = len(y)
    trees = []
    for t in range(params.n_estimators):
        rng = np.random.default_rng([seed, t])
        samples = rng.integers(0, n, n) if bootstrap else np.arange(n)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        trees.append(fit_tree(X, y, params, tree_seed, samples))
    return ForestModel(trees, X.shape[1], params)
