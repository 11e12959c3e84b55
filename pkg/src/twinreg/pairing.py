"""Pair construction for twinned regression.

A pair (i, j) is represented by the concatenated features ``[x_i, x_j]``
(optionally followed by ``x_i - x_j``) and the target ``y_i - y_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InvalidArgumentError

FULL = "full"
MULTIPLIER = "multiplier"
NEAREST = "nearest_neighbors"


@dataclass(frozen=True)
class PairingStrategy:
    mode: str = FULL
    k: int | None = None  # multiplier
    m: int | None = None  # nearest neighbours
    augment: bool = False

    def __post_init__(self):
        if self.mode == MULTIPLIER:
            if self.k is None or self.k < 1:
                raise InvalidArgumentError(f"multiplier k must be >= 1, got {self.k}")
        elif self.mode == NEAREST:
            if self.m is None or self.m < 1:
                raise InvalidArgumentError(f"nearest-neighbour m must be >= 1, got {self.m}")
        elif self.mode != FULL:
            raise InvalidArgumentError(f"unknown pairing mode {self.mode!r}")

    @classmethod
    def full(cls, augment=False):
        return cls(FULL, augment=augment)

    @classmethod
    def multiplier(cls, k, augment=False):
        return cls(MULTIPLIER, k=k, augment=augment)

    @classmethod
    def nearest_neighbors(cls, m, augment=False):
        return cls(NEAREST, m=m, augment=augment)

    def validate_for(self, n):
        if self.mode == NEAREST and self.m >= n:
            raise InvalidArgumentError(
                f"nearest-neighbour pairing needs m < train size, got m={self.m}, n={n}"
            )
        if self.mode == MULTIPLIER and self.k > n:
            raise InvalidArgumentError(f"multiplier k={self.k} exceeds train size {n}")


@dataclass(frozen=True, eq=False)
class PairedDataset:
    pair_index: np.ndarray  # (p, 2) int
    pair_features: np.ndarray  # (p, 2f) or (p, 3f)
    pair_targets: np.ndarray  # (p,)
    augment: bool = False

    def __len__(self):
        return self.pair_index.shape[0]


def pair_features(A, B, augment=False):
    """Row-wise pair features for ``A[r]`` against ``B[r]``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if augment:
        return np.hstack([A, B, A - B])
    return np.hstack([A, B])


def pairs_from_index(X, y, index, augment=False) -> PairedDataset:
    index = np.asarray(index, dtype=np.intp).reshape(-1, 2)
    i, j = index[:, 0], index[:, 1]
    return PairedDataset(index, pair_features(X[i], X[j], augment), y[i] - y[j], augment)


def squared_distances(Q, X):
    """(len(Q), len(X)) squared Euclidean distances, computed by direct differences."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    X = np.asarray(X, dtype=float)
    out = np.empty((Q.shape[0], X.shape[0]))
    # bound the (q, n, f) temporary to roughly 4M doubles
    step = max(1, 4_000_000 // max(1, X.shape[0] * X.shape[1]))
    for s in range(0, Q.shape[0], step):
        diff = Q[s:s + step, None, :] - X[None, :, :]
        out[s:s + step] = np.einsum("qnf,qnf->qn", diff, diff)
    return out


def neighbor_matrix(Q, X, m, exclude=None):
    """Indices of the m nearest rows of X for each row of Q.

    Rows are ordered by ascending distance, ties by lower index.  ``exclude``
    optionally gives, per query, one index of X to skip (a point's own row).
    """
    n = X.shape[0]
    avail = n - (0 if exclude is None else 1)
    if not 1 <= m <= avail:
        raise InvalidArgumentError(f"m must be in [1, {avail}], got {m}")
    d = squared_distances(Q, X)
    if exclude is not None:
        d[np.arange(d.shape[0]), np.asarray(exclude)] = np.inf
    order = np.argsort(d, axis=1, kind="stable")
    return order[:, :m]


def nearest_neighbors(query, train: Dataset, m: int) -> np.ndarray:
    """The m nearest training rows to ``query``, nearest first.

    Distances are Euclidean on the features as stored in ``train``; pass
    standardized datasets to get the standardized metric.
    """
    q = np.asarray(query, dtype=float).reshape(1, -1)
    if q.shape[1] != train.feature_count:
        raise InvalidArgumentError(
            f"query has {q.shape[1]} features, training data has {train.feature_count}"
        )
    return neighbor_matrix(q, train.features, m)[0]


def build_pairs(train: Dataset, strategy: PairingStrategy, seed: int = 0) -> PairedDataset:
    n = train.n
    if n == 0:
        raise InvalidArgumentError("cannot build pairs from an empty dataset")
    strategy.validate_for(n)
    X, y = train.features, train.targets

    if strategy.mode == FULL:
        i, j = np.divmod(np.arange(n * n), n)
        index = np.column_stack([i, j])
    elif strategy.mode == MULTIPLIER:
        rng = np.random.default_rng(seed)
        k = strategy.k
        partners = np.empty((n, k), dtype=np.intp)
        for i in range(n):
            # partners include i itself, so k = n reproduces full pairing
            partners[i] = np.sort(rng.choice(n, size=k, replace=False))
        index = np.column_stack([np.repeat(np.arange(n), k), partners.ravel()])
    else:
        nbrs = neighbor_matrix(X, X, strategy.m, exclude=np.arange(n))
        i = np.repeat(np.arange(n), strategy.m)
        j = nbrs.ravel()
        both = np.concatenate([np.column_stack([i, j]), np.column_stack([j, i])])
        index = np.unique(both, axis=0)  # lexicographic (i, j), duplicates dropped

    return pairs_from_index(X, y, index, strategy.augment)


def cross_pairs(Xa, ya, Xb, yb, augment=False, both_directions=True):
    """All pairs between rows of A and rows of B (A first), plus the reverse."""
    na, nb = Xa.shape[0], Xb.shape[0]
    ia, ib = np.divmod(np.arange(na * nb), nb)
    feats = pair_features(Xa[ia], Xb[ib], augment)
    targ = ya[ia] - yb[ib]
    if both_directions:
        feats = np.vstack([feats, pair_features(Xb[ib], Xa[ia], augment)])
        targ = np.concatenate([targ, -targ])
    return feats, targ
