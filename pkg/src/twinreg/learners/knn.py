from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from ..pairing import neighbor_matrix


class KNNModel:
    """Uniform-weight k-nearest-neighbour regression by brute-force search.

    The neighbour targets are averaged in ascending row order, the same order
    the twin model uses for nearest-anchor averaging.
    """

    kind = "knn"

    def __init__(self, X, y, k):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.k = int(k)
        if not 1 <= self.k <= len(self.y):
            raise InvalidArgumentError(f"k must be in [1, {len(self.y)}], got {k}")

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def parameter_count(self):
        return int(self.X.size + self.y.size)

    def neighbors(self, X):
        return np.sort(neighbor_matrix(X, self.X, self.k), axis=1)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"expected {self.n_features} feature columns, got shape {X.shape}"
            )
        return np.ascontiguousarray(self.y[self.neighbors(X)]).mean(axis=1)

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["X"], d["y"], d["k"])
