"""Twinned regression: a base learner over pairs plus an anchor store.

The base model F is trained on ``F(x_i, x_j) = y_i - y_j``.  A query is
predicted from each anchor ``a`` as ``F(q, a) + y_a`` (or, symmetrized,
``F(q, a)/2 - F(a, q)/2 + y_a``) and the per-anchor values are averaged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import learners
from .data import Dataset, Scaler, apply_scaler
from .errors import InvalidArgumentError
from .learners import ForestConfig, GridSearchResult, LearnerConfig, MLPModel
from .pairing import (
    NEAREST,
    PairingStrategy,
    build_pairs,
    cross_pairs,
    neighbor_matrix,
    pair_features,
)

PAIR_CHUNK = 200_000
TWIN_FORMAT_VERSION = 1


@dataclass(frozen=True)
class AnchorPolicy:
    mode: str = "all"
    indices: tuple[int, ...] | None = None
    m: int | None = None

    def __post_init__(self):
        if self.mode == "fixed_subset":
            if not self.indices:
                raise InvalidArgumentError("fixed_subset needs at least one anchor index")
            object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        elif self.mode == "nearest":
            if self.m is None or self.m < 1:
                raise InvalidArgumentError(f"nearest anchor count must be >= 1, got {self.m}")
        elif self.mode != "all":
            raise InvalidArgumentError(f"unknown anchor policy {self.mode!r}")

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def fixed_subset(cls, indices):
        return cls("fixed_subset", indices=tuple(indices))

    @classmethod
    def nearest(cls, m):
        return cls("nearest", m=m)

    @classmethod
    def random_subset(cls, size, n_anchors, seed):
        if not 1 <= size <= n_anchors:
            raise InvalidArgumentError(f"anchor subset size must be in [1, {n_anchors}]")
        rng = np.random.default_rng(seed)
        return cls.fixed_subset(np.sort(rng.choice(n_anchors, size, replace=False)))


@dataclass(frozen=True, eq=False)
class TwinPrediction:
    value: float
    per_anchor_values: np.ndarray
    uncertainty: float


@dataclass(eq=False)
class TwinModel:
    base: object
    anchor_features: np.ndarray  # in model (scaled) space
    anchor_targets: np.ndarray
    augment: bool = False
    scaler: Scaler | None = None
    learner: LearnerConfig | None = None
    strategy: PairingStrategy | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.anchor_features = np.asarray(self.anchor_features, dtype=float)
        self.anchor_targets = np.asarray(self.anchor_targets, dtype=float)
        if self.anchor_features.shape[0] < 1:
            raise InvalidArgumentError("a twin model needs at least one anchor")
        if self.anchor_features.shape[0] != self.anchor_targets.shape[0]:
            raise InvalidArgumentError("anchor feature/target count mismatch")

    @property
    def n_anchors(self):
        return self.anchor_targets.shape[0]

    @property
    def n_features(self):
        return self.anchor_features.shape[1]

    def to_model_space(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        return X if self.scaler is None else self.scaler.transform(X)

    def pair_predict(self, A, B):
        """Row-wise F(A[r], B[r]) for inputs in model space."""
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        out = np.empty(A.shape[0])
        for s in range(0, A.shape[0], PAIR_CHUNK):
            out[s:s + PAIR_CHUNK] = self.base.predict(
                pair_features(A[s:s + PAIR_CHUNK], B[s:s + PAIR_CHUNK], self.augment)
            )
        return out

    def F(self, A, B):
        """Predicted target difference for raw (unscaled) feature rows."""
        return self.pair_predict(self.to_model_space(A), self.to_model_space(B))

    @property
    def storage_parameters(self):
        """Base-model parameters plus f+1 numbers per stored anchor."""
        return self.base.parameter_count + self.n_anchors * (self.n_features + 1)


# ---------------------------------------------------------------------------
# training


def _resolve_learner(learner: LearnerConfig):
    if learner.kind == "mlp" and learner.mlp.max_epochs is None:
        return learner.with_mlp(max_epochs=learners.TWIN_MAX_EPOCHS)
    return learner


def _validation_pairs(train, validation, strategy):
    Xt, yt = train.features, train.targets
    Xv, yv = validation.features, validation.targets
    if strategy.mode == NEAREST:
        m = min(strategy.m, train.n)
        nbrs = neighbor_matrix(Xv, Xt, m)
        iv = np.repeat(np.arange(validation.n), m)
        it = nbrs.ravel()
        A = pair_features(Xv[iv], Xt[it], strategy.augment)
        B = pair_features(Xt[it], Xv[iv], strategy.augment)
        d = yv[iv] - yt[it]
        return np.vstack([A, B]), np.concatenate([d, -d])
    return cross_pairs(Xv, yv, Xt, yt, strategy.augment)


def twin_fit(
    learner: LearnerConfig,
    train: Dataset,
    strategy: PairingStrategy | None = None,
    validation: Dataset | None = None,
    seed: int = 0,
    scaler: Scaler | None = None,
) -> TwinModel:
    """Fit the base learner on pairs of training rows; keep all rows as anchors.

    With a scaler, features are transformed before pairing and queries are
    transformed at prediction time.  A forest config with several grid
    candidates is tuned with :func:`twin_grid_search_cv` first.
    """
    strategy = strategy or PairingStrategy.full()
    if train.n == 0:
        raise InvalidArgumentError("cannot fit a twin model on an empty dataset")
    if scaler is not None:
        train = apply_scaler(scaler, train)
        if validation is not None and validation.n:
            validation = apply_scaler(scaler, validation)
    learner = _resolve_learner(learner)

    if learner.kind == "random_forest" and learner.rf.size > 1:
        result = twin_grid_search_cv(learner, train, strategy, seed)
        tm = result.model
        tm.scaler = scaler
        return tm

    pairs = build_pairs(train, strategy, seed)
    val = None
    if learner.kind == "mlp" and validation is not None and validation.n:
        val = _validation_pairs(train, validation, strategy)
    base = learners.fit(learner, pairs.pair_features, pairs.pair_targets, val, seed)
    return TwinModel(base, train.features, train.targets, strategy.augment, scaler, learner,
                     strategy, {"n_pairs": len(pairs)})


def twin_grid_search_cv(learner: LearnerConfig, train: Dataset, strategy: PairingStrategy,
                        seed: int = 0) -> GridSearchResult:
    """Row-level k-fold search for a twinned forest.

    Folds split training rows, not pairs: each fold pairs its training rows,
    predicts the held-out rows through all training anchors and scores the
    RMSE on their targets.  The winner is refitted on every row.
    """
    rf = learner.rf
    candidates = rf.candidates()
    X, y = train.features, train.targets

    def evaluate(params, tr, te):
        cfg = replace(learner, rf=ForestConfig.fixed(params, cv_folds=rf.cv_folds,
                                                     bootstrap=rf.bootstrap))
        tm = twin_fit(cfg, train.subset(tr), strategy, seed=seed)
        pred = predict_values(tm, X[te], model_space=True)
        return float(np.sqrt(np.mean((pred - y[te]) ** 2)))

    scores = learners.cross_validate(candidates, train.n, rf.cv_folds, seed, evaluate)
    best = learners.select_best(candidates, scores)
    fixed = replace(learner, rf=ForestConfig.fixed(best, cv_folds=rf.cv_folds,
                                                   bootstrap=rf.bootstrap))
    tm = twin_fit(fixed, train, strategy, seed=seed)
    tm.info["grid_scores"] = scores
    tm.info["best_params"] = vars(best).copy()
    return GridSearchResult(best, tm, candidates, scores)


# ---------------------------------------------------------------------------
# inference


def select_anchors(tm: TwinModel, Q, policy: AnchorPolicy) -> np.ndarray:
    """(len(Q), k) anchor indices per query, each row in ascending index order."""
    n = tm.n_anchors
    if policy.mode == "all":
        return np.broadcast_to(np.arange(n), (Q.shape[0], n))
    if policy.mode == "fixed_subset":
        idx = np.asarray(policy.indices)
        if idx.min() < 0 or idx.max() >= n:
            raise InvalidArgumentError(f"anchor index out of range [0, {n})")
        return np.broadcast_to(np.sort(idx), (Q.shape[0], idx.size))
    if policy.m > n:
        raise InvalidArgumentError(f"nearest m={policy.m} exceeds the {n} stored anchors")
    return np.sort(neighbor_matrix(Q, tm.anchor_features, policy.m), axis=1)


def per_anchor_values(tm: TwinModel, Q, anchors, symmetric=True):
    """Per-anchor estimates for queries Q (model space) and an anchor index matrix."""
    nq, k = anchors.shape
    out = np.empty((nq, k))
    rows_per_chunk = max(1, PAIR_CHUNK // max(1, k))
    for s in range(0, nq, rows_per_chunk):
        sel = anchors[s:s + rows_per_chunk]
        q = np.repeat(Q[s:s + rows_per_chunk], k, axis=0)
        a = tm.anchor_features[sel.ravel()]
        ya = tm.anchor_targets[sel.ravel()]
        f_qa = tm.pair_predict(q, a)
        if symmetric:
            f_aq = tm.pair_predict(a, q)
            vals = 0.5 * f_qa - 0.5 * f_aq + ya
        else:
            vals = f_qa + ya
        out[s:s + rows_per_chunk] = vals.reshape(sel.shape)
    return out


def predict_many(tm: TwinModel, X, policy: AnchorPolicy | None = None, symmetric=True,
                 model_space=False):
    """Predictions, per-anchor standard deviations and the per-anchor matrix."""
    policy = policy or AnchorPolicy.all()
    Q = np.atleast_2d(np.asarray(X, dtype=float)) if model_space else tm.to_model_space(X)
    anchors = select_anchors(tm, Q, policy)
    if anchors.shape[1] == 0:
        raise InvalidArgumentError("anchor selection is empty")
    vals = per_anchor_values(tm, Q, anchors, symmetric)
    return vals.mean(axis=1), vals.std(axis=1), vals


def predict_values(tm: TwinModel, X, policy: AnchorPolicy | None = None, symmetric=True,
                   model_space=False):
    return predict_many(tm, X, policy, symmetric, model_space)[0]


def twin_predict(tm: TwinModel, query, policy: AnchorPolicy | None = None,
                 symmetric=True) -> TwinPrediction:
    mean, std, vals = predict_many(tm, np.asarray(query, dtype=float).reshape(1, -1), policy,
                                   symmetric)
    return TwinPrediction(float(mean[0]), vals[0].copy(), float(std[0]))


# ---------------------------------------------------------------------------
# single-anchor predictors


class AnchoredPredictor:
    """x -> F(x, x_j) + y_j for one fixed anchor j.

    For an MLP base the anchor is folded into the network: its features go
    into the first-layer bias and its target into the output offset, giving
    an ordinary single-input network in :attr:`network`.
    """

    def __init__(self, tm: TwinModel, index: int):
        self.tm = tm
        self.index = index
        self.anchor = tm.anchor_features[index]
        self.anchor_target = float(tm.anchor_targets[index])
        self.network = _fold_anchor(tm, index) if isinstance(tm.base, MLPModel) else None

    def predict(self, X, model_space=False):
        Q = np.atleast_2d(np.asarray(X, dtype=float)) if model_space else self.tm.to_model_space(X)
        if self.network is not None:
            return self.network.predict(Q)
        a = np.broadcast_to(self.anchor, Q.shape)
        return self.tm.pair_predict(Q, a) + self.anchor_target

    __call__ = predict


def _fold_anchor(tm, j):
    base: MLPModel = tm.base
    f = tm.n_features
    W0 = base.weights[0]
    xa = tm.anchor_features[j]
    if tm.augment:
        Wq, Wa, Wd = W0[:f], W0[f:2 * f], W0[2 * f:]
        W_in = Wq + Wd
        b_in = base.biases[0] + xa @ (Wa - Wd)
    else:
        W_in = W0[:f]
        b_in = base.biases[0] + xa @ W0[f:]
    weights = [W_in, *base.weights[1:]]
    biases = [b_in, *base.biases[1:]]
    return MLPModel(weights, biases, base.activation,
                    base.target_mean + float(tm.anchor_targets[j]), base.target_std)


def materialize_anchored_predictor(tm: TwinModel, anchor_index: int) -> AnchoredPredictor:
    if not 0 <= int(anchor_index) < tm.n_anchors:
        raise InvalidArgumentError(
            f"anchor index {anchor_index} out of range [0, {tm.n_anchors})"
        )
    return AnchoredPredictor(tm, int(anchor_index))


def loop_violation(tm: TwinModel, x1, x2, x3) -> float:
    """F(x1, x2) + F(x2, x3) + F(x3, x1); zero for a loop-consistent model."""
    return float(loop_sums(tm, x1, x2, x3)[0])


def loop_sums(tm: TwinModel, X1, X2, X3, model_space=False):
    conv = (lambda a: np.atleast_2d(np.asarray(a, dtype=float))) if model_space else tm.to_model_space
    A, B, C = conv(X1), conv(X2), conv(X3)
    return tm.pair_predict(A, B) + tm.pair_predict(B, C) + tm.pair_predict(C, A)


# ---------------------------------------------------------------------------
# persistence


def twin_to_dict(tm: TwinModel):
    return {
        "format_version": TWIN_FORMAT_VERSION,
        "base": learners.model_to_dict(tm.base),
        "anchors": np.column_stack([tm.anchor_features, tm.anchor_targets]).tolist(),
        "augment": tm.augment,
        "scaler": None if tm.scaler is None else tm.scaler.to_dict(),
    }


def twin_from_dict(d) -> TwinModel:
    if d.get("format_version") != TWIN_FORMAT_VERSION:
        raise InvalidArgumentError(f"unsupported twin model format {d.get('format_version')}")
    table = np.asarray(d["anchors"], dtype=float)
    scaler = Scaler.from_dict(d["scaler"]) if d.get("scaler") else None
    return TwinModel(learners.model_from_dict(d["base"]), table[:, :-1], table[:, -1],
                     d["augment"], scaler)


def save_twin(tm: TwinModel, path):
    Path(path).write_text(json.dumps(twin_to_dict(tm)))


def load_twin(path) -> TwinModel:
    return twin_from_dict(json.loads(Path(path).read_text()))


__all__ = [
    "AnchorPolicy", "TwinPrediction", "TwinModel", "AnchoredPredictor",
    "twin_fit", "twin_grid_search_cv", "twin_predict", "predict_many", "predict_values",
    "select_anchors", "per_anchor_values", "materialize_anchored_predictor",
    "loop_violation", "loop_sums", "save_twin", "load_twin", "twin_to_dict", "twin_from_dict",
]
