"""Base regressors behind one fit/predict contract."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .config import (
    GRID_AXES,
    KINDS,
    PLAIN_MAX_EPOCHS,
    TWIN_MAX_EPOCHS,
    ForestConfig,
    ForestParams,
    LearnerConfig,
    MLPConfig,
)
from .forest import ForestModel, Tree, fit_forest, fit_tree
from .knn import KNNModel
from .mlp import MLPModel, count_mlp_parameters, fit_mlp

MODEL_FORMAT_VERSION = 1


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise InvalidArgumentError(f"incompatible shapes {X.shape} and {y.shape}")
    if X.shape[0] == 0:
        raise InvalidArgumentError("cannot fit on zero rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise InvalidArgumentError("training data contains non-finite values")
    return X, y


def fit(config: LearnerConfig, features, targets, validation=None, seed=0):
    """Fit the learner described by ``config``.

    For random forests a grid with more than one candidate is resolved by
    :func:`grid_search_cv` first; a single-candidate grid is fitted directly.
    ``validation`` is an optional ``(X, y)`` pair used by the MLP for early
    stopping and ignored by the other learners.
    """
    X, y = _check_xy(features, targets)
    if config.kind == "mlp":
        if validation is not None:
            validation = _check_xy(*validation)
        return fit_mlp(config.mlp, X, y, validation, seed)
    if config.kind == "knn":
        return KNNModel(X, y, config.k)
    if config.rf.size == 1:
        return fit_forest(X, y, config.rf.candidates()[0], seed, config.rf.bootstrap)
    return grid_search_cv(config, X, y, seed).model


def predict(model, features):
    return model.predict(features)


def count_parameters(kind, f, hidden=(128, 128), augment=False):
    """Stored weights and biases of a plain or twinned MLP on ``f`` features."""
    if f < 1:
        raise InvalidArgumentError("feature count must be >= 1")
    if kind == "plain_mlp":
        n_in = f
    elif kind == "twin_mlp":
        n_in = (3 if augment else 2) * f
    else:
        raise InvalidArgumentError(f"unknown kind {kind!r}")
    return count_mlp_parameters(n_in, hidden)


# ---------------------------------------------------------------------------
# cross-validation


def kfold_indices(n, folds, seed):
    """Contiguous blocks of a seeded permutation."""
    if n < folds:
        raise InvalidArgumentError(f"{n} rows cannot be split into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cross_validate(candidates, n, folds, seed, evaluate):
    """Mean held-out RMSE per candidate.

    ``evaluate(candidate, train_idx, test_idx)`` returns predictions for
    ``test_idx``; the caller's targets are compared inside.
    """
    blocks = kfold_indices(n, folds, seed)
    scores = []
    for cand in candidates:
        errs = []
        for k, test_idx in enumerate(blocks):
            train_idx = np.concatenate([b for i, b in enumerate(blocks) if i != k])
            errs.append(evaluate(cand, train_idx, test_idx))
        scores.append(float(np.mean(errs)))
    return scores


@dataclass
class GridSearchResult:
    best_params: ForestParams
    model: object
    candidates: list
    scores: list

    @property
    def best_index(self):
        return self.candidates.index(self.best_params)


def select_best(candidates, scores):
    # first minimum = earliest in grid order
    return candidates[int(np.argmin(scores))]


def grid_search_cv(config: LearnerConfig, features, targets, seed=0) -> GridSearchResult:
    """Exhaustive k-fold search over the forest grid, then refit on all rows."""
    X, y = _check_xy(features, targets)
    rf = config.rf
    candidates = rf.candidates()

    def evaluate(params, tr, te):
        m = fit_forest(X[tr], y[tr], params, seed, rf.bootstrap)
        return float(np.sqrt(np.mean((m.predict(X[te]) - y[te]) ** 2)))

    scores = cross_validate(candidates, len(y), rf.cv_folds, seed, evaluate)
    best = select_best(candidates, scores)
    model = fit_forest(X, y, best, seed, rf.bootstrap)
    return GridSearchResult(best, model, candidates, scores)


# ---------------------------------------------------------------------------
# persistence

_MODEL_TYPES = {"mlp": MLPModel, "random_forest": ForestModel, "knn": KNNModel}


def model_to_dict(model):
    return model.to_dict()


def model_from_dict(d):
    try:
        cls = _MODEL_TYPES[d["kind"]]
    except KeyError:
        raise InvalidArgumentError(f"unknown model kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


def save_model(model, path):
    payload = {"format_version": MODEL_FORMAT_VERSION, "model": model_to_dict(model)}
    Path(path).write_text(json.dumps(payload))


def load_model(path):
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise InvalidArgumentError(f"unsupported model format {payload.get('format_version')}")
    return model_from_dict(payload["model"])


__all__ = [
    "GRID_AXES", "KINDS", "PLAIN_MAX_EPOCHS", "TWIN_MAX_EPOCHS",
    "ForestConfig", "ForestParams", "LearnerConfig", "MLPConfig",
    "ForestModel", "KNNModel", "MLPModel", "Tree",
    "fit", "predict", "count_parameters", "grid_search_cv", "cross_validate",
    "kfold_indices", "select_best", "GridSearchResult", "fit_forest", "fit_tree",
    "fit_mlp", "save_model", "load_model", "model_to_dict", "model_from_dict",
]
