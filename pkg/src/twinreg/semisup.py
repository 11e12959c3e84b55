"""Semi-supervised twinned regression through loop consistency.

Train on the labeled pairs, sample loops (labeled i, unlabeled j, unlabeled k),
shift each predicted difference along the loop by ``-loop_weight * a`` where
``a`` is the loop sum, append the three pseudo-labeled pairs and retrain once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import learners
from .data import Dataset, Scaler, apply_scaler
from .errors import InvalidArgumentError
from .learners import ForestConfig, LearnerConfig
from .pairing import PairingStrategy, build_pairs, pair_features
from .twin import TwinModel, twin_grid_search_cv


@dataclass(frozen=True)
class SemiSupConfig:
    loop_weight: float = 1.0
    loop_count: int | None = None  # default: labeled size // 3, at least 1
    transductive: bool = True

    def __post_init__(self):
        if self.loop_weight < 0:
            raise InvalidArgumentError("loop_weight must be >= 0")
        if self.loop_count is not None and self.loop_count < 1:
            raise InvalidArgumentError("loop_count must be >= 1")

    def loops_for(self, n_labeled):
        if self.loop_count is not None:
            return self.loop_count
        return max(1, n_labeled // 3)


@dataclass(frozen=True, eq=False)
class LoopSample:
    """Row indices of a loop: ``i`` into the labeled set, ``j``/``k`` into the unlabeled set."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray

    def __len__(self):
        return len(self.i)


def sample_loops(n_labeled, n_unlabeled, count, rng) -> LoopSample:
    """Uniform loops, drawn with replacement across loops; j != k within a loop."""
    if n_unlabeled < 2:
        raise InvalidArgumentError("need at least 2 unlabeled rows to form a loop")
    if n_labeled < 1:
        raise InvalidArgumentError("need at least 1 labeled row")
    i = rng.integers(0, n_labeled, count)
    j = rng.integers(0, n_unlabeled, count)
    k = rng.integers(0, n_unlabeled - 1, count)
    k = k + (k >= j)
    return LoopSample(i, j, k)


def project_loop(f_ij, f_jk, f_ki, loop_weight):
    """Proposed labels (y_ij, y_jk, y_ki) from the three predicted differences."""
    f_ij, f_jk, f_ki = (np.asarray(v, dtype=float) for v in (f_ij, f_jk, f_ki))
    a = f_ij + f_jk + f_ki
    return f_ij - loop_weight * a, f_jk - loop_weight * a, f_ki - loop_weight * a


def propose_loop_labels(predict_pair, xi, xj, xk, loop_weight):
    """Pseudo-labels for loops given a pair predictor ``predict_pair(A, B)``.

    ``xi``, ``xj``, ``xk`` are matching rows (one loop per row).
    """
    xi, xj, xk = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (xi, xj, xk))
    return project_loop(predict_pair(xi, xj), predict_pair(xj, xk), predict_pair(xk, xi),
                        loop_weight)


def semisup_fit(
    learner: LearnerConfig,
    labeled: Dataset,
    unlabeled,
    cfg: SemiSupConfig | None = None,
    seed: int = 0,
    scaler: Scaler | None = None,
) -> TwinModel:
    """One round of loop-consistency pseudo-labeling on top of a twinned learner.

    Hyperparameters are searched only in the supervised step and carried into
    the retraining.  The returned model keeps the labeled rows as anchors;
    ``info`` records the loops and their proposed labels.
    """
    cfg = cfg or SemiSupConfig()
    if labeled.n == 0:
        raise InvalidArgumentError("labeled set is empty")
    U = np.atleast_2d(np.asarray(unlabeled, dtype=float))
    if U.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 unlabeled rows to form a loop")
    if U.shape[1] != labeled.feature_count:
        raise InvalidArgumentError("unlabeled rows have the wrong feature count")
    if scaler is not None:
        labeled = apply_scaler(scaler, labeled)
        U = scaler.transform(U)

    strategy = PairingStrategy.full(augment=True)
    if learner.kind == "mlp" and learner.mlp.max_epochs is None:
        learner = learner.with_mlp(max_epochs=learners.TWIN_MAX_EPOCHS)
    if learner.kind == "random_forest" and learner.rf.size > 1:
        search = twin_grid_search_cv(learner, labeled, strategy, seed)
        learner = replace(learner, rf=ForestConfig.fixed(
            search.best_params, cv_folds=learner.rf.cv_folds, bootstrap=learner.rf.bootstrap))
        supervised = search.model
        pairs = build_pairs(labeled, strategy, seed)
    else:
        pairs = build_pairs(labeled, strategy, seed)
        base = learners.fit(learner, pairs.pair_features, pairs.pair_targets, None, seed)
        supervised = TwinModel(base, labeled.features, labeled.targets, True, None, learner,
                               strategy)

    supervised.scaler = scaler

    rng = np.random.default_rng([seed, 7])
    loops = sample_loops(labeled.n, U.shape[0], cfg.loops_for(labeled.n), rng)
    xi, xj, xk = labeled.features[loops.i], U[loops.j], U[loops.k]
    y_ij, y_jk, y_ki = propose_loop_labels(supervised.pair_predict, xi, xj, xk, cfg.loop_weight)

    # three rows per loop, loop by loop
    extra_X = np.stack([pair_features(xi, xj, True), pair_features(xj, xk, True),
                        pair_features(xk, xi, True)], axis=1).reshape(-1, 3 * labeled.feature_count)
    extra_y = np.column_stack([y_ij, y_jk, y_ki]).ravel()
    X_all = np.vstack([pairs.pair_features, extra_X])
    y_all = np.concatenate([pairs.pair_targets, extra_y])

    base = learners.fit(learner, X_all, y_all, None, seed)
    info = {
        "supervised": supervised,
        "loops": loops,
        "proposed_labels": extra_y,
        "n_labeled_pairs": len(pairs),
        "n_pairs": len(y_all),
    }
    return TwinModel(base, labeled.features, labeled.targets, True, scaler, learner, strategy, info)
