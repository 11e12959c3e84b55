"""Repeated-split experiments and parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import learners
from ..data import Dataset, SplitSpec, apply_scaler, fit_scaler, load_dataset, split_indices
from ..errors import ExperimentError, InvalidArgumentError
from ..learners import ForestConfig, LearnerConfig, MLPConfig
from ..pairing import PairingStrategy
from ..semisup import SemiSupConfig, semisup_fit
from ..twin import AnchorPolicy, predict_values, twin_fit
from .metrics import rmse, standard_error

METHODS = {
    "ann": {},
    "ann_ensemble": {"ensemble_size": 32},
    "tnnr": {"multiplier": None, "anchors": None, "augment": False, "symmetric": True},
    "tnnr_ensemble": {"ensemble_size": 32, "augment": False},
    "nntnnr": {"neighbors": 32, "train_mode": "nn", "augment": False},
    "knn": {"k": 5},
    "rf": {},
    "twin_rf": {"augment": True},
    "semisup_rf": {"loop_weight": 1.0, "transductive": True, "loop_count": None},
}

# sweep axis -> {method: parameter it sets}
SWEEP_AXES = {
    "ensemble_size": {"ann_ensemble": "ensemble_size", "tnnr_ensemble": "ensemble_size"},
    "multiplier": {"tnnr": "multiplier"},
    "neighbors": {"nntnnr": "neighbors", "knn": "k"},
    "lambda": {"semisup_rf": "loop_weight"},
    "anchors": {"tnnr": "anchors"},
}

RF_METHODS = ("rf", "twin_rf", "semisup_rf")


@dataclass
class ExperimentConfig:
    dataset: str = "TF"
    method: str = "tnnr"
    params: dict = field(default_factory=dict)
    target_column: str | int = -1
    n_samples: int | None = None
    noise_std: float | None = None
    data_seed: int = 0
    split: dict | None = None  # {"fractions": [..]} or {"counts": [train_n, test_n]}
    repetitions: int = 25
    seed: int = 0
    seeds: list | None = None  # explicit split seeds; overrides seed + repetition
    sweep_axis: str | None = None
    sweep_values: list | None = None
    output: str | None = None
    learner: dict = field(default_factory=dict)  # {"mlp": {...}, "rf": {...}}
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}; choose from {sorted(METHODS)}")
        unknown = set(self.params) - set(METHODS[self.method])
        if unknown:
            raise InvalidArgumentError(f"method {self.method} has no parameters {sorted(unknown)}")
        if self.seeds is not None:
            self.seeds = [int(s) for s in self.seeds]
            if not self.seeds:
                raise InvalidArgumentError("seeds list is empty")
            self.repetitions = len(self.seeds)
        if self.repetitions < 1:
            raise InvalidArgumentError("repetitions must be >= 1")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise InvalidArgumentError(
                    f"unknown sweep axis {self.sweep_axis!r}; choose from {sorted(SWEEP_AXES)}"
                )
            if self.method not in SWEEP_AXES[self.sweep_axis]:
                raise InvalidArgumentError(
                    f"sweep axis {self.sweep_axis} does not apply to method {self.method}"
                )
            if not self.sweep_values:
                raise InvalidArgumentError("sweep requested without sweep values")
        self.split_spec(0)  # validate early

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)

    def split_spec(self, seed) -> SplitSpec:
        sp = self.split or ({"counts": [100, 100]} if self.method in RF_METHODS
                            else {"fractions": [0.7, 0.1, 0.2]})
        if "counts" in sp:
            return SplitSpec(seed, counts=tuple(int(c) for c in sp["counts"]))
        return SplitSpec(seed, fractions=tuple(float(f) for f in sp["fractions"]))

    def repetition_seeds(self):
        if self.seeds is not None:
            return list(self.seeds)
        return [self.seed + r for r in range(self.repetitions)]

    def method_params(self, sweep_value=None):
        params = {**METHODS[self.method], **self.params}
        if self.sweep_axis is not None and sweep_value is not None:
            params[SWEEP_AXES[self.sweep_axis][self.method]] = sweep_value
        return params

    def learner_config(self, kind) -> LearnerConfig:
        mlp = MLPConfig(**self.learner.get("mlp", {}))
        rf = ForestConfig(**self.learner.get("rf", {}))
        return LearnerConfig(kind, mlp=mlp, rf=rf)

    def load(self) -> Dataset:
        return load_dataset(self.dataset, target_column=self.target_column, n=self.n_samples,
                            seed=self.data_seed, noise_std=self.noise_std)


@dataclass
class ExperimentResult:
    config: dict
    sweep_value: object
    seeds: list
    rmse: list
    mean_rmse: float
    standard_error: float
    train_seconds: list
    infer_seconds: list
    parameter_counts: list

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_records(cls, config, sweep_value, records):
        vals = [r["rmse"] for r in records]
        return cls(
            config=config,
            sweep_value=sweep_value,
            seeds=[r["seed"] for r in records],
            rmse=vals,
            mean_rmse=float(np.mean(vals)),
            standard_error=standard_error(vals),
            train_seconds=[r["train_s"] for r in records],
            infer_seconds=[r["infer_s"] for r in records],
            parameter_counts=[r["parameter_count"] for r in records],
        )


# ---------------------------------------------------------------------------
# one repetition


class _Repetition:
    """Split, scale and train/evaluate each requested method setting.

    Fitted models are cached by their training-relevant parameters so that
    inference-only sweeps (anchors, neighbours at inference, ensemble size)
    reuse the same trained models and stay paired.
    """

    def __init__(self, cfg: ExperimentConfig, data: Dataset, seed: int):
        self.cfg = cfg
        self.seed = seed
        tr, va, te = split_indices(data.n, cfg.split_spec(seed))
        self.train, self.val, self.test = data.subset(tr), data.subset(va), data.subset(te)
        used = np.zeros(data.n, bool)
        used[np.concatenate([tr, va, te])] = True
        self.pool = data.features[~used]
        self.scaler = fit_scaler(self.train)
        self.train_s = apply_scaler(self.scaler, self.train)
        self.val_s = apply_scaler(self.scaler, self.val)
        self.test_Xs = self.scaler.transform(self.test.features)
        self.cache = {}

    def _cached(self, key, build):
        if key not in self.cache:
            t0 = time.perf_counter()
            model = build()
            self.cache[key] = (model, time.perf_counter() - t0)
        return self.cache[key]

    def _validation(self):
        if self.val.n:
            return self.val_s.features, self.val_s.targets
        return None

    def _ann(self, member):
        learner = self.cfg.learner_config("mlp")
        return self._cached(("ann", member), lambda: learners.fit(
            learner, self.train_s.features, self.train_s.targets, self._validation(),
            seed=self.seed * 1000 + member))

    def _twin(self, strategy, member=0):
        learner = self.cfg.learner_config("mlp")
        return self._cached(("twin", strategy, member), lambda: twin_fit(
            learner, self.train_s, strategy, self.val_s if self.val.n else None,
            seed=self.seed * 1000 + member))

    def evaluate(self, params):
        method = self.cfg.method
        Xq = self.test_Xs
        seconds = 0.0
        t_inf = time.perf_counter()
        if method == "ann":
            model, seconds = self._ann(0)
            t_inf = time.perf_counter()
            pred = model.predict(Xq)
            count = model.parameter_count
        elif method == "ann_ensemble":
            E = int(params["ensemble_size"])
            fitted = [self._ann(e) for e in range(E)]
            seconds = sum(s for _, s in fitted)
            t_inf = time.perf_counter()
            pred = np.mean([m.predict(Xq) for m, _ in fitted], axis=0)
            count = sum(m.parameter_count for m, _ in fitted)
        elif method in ("tnnr", "tnnr_ensemble", "nntnnr"):
            augment = bool(params.get("augment", False))
            if method == "tnnr" and params.get("multiplier"):
                strategy = PairingStrategy.multiplier(int(params["multiplier"]), augment)
            elif method == "nntnnr" and params["train_mode"] == "nn":
                strategy = PairingStrategy.nearest_neighbors(int(params["neighbors"]), augment)
            elif method == "nntnnr" and params["train_mode"] != "all":
                raise InvalidArgumentError(f"train_mode must be 'nn' or 'all', got {params['train_mode']!r}")
            else:
                strategy = PairingStrategy.full(augment)
            members = int(params["ensemble_size"]) if method == "tnnr_ensemble" else 1
            fitted = [self._twin(strategy, e) for e in range(members)]
            seconds = sum(s for _, s in fitted)
            if method == "nntnnr":
                policy = AnchorPolicy.nearest(int(params["neighbors"]))
            elif method == "tnnr" and params.get("anchors"):
                policy = AnchorPolicy.random_subset(int(params["anchors"]), self.train.n,
                                                    self.seed)
            else:
                policy = AnchorPolicy.all()
            symmetric = bool(params.get("symmetric", True))
            t_inf = time.perf_counter()
            pred = np.mean([predict_values(tm, Xq, policy, symmetric, model_space=True)
                            for tm, _ in fitted], axis=0)
            tm0 = fitted[0][0]
            count = sum(tm.base.parameter_count for tm, _ in fitted) + (
                (policy.m if policy.mode == "nearest" else
                 len(policy.indices) if policy.mode == "fixed_subset" else tm0.n_anchors)
                * (tm0.n_features + 1))
        elif method == "knn":
            model, seconds = self._cached(("knn", int(params["k"])), lambda: learners.fit(
                LearnerConfig("knn", k=int(params["k"])), self.train_s.features,
                self.train_s.targets))
            t_inf = time.perf_counter()
            pred = model.predict(Xq)
            count = model.parameter_count
        elif method == "rf":
            model, seconds = self._cached(("rf",), lambda: learners.fit(
                self.cfg.learner_config("random_forest"), self.train_s.features,
                self.train_s.targets, seed=self.seed))
            t_inf = time.perf_counter()
            pred = model.predict(Xq)
            count = model.parameter_count
        elif method == "twin_rf":
            strategy = PairingStrategy.full(bool(params["augment"]))
            tm, seconds = self._cached(("twin_rf", strategy), lambda: twin_fit(
                self.cfg.learner_config("random_forest"), self.train_s, strategy,
                seed=self.seed))
            t_inf = time.perf_counter()
            pred = predict_values(tm, Xq, model_space=True)
            count = tm.storage_parameters
        elif method == "semisup_rf":
            if params["transductive"]:
                unlabeled = self.test.features
            else:
                unlabeled = self.pool
            cfg = SemiSupConfig(float(params["loop_weight"]), params.get("loop_count"),
                                bool(params["transductive"]))
            tm, seconds = self._cached(("semisup", cfg), lambda: semisup_fit(
                self.cfg.learner_config("random_forest"), self.train, unlabeled, cfg,
                seed=self.seed, scaler=self.scaler))
            t_inf = time.perf_counter()
            pred = predict_values(tm, Xq, model_space=True)
            count = tm.storage_parameters
        else:  # pragma: no cover - guarded by ExperimentConfig
            raise InvalidArgumentError(method)
        infer = time.perf_counter() - t_inf
        return {
            "rmse": rmse(pred, self.test.targets),
            "train_s": float(seconds),
            "infer_s": float(infer),
            "parameter_count": int(count),
        }


def _run_repetition(args):
    cfg, rep, seed, values = args
    try:
        data = cfg.load()
        r = _Repetition(cfg, data, seed)
        out = []
        for v in values:
            rec = r.evaluate(cfg.method_params(v))
            rec.update(seed=seed, sweep_value=v)
            out.append(rec)
        return out
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(rep, exc) from exc


def _execute(cfg: ExperimentConfig, values):
    jobs = [(cfg, rep, seed, values) for rep, seed in enumerate(cfg.repetition_seeds())]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            per_rep = list(pool.map(_run_repetition, jobs))
    else:
        per_rep = [_run_repetition(j) for j in jobs]
    # regroup: one ExperimentResult per sweep value, repetitions in seed order
    results = []
    for i, v in enumerate(values):
        records = [rep[i] for rep in per_rep]
        results.append(ExperimentResult.from_records(cfg.to_dict(), v, records))
    return results


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.sweep_axis is not None:
        raise InvalidArgumentError("config requests a sweep; use sweep()")
    result = _execute(cfg, [None])[0]
    if cfg.output:
        write_results(cfg.output, [result])
    return result


def sweep(cfg: ExperimentConfig) -> list[ExperimentResult]:
    if cfg.sweep_axis is None or not cfg.sweep_values:
        raise InvalidArgumentError("sweep needs sweep_axis and sweep_values")
    results = _execute(cfg, list(cfg.sweep_values))
    if cfg.output:
        write_results(cfg.output, results)
    return results


# ---------------------------------------------------------------------------
# output


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(results) -> str:
    """Deterministic per-repetition table: seed, sweep_value, rmse."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "sweep_value", "rmse"])
    for res in results:
        for seed, val in zip(res.seeds, res.rmse):
            w.writerow([seed, _fmt(res.sweep_value), repr(float(val))])
    return buf.getvalue()


def timings_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "sweep_value", "train_s", "infer_s"])
    for res in results:
        for seed, tr, inf in zip(res.seeds, res.train_seconds, res.infer_seconds):
            w.writerow([seed, _fmt(res.sweep_value), repr(float(tr)), repr(float(inf))])
    return buf.getvalue()


def write_results(out_dir, results):
    out = Path(out_dir)
    payload = {"results": [r.to_dict() for r in results]}
    _atomic_write(out / "result.json", json.dumps(payload, indent=2, default=_json_default))
    _atomic_write(out / "result.csv", results_csv(results))
    _atomic_write(out / "timings.csv", timings_csv(results))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# multiplier check

CHECK_MULTIPLIERS = (1, 4, 16)


def multiplier_verdict(rmses):
    """'reject-tnnr' when RMSE strictly increases with every multiplier step."""
    r = list(rmses)
    if all(b > a for a, b in zip(r, r[1:])):
        return "reject-tnnr"
    return "ok"


def multiplier_check(dataset="TF", seeds=(0,), multipliers=CHECK_MULTIPLIERS, **cfg_kwargs):
    """Fit TNNR at increasing training-set multipliers and flag the failure signature."""
    cfg = ExperimentConfig(dataset=dataset, method="tnnr", seeds=list(seeds),
                           sweep_axis="multiplier", sweep_values=list(multipliers), **cfg_kwargs)
    results = sweep(cfg)
    means = [r.mean_rmse for r in results]
    return {
        "verdict": multiplier_verdict(means),
        "multipliers": list(multipliers),
        "rmse": means,
        "per_seed": {str(r.sweep_value): r.rmse for r in results},
    }
