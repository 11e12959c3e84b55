"""Datasets: synthetic generators, CSV ingestion, splitting and scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InvalidArgumentError,
    MissingFileError,
    MissingTargetError,
    NonNumericCellError,
    CSVParseError,
)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus target vector. Arrays are stored read-only."""

    features: np.ndarray
    targets: np.ndarray
    name: str = "custom"
    feature_names: tuple[str, ...] | None = None
    target_name: str = "y"

    def __post_init__(self):
        X = _frozen(self.features)
        y = _frozen(self.targets)
        if X.ndim == 1:
            X = _frozen(X.reshape(-1, 1))
        if X.ndim != 2 or y.ndim != 1:
            raise InvalidArgumentError("features must be 2-D and targets 1-D")
        if X.shape[0] != y.shape[0]:
            raise InvalidArgumentError(
                f"row count mismatch: {X.shape[0]} feature rows, {y.shape[0]} targets"
            )
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise InvalidArgumentError("dataset contains non-finite values")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise InvalidArgumentError("feature_names length does not match feature count")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.features[idx], self.targets[idx], self.name,
                       self.feature_names, self.target_name)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.targets, self.name, self.feature_names, self.target_name)

    def with_targets(self, y) -> "Dataset":
        return Dataset(self.features, y, self.name, self.feature_names, self.target_name)


# ---------------------------------------------------------------------------
# synthetic data

TF_DOMAIN = {"x1": (-1.0, 1.0), "x2": (-1.0, 1.0)}
RCL_DOMAIN = {
    "V0": (1.0, 2.0),
    "omega": (0.5, 2.0),
    "t": (0.0, 2 * math.pi),
    "R": (0.5, 2.0),
    "L": (0.5, 2.0),
    "C": (0.5, 2.0),
}
WSB_DOMAIN = {"U": (1.0, 2.0), "R1": (0.5, 2.0), "R2": (0.5, 2.0), "R3": (0.5, 2.0)}


def tf_formula(x1, x2):
    return x1**3 + x1**2 - x1 - 1 + x1 * x2 + np.sin(x2)


def rcl_current(V0, omega, t, R, L, C):
    return V0 * np.cos(omega * t) / np.sqrt(R**2 + (omega * L - 1 / (omega * C)) ** 2)


def wheatstone_voltage(U, R1, R2, R3):
    # second ratio is R3/(R2+R3) as published, not the four-resistor bridge
    return U * (R2 / (R1 + R2) - R3 / (R2 + R3))


def _rngs(seed):
    # separate streams so noisy and noiseless variants share their inputs
    return np.random.default_rng([seed, 0]), np.random.default_rng([seed, 1])


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    return int(n)


def _sample(rng, domain, names, n, positive=()):
    cols = []
    for name in names:
        lo, hi = domain[name]
        if hi < lo:
            raise InvalidArgumentError(f"empty sampling range for {name}: {(lo, hi)}")
        if name in positive and lo <= 0:
            raise InvalidArgumentError(f"{name} range must be strictly positive, got {(lo, hi)}")
        cols.append(rng.uniform(lo, hi, n))
    return np.column_stack(cols)


def _merge_domain(default, override):
    domain = dict(default)
    if override:
        unknown = set(override) - set(default)
        if unknown:
            raise InvalidArgumentError(f"unknown domain keys: {sorted(unknown)}")
        domain.update({k: tuple(map(float, v)) for k, v in override.items()})
    return domain


def generate_test_function(n=1000, seed=0, noise_std=0.0, domain=None) -> Dataset:
    n = _check_n(n)
    domain = _merge_domain(TF_DOMAIN, domain)
    rng, noise_rng = _rngs(seed)
    X = _sample(rng, domain, ("x1", "x2"), n)
    y = tf_formula(X[:, 0], X[:, 1])
    if noise_std:
        y = y + noise_rng.normal(0.0, noise_std, n)
    return Dataset(X, y, "TF", ("x1", "x2"))


def generate_rcl(n=4000, seed=0, noise_std=0.1, domain=None) -> Dataset:
    n = _check_n(n)
    names = ("V0", "omega", "t", "R", "L", "C")
    domain = _merge_domain(RCL_DOMAIN, domain)
    rng, noise_rng = _rngs(seed)
    X = _sample(rng, domain, names, n, positive=("omega", "R", "C"))
    y = rcl_current(*X.T)
    if noise_std:
        y = y + noise_rng.normal(0.0, noise_std, n)
    return Dataset(X, y, "RCL", names)


def generate_wheatstone(n=200, seed=0, noise_std=0.1, domain=None) -> Dataset:
    n = _check_n(n)
    names = ("U", "R1", "R2", "R3")
    domain = _merge_domain(WSB_DOMAIN, domain)
    rng, noise_rng = _rngs(seed)
    X = _sample(rng, domain, names, n, positive=("R1", "R2", "R3"))
    y = wheatstone_voltage(*X.T)
    if noise_std:
        y = y + noise_rng.normal(0.0, noise_std, n)
    return Dataset(X, y, "WSB", names)


# key -> (generator, default size)
SYNTHETIC = {
    "TF": (generate_test_function, 1000),
    "RCL": (generate_rcl, 4000),
    "WSB": (generate_wheatstone, 200),
}

# sizes of the tabular benchmarks; the files themselves are supplied by the user
UCI_SIZES = {
    "BC": (779, 14),
    "BH": (506, 13),
    "CS": (1030, 8),
    "EE": (768, 8),
    "WN": (1599, 11),
    "YH": (308, 6),
}


def generate(key, n=None, seed=0, noise_std=None, domain=None) -> Dataset:
    try:
        gen, default_n = SYNTHETIC[key.upper()]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown synthetic dataset {key!r}; choose from {sorted(SYNTHETIC)}"
        ) from None
    kwargs = {"n": default_n if n is None else n, "seed": seed, "domain": domain}
    if noise_std is not None:
        kwargs["noise_std"] = noise_std
    return gen(**kwargs)


# ---------------------------------------------------------------------------
# CSV


def load_csv(path, target_column=-1, name=None) -> Dataset:
    """Read a numeric CSV with a mandatory header row.

    ``target_column`` is a header name or a column index (negative counts from
    the end). Every other column becomes a feature, in file order.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("file not found", path=path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVParseError("empty file, header row required", path=path, row=1) from None
        if isinstance(target_column, str):
            if target_column not in header:
                raise MissingTargetError(
                    f"target column not in header {header}", path=path, row=1, column=target_column
                )
            t = header.index(target_column)
        else:
            t = int(target_column)
            if not -len(header) <= t < len(header):
                raise MissingTargetError(
                    f"target index {t} out of range for {len(header)} columns", path=path, row=1
                )
            t %= len(header)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CSVParseError(
                    f"expected {len(header)} fields, found {len(rec)}", path=path, row=lineno
                )
            vals = []
            for col, cell in zip(header, rec):
                s = cell.strip()
                if not s:
                    raise NonNumericCellError("empty cell", path=path, row=lineno, column=col)
                try:
                    v = float(s)
                except ValueError:
                    raise NonNumericCellError(
                        f"non-numeric value {cell!r}", path=path, row=lineno, column=col
                    ) from None
                if not math.isfinite(v):
                    raise NonNumericCellError(
                        f"non-finite value {cell!r}", path=path, row=lineno, column=col
                    )
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CSVParseError("no data rows", path=path)
    A = np.array(rows, dtype=float)
    feat_idx = [i for i in range(len(header)) if i != t]
    return Dataset(
        A[:, feat_idx],
        A[:, t],
        name or path.stem,
        tuple(header[i] for i in feat_idx),
        header[t],
    )


def write_csv(d: Dataset, path):
    names = d.feature_names or tuple(f"x{i + 1}" for i in range(d.feature_count))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, d.target_name])
        for row, y in zip(d.features, d.targets):
            w.writerow([repr(float(v)) for v in row] + [repr(float(y))])


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    """Either ``fractions`` (train, validation, test) or ``counts`` (train_n, test_n)."""

    seed: int = 0
    fractions: tuple[float, float, float] | None = (0.7, 0.1, 0.2)
    counts: tuple[int, int] | None = None

    def __post_init__(self):
        if self.counts is not None:
            object.__setattr__(self, "fractions", None)
            tr, te = self.counts
            if tr < 1 or te < 0:
                raise InvalidArgumentError(f"invalid split counts {self.counts}")
        else:
            if self.fractions is None or len(self.fractions) != 3:
                raise InvalidArgumentError("fractions must be a (train, validation, test) triple")
            if any(f < 0 for f in self.fractions):
                raise InvalidArgumentError(f"negative split fraction in {self.fractions}")
            if abs(sum(self.fractions) - 1.0) > 1e-9:
                raise InvalidArgumentError(f"split fractions must sum to 1, got {self.fractions}")

    def sizes(self, n):
        if self.counts is not None:
            tr, te = self.counts
            if tr + te > n:
                raise InvalidArgumentError(f"split counts {self.counts} exceed dataset size {n}")
            return tr, 0, te
        ftr, fva, _ = self.fractions
        ntr = int(round(ftr * n))
        nva = int(round(fva * n))
        nte = n - ntr - nva
        if nte < 0:
            nva += nte
            nte = 0
        return ntr, nva, nte


def split_indices(n, spec: SplitSpec):
    ntr, nva, nte = spec.sizes(n)
    perm = np.random.default_rng(spec.seed).permutation(n)
    return perm[:ntr], perm[ntr:ntr + nva], perm[ntr + nva:ntr + nva + nte]


def split(d: Dataset, spec: SplitSpec):
    """Return (train, validation, test); validation is empty in fixed-count mode."""
    tr, va, te = split_indices(d.n, spec)
    return d.subset(tr), _subset_or_empty(d, va), _subset_or_empty(d, te)


def _subset_or_empty(d, idx):
    if len(idx):
        return d.subset(idx)
    return Dataset(np.empty((0, d.feature_count)), np.empty(0), d.name,
                   d.feature_names, d.target_name)


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    target_mean: float | None = None
    target_std: float | None = None

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def transform_targets(self, y):
        if self.target_mean is None:
            return np.asarray(y, dtype=float)
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def inverse_targets(self, t):
        if self.target_mean is None:
            return np.asarray(t, dtype=float)
        return np.asarray(t, dtype=float) * self.target_std + self.target_mean

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], float), np.asarray(d["std"], float),
                   d.get("target_mean"), d.get("target_std"))


def _safe_std(x, axis=None):
    s = np.std(x, axis=axis)
    return np.where(s > 0, s, 1.0)


def fit_scaler(train: Dataset, targets: bool = False) -> Scaler:
    """Per-feature z-scoring statistics (population std) from training rows.

    Zero-variance columns get std 1 so they map to zero.
    """
    if train.n == 0:
        raise InvalidArgumentError("cannot fit a scaler on an empty dataset")
    mean = _frozen(train.features.mean(axis=0))
    std = _frozen(_safe_std(train.features, axis=0))
    if targets:
        return Scaler(mean, std, float(train.targets.mean()), float(_safe_std(train.targets)))
    return Scaler(mean, std)


def apply_scaler(s: Scaler, d: Dataset) -> Dataset:
    if d.feature_count != s.mean.shape[0]:
        raise InvalidArgumentError(
            f"scaler expects {s.mean.shape[0]} features, dataset has {d.feature_count}"
        )
    return Dataset(s.transform(d.features), s.transform_targets(d.targets), d.name,
                   d.feature_names, d.target_name)


def load_dataset(key_or_path, *, target_column=-1, n=None, seed=0, noise_std=None) -> Dataset:
    """Synthetic key (TF, RCL, WSB) or a path to a CSV file."""
    if str(key_or_path).upper() in SYNTHETIC:
        return generate(str(key_or_path), n=n, seed=seed, noise_std=noise_std)
    if str(key_or_path).upper() in UCI_SIZES and not Path(key_or_path).exists():
        raise InvalidArgumentError(
            f"{key_or_path} is a tabular benchmark; pass the path to its CSV file"
        )
    return load_csv(key_or_path, target_column)
