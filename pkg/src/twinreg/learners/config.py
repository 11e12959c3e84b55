from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, fields, replace

from ..errors import InvalidArgumentError

KINDS = ("mlp", "random_forest", "knn")

PLAIN_MAX_EPOCHS = 2000
TWIN_MAX_EPOCHS = 10000


@dataclass(frozen=True)
class MLPConfig:
    """Fully connected regressor trained on MSE.

    ``max_epochs=None`` resolves to 2000 for plain and 10000 for twinned
    training.  ``epoch_size`` caps the number of samples drawn per epoch
    (sampling without replacement from a reshuffled stream); ``None`` means
    one full pass.  ``max_validation_rows`` subsamples a large validation set
    once, before training.
    """

    hidden: tuple[int, ...] = (128, 128)
    activation: str = "relu"
    batch_size: int = 16
    max_epochs: int | None = None
    optimizer: str = "adadelta"
    learning_rate: float = 1.0
    rho: float = 0.95
    epsilon: float = 1e-7
    beta1: float = 0.9
    beta2: float = 0.999
    plateau_patience: int = 25
    lr_factor: float = 0.5
    min_lr: float = 1e-5
    early_stop_patience: int = 50
    epoch_size: int | None = None
    validation_fraction: float = 0.1
    max_validation_rows: int | None = None
    scale_targets: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise InvalidArgumentError(f"hidden widths must be positive, got {self.hidden}")
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        if self.activation not in ("relu", "tanh"):
            raise InvalidArgumentError(f"unsupported activation {self.activation!r}")
        if self.optimizer not in ("adadelta", "adam", "sgd"):
            raise InvalidArgumentError(f"unsupported optimizer {self.optimizer!r}")
        if self.max_epochs is not None and self.max_epochs < 1:
            raise InvalidArgumentError("max_epochs must be >= 1")
        if self.epoch_size is not None and self.epoch_size < 1:
            raise InvalidArgumentError("epoch_size must be >= 1")
        if not 0 < self.lr_factor <= 1:
            raise InvalidArgumentError("lr_factor must lie in (0, 1]")
        if not 0 < self.validation_fraction < 1:
            raise InvalidArgumentError("validation_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ForestParams:
    max_depth: int = 32
    max_features: float = 1.0
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    n_estimators: int = 100

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise InvalidArgumentError(f"{f.name} must be positive")
        if self.max_features > 1:
            raise InvalidArgumentError("max_features is a fraction in (0, 1]")
        if self.min_samples_split < 2:
            raise InvalidArgumentError("min_samples_split must be >= 2")


GRID_AXES = ("max_depth", "max_features", "min_samples_leaf", "min_samples_split", "n_estimators")


@dataclass(frozen=True)
class ForestConfig:
    """Hyperparameter grid for CART random forests, searched by k-fold CV."""

    max_depth: tuple[int, ...] = (4, 8, 16, 32, 64)
    max_features: tuple[float, ...] = (0.33, 0.667, 1.0)
    min_samples_leaf: tuple[int, ...] = (1, 2, 5)
    min_samples_split: tuple[int, ...] = (2, 4, 8)
    n_estimators: tuple[int, ...] = (100, 300, 600)
    cv_folds: int = 5
    bootstrap: bool = True

    def __post_init__(self):
        for name in GRID_AXES:
            vals = tuple(getattr(self, name))
            if not vals:
                raise InvalidArgumentError(f"grid axis {name} is empty")
            if any(v <= 0 for v in vals):
                raise InvalidArgumentError(f"grid axis {name} has non-positive values")
            object.__setattr__(self, name, vals)
        if self.cv_folds < 2:
            raise InvalidArgumentError("cv_folds must be >= 2")

    def candidates(self) -> list[ForestParams]:
        axes = [getattr(self, name) for name in GRID_AXES]
        return [ForestParams(*combo) for combo in itertools.product(*axes)]

    @property
    def size(self):
        n = 1
        for name in GRID_AXES:
            n *= len(getattr(self, name))
        return n

    @classmethod
    def fixed(cls, params: ForestParams, **kw):
        return cls(**{k: (v,) for k, v in asdict(params).items()}, **kw)


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "mlp"
    mlp: MLPConfig = field(default_factory=MLPConfig)
    rf: ForestConfig = field(default_factory=ForestConfig)
    k: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown learner kind {self.kind!r}; choose from {KINDS}")
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        mlp = MLPConfig(**d.pop("mlp", {}))
        rf = ForestConfig(**d.pop("rf", {}))
        return cls(mlp=mlp, rf=rf, **d)

    def with_mlp(self, **kw):
        return replace(self, mlp=replace(self.mlp, **kw))
