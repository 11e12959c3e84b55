"""Stored-parameter accounting for model ensembles versus anchor ensembles."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidArgumentError
from ..learners import count_parameters


@dataclass(frozen=True)
class StorageRow:
    ensemble_size: int
    ann_parameters: int
    tnnr_parameters: int


def storage_report(f, ensemble_sizes, hidden=(128, 128), augment=False) -> list[StorageRow]:
    """E independent networks versus one twin network plus E anchors of f+1 numbers."""
    if f < 1:
        raise InvalidArgumentError("feature count must be >= 1")
    plain = count_parameters("plain_mlp", f, hidden)
    twin = count_parameters("twin_mlp", f, hidden, augment)
    rows = []
    for E in ensemble_sizes:
        if E < 1:
            raise InvalidArgumentError(f"ensemble size must be >= 1, got {E}")
        rows.append(StorageRow(int(E), int(E) * plain, twin + int(E) * (f + 1)))
    return rows


def crossover_size(f, hidden=(128, 128), augment=False, limit=1_000_000):
    """Smallest ensemble size at which the anchor ensemble is strictly cheaper."""
    plain = count_parameters("plain_mlp", f, hidden)
    twin = count_parameters("twin_mlp", f, hidden, augment)
    for E in range(1, limit + 1):
        if twin + E * (f + 1) < E * plain:
            return E
    return None
