from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .primitives import RngStream


@dataclass(frozen=True)
class Item:
    item_id: int
    name: str
    categories: tuple[str, ...]


@dataclass(frozen=True)
class ItemCatalog:
    items: tuple[Item, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        for pos, item in enumerate(items):
            if item.item_id != pos:
                raise ConfigError(f"item ids must be contiguous from 0; position {pos} has id {item.item_id}")
            if not item.categories:
                raise ConfigError(f"item {item.item_id} ({item.name!r}) has no categories")

    def __len__(self) -> int:
        return len(self.items)

    @classmethod
    def from_records(cls, records) -> "ItemCatalog":
        return cls(tuple(Item(int(i), str(n), tuple(c)) for i, n, c in records))


def vectorize_catalog(catalog: ItemCatalog, category_order: Sequence[str]) -> np.ndarray:
    """Binary ``(n_items, J)`` incidence matrix of items against preference categories."""
    index = {c: j for j, c in enumerate(category_order)}
    icat = np.zeros((len(catalog), len(category_order)), dtype=np.int8)
    for item in catalog.items:
        for c in item.categories:
            if c not in index:
                raise ConfigError(f"item {item.item_id} ({item.name!r}): unknown category {c!r}")
            icat[item.item_id, index[c]] = 1
    return icat


def user_item_affinity(preferences, icat) -> np.ndarray:
    """Probability of each user liking each item: preference mass on the item's categories."""
    preferences = np.asarray(preferences, dtype=float)
    icat = np.asarray(icat, dtype=float)
    if preferences.shape[1] != icat.shape[1]:
        raise DataError(
            f"preferences have {preferences.shape[1]} categories but the item matrix has {icat.shape[1]}"
        )
    # a full-row subset sum may round a hair above 1
    return np.clip(preferences @ icat.T, 0.0, 1.0)


def cell_count(density: float, n_rows: int, n_cols: int) -> int:
    return int(math.floor(density * n_rows * n_cols + 0.5))


def apply_noise(M, cells, perturbation) -> np.ndarray:
    """Add ``perturbation`` at flat indices ``cells`` of a copy of ``M`` and clamp to [0, 1]."""
    out = np.array(M, dtype=float, copy=True)
    flat = out.reshape(-1)
    flat[np.asarray(cells, dtype=np.int64)] += perturbation
    np.clip(out, 0.0, 1.0, out=out)
    return out


def add_sparse_noise(M, noise_density: float, rng: RngStream, *, signed: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Perturb ``round(density * n * m)`` distinct cells chosen uniformly.

    Each selected cell gets ``+Uniform(0, 1)`` (``Uniform(-1, 1)`` if
    ``signed``), then the matrix is clamped to [0, 1]. Returns the noisy
    matrix and the sorted flat indices of the perturbed cells.
    """
    if not 0.0 <= noise_density <= 1.0:
        raise ConfigError(f"noise density must lie in [0, 1], got {noise_density}")
    M = np.asarray(M, dtype=float)
    k = cell_count(noise_density, *M.shape)
    cells = rng.sample_without_replacement(M.size, k)
    low = -1.0 if signed else 0.0
    return apply_noise(M, cells, rng.uniform(low, 1.0, size=k)), cells
