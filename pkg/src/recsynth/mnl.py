"""Multinomial-logit category preferences.

Users are encoded as a design matrix (ordinal codes, then one-hot nominal
blocks named ``x{i}_{category}``), utilities are ``x @ beta`` plus iid
standard Gumbel noise, and preferences are the row-wise softmax of the
utilities.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .copula import OrdinalFeatureSpec
from .errors import ConfigError, DataError
from .nominal import NominalFeatureSpec
from .primitives import RngStream, gumbel_inv_cdf
from .users import UserTable


@dataclass(frozen=True)
class BetaMatrix:
    """Marginal utilities, one row per design column and one column per preference category."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.shape != (len(self.rows), len(self.columns)):
            raise ConfigError(f"beta values have shape {values.shape}, expected {(len(self.rows), len(self.columns))}")
        if len(self.columns) < 2:
            raise ConfigError("beta needs at least 2 preference categories")
        if len(set(self.rows)) != len(self.rows):
            raise ConfigError("beta row names must be unique")
        if not np.all(np.isfinite(values)):
            raise ConfigError("beta grades must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def aligned_to(self, design_columns: Sequence[str]) -> "BetaMatrix":
        """Reorder rows to ``design_columns``; the two name sets must coincide."""
        missing = [c for c in design_columns if c not in self.rows]
        if missing:
            raise ConfigError(f"beta has no row for design column {missing[0]!r}")
        extra = [r for r in self.rows if r not in design_columns]
        if extra:
            raise ConfigError(f"beta row {extra[0]!r} matches no design column")
        order = [self.rows.index(c) for c in design_columns]
        return BetaMatrix(tuple(design_columns), self.columns, self.values[order])


@dataclass(frozen=True)
class DesignMatrix:
    columns: tuple[str, ...]
    values: np.ndarray


def design_columns(ordinal_specs: Sequence[OrdinalFeatureSpec],
                   nominal_specs: Sequence[NominalFeatureSpec]) -> list[str]:
    cols = [s.name for s in ordinal_specs]
    for i, spec in enumerate(nominal_specs):
        cols.extend(f"x{i}_{c}" for c in spec.categories)
    return cols


def encode_users(users: UserTable, ordinal_specs: Sequence[OrdinalFeatureSpec],
                 nominal_specs: Sequence[NominalFeatureSpec]) -> DesignMatrix:
    cols = design_columns(ordinal_specs, nominal_specs)
    x = np.zeros((users.n_users, len(cols)))
    for j, spec in enumerate(ordinal_specs):
        if spec.name not in users.ordinal:
            raise DataError(f"user table lacks ordinal feature {spec.name!r}")
        x[:, j] = users.ordinal[spec.name]
    offset = len(ordinal_specs)
    for spec in nominal_specs:
        if spec.name not in users.nominal:
            raise DataError(f"user table lacks nominal feature {spec.name!r}")
        index = {c: k for k, c in enumerate(spec.categories)}
        labels = users.nominal[spec.name]
        try:
            hot = np.fromiter((index[v] for v in labels), dtype=np.int64, count=len(labels))
        except KeyError as exc:
            raise DataError(f"unknown label {exc.args[0]!r} for nominal feature {spec.name!r}") from None
        x[np.arange(users.n_users), offset + hot] = 1.0
        offset += len(spec.categories)
    return DesignMatrix(tuple(cols), x)


def normalize_beta(beta: BetaMatrix, ref_pref_id: int = 0, tau: float = 1.0) -> BetaMatrix:
    """Express every preference relative to the reference one and scale by ``tau``.

    Softmax is invariant to per-row shifts, so subtracting the reference
    column only fixes the identification; ``tau`` sets how sharp the
    resulting preferences are.
    """
    if not 0 <= ref_pref_id < len(beta.columns):
        raise ConfigError(f"reference preference index {ref_pref_id} out of range")
    if not (np.isfinite(tau) and tau >= 0):
        raise ConfigError("tau must be a non-negative real")
    v = beta.values
    return BetaMatrix(beta.rows, beta.columns, tau * (v - v[:, [ref_pref_id]]))


def compute_utilities(x: DesignMatrix, beta: BetaMatrix, rng: RngStream | None = None,
                      *, noise: bool = True) -> np.ndarray:
    """``U = x @ beta + E`` with ``E`` iid standard Gumbel (``noise=False`` sets ``E = 0``)."""
    if tuple(x.columns) != beta.rows:
        raise ConfigError("design matrix columns do not match beta rows")
    V = x.values @ beta.values
    if not noise:
        return V
    if rng is None:
        raise ConfigError("compute_utilities needs an RngStream when noise is enabled")
    return V + gumbel_inv_cdf(rng.uniform_open(V.shape)) if V.size else V


def preference_probabilities(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    z = np.exp(U - U.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)
