"""Nominal features from a Dirichlet-categorical compound.

For every user a category probability vector is drawn from a Dirichlet whose
concentration may depend on an already generated feature (for instance the
job mix depends on the academic degree), and the user's label is a single
categorical draw from it.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .primitives import RngStream, categorical_rows, dirichlet_rows
from .users import UserTable

THETA_MODES = ("per_user", "per_run")


@dataclass(frozen=True)
class NominalFeatureSpec:
    name: str
    categories: tuple[str, ...]
    alpha: tuple[float, ...] | None = None
    conditioning: str | None = None
    alpha_table: Mapping[str, tuple[float, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        m = len(self.categories)
        if m < 2:
            raise ConfigError(f"nominal feature {self.name!r}: needs at least 2 categories")
        if len(set(self.categories)) != m:
            raise ConfigError(f"nominal feature {self.name!r}: categories must be unique")
        if (self.alpha is None) == (self.conditioning is None):
            raise ConfigError(
                f"nominal feature {self.name!r}: give either an unconditional alpha or a conditioning feature with alpha_table"
            )
        if self.alpha is not None:
            object.__setattr__(self, "alpha", self._check_vector(self.alpha, "alpha"))
        else:
            if not self.alpha_table:
                raise ConfigError(f"nominal feature {self.name!r}: alpha_table is empty")
            table = {str(k): self._check_vector(v, f"alpha_table[{k!r}]") for k, v in self.alpha_table.items()}
            object.__setattr__(self, "alpha_table", table)

    def _check_vector(self, values, what: str) -> tuple[float, ...]:
        vec = tuple(float(v) for v in values)
        if len(vec) != len(self.categories):
            raise ConfigError(
                f"nominal feature {self.name!r}: {what} has {len(vec)} entries for {len(self.categories)} categories"
            )
        if not all(np.isfinite(v) and v > 0 for v in vec):
            raise ConfigError(f"nominal feature {self.name!r}: {what} entries must be positive")
        return vec

    def expected_probabilities(self, conditioning_value: str | None = None) -> np.ndarray:
        """Marginal category probabilities ``alpha / sum(alpha)``."""
        a = np.array(self.resolve(conditioning_value))
        return a / a.sum()

    def resolve(self, conditioning_value: str | None) -> tuple[float, ...]:
        if self.alpha is not None:
            return self.alpha
        if conditioning_value is None:
            raise ConfigError(f"nominal feature {self.name!r} needs a value of {self.conditioning!r}")
        try:
            return self.alpha_table[str(conditioning_value)]
        except KeyError:
            raise ConfigError(
                f"nominal feature {self.name!r}: no alpha row for {self.conditioning}={conditioning_value!r}"
            ) from None


def resolve_alphas(spec: NominalFeatureSpec, user_row: Mapping[str, str]) -> np.ndarray:
    """Dirichlet concentration for one user, honouring a conditioning feature."""
    if spec.conditioning is None:
        return np.array(spec.alpha)
    if spec.conditioning not in user_row:
        raise ConfigError(
            f"nominal feature {spec.name!r}: user has no value for conditioning feature {spec.conditioning!r}"
        )
    return np.array(spec.resolve(user_row[spec.conditioning]))


def sample_nominal(spec: NominalFeatureSpec, users: UserTable, rng: RngStream,
                   theta_mode: str = "per_user") -> np.ndarray:
    """Labels of ``spec`` for every user in ``users``.

    With ``theta_mode="per_user"`` every user gets a fresh Dirichlet draw, so
    the label marginal is exactly ``alpha / sum(alpha)``. ``"per_run"`` draws
    one probability vector per conditioning value and shares it among users.
    """
    if theta_mode not in THETA_MODES:
        raise ConfigError(f"theta_mode must be one of {THETA_MODES}, got {theta_mode!r}")
    n = users.n_users
    if spec.conditioning is None:
        keys = np.zeros(n, dtype=np.int64)
        alpha_rows = np.array([spec.alpha])
    else:
        cond = users.labels(spec.conditioning)
        values = list(spec.alpha_table)
        index = {v: i for i, v in enumerate(values)}
        missing = sorted({str(c) for c in cond} - index.keys())
        if missing:
            raise ConfigError(
                f"nominal feature {spec.name!r}: no alpha row for {spec.conditioning}={missing[0]!r}"
            )
        keys = np.array([index[str(c)] for c in cond], dtype=np.int64)
        alpha_rows = np.array([spec.alpha_table[v] for v in values])

    if theta_mode == "per_user":
        theta = dirichlet_rows(alpha_rows[keys], rng)
    else:
        theta = dirichlet_rows(alpha_rows, rng)[keys]
    codes = categorical_rows(theta, rng) if n else np.empty(0, dtype=np.int64)
    return np.asarray(spec.categories, dtype=object)[codes - 1]
