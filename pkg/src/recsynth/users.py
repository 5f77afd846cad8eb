from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copula import OrdinalFeatureSpec
from .errors import DataError


@dataclass
class UserTable:
    """Column store of generated user attributes, indexed by 0-based user id."""

    n_users: int
    ordinal_specs: dict[str, OrdinalFeatureSpec] = field(default_factory=dict)
    ordinal: dict[str, np.ndarray] = field(default_factory=dict)
    nominal: dict[str, np.ndarray] = field(default_factory=dict)
    numeric: dict[str, np.ndarray] = field(default_factory=dict)
    bias: np.ndarray | None = None
    spread: np.ndarray | None = None

    def add_ordinal(self, spec: OrdinalFeatureSpec, codes) -> None:
        codes = np.asarray(codes, dtype=np.int64)
        self._check_length(spec.name, codes)
        self.ordinal_specs[spec.name] = spec
        self.ordinal[spec.name] = codes

    def add_nominal(self, name: str, labels) -> None:
        labels = np.asarray(labels, dtype=object)
        self._check_length(name, labels)
        self.nominal[name] = labels

    def labels(self, feature: str) -> np.ndarray:
        """Category labels of ``feature`` for every user (ordinal codes are mapped back to labels)."""
        if feature in self.ordinal:
            return self.ordinal_specs[feature].label_of(self.ordinal[feature])
        if feature in self.nominal:
            return self.nominal[feature]
        raise DataError(f"user table has no feature {feature!r}")

    def row(self, i: int) -> dict[str, str]:
        out = {name: self.ordinal_specs[name].labels[c - 1] for name, c in ((k, int(v[i])) for k, v in self.ordinal.items())}
        out.update({name: v[i] for name, v in self.nominal.items()})
        return out

    def _check_length(self, name: str, values: np.ndarray) -> None:
        if values.shape != (self.n_users,):
            raise DataError(f"column {name!r} has shape {values.shape}, expected ({self.n_users},)")
