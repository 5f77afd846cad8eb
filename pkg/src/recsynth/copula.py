"""Correlated ordinal features from a Gaussian copula.

Latent standard normals are drawn with the configured correlation and each
column is cut into ordered categories at fixed thresholds. Category ``k``
(1-based) covers the half-open latent interval ``[cutoff[k-2], cutoff[k-1])``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .primitives import RngStream, cholesky, std_normal_cdf, std_normal_inv_cdf, validate_correlation


@dataclass(frozen=True)
class OrdinalFeatureSpec:
    name: str
    labels: tuple[str, ...]
    cutoffs: tuple[float, ...]
    # optional numeric range [lo, hi) per label, used for the continuous companion value
    value_ranges: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        cutoffs = tuple(float(c) for c in self.cutoffs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cutoffs", cutoffs)
        if len(labels) < 2:
            raise ConfigError(f"ordinal feature {self.name!r}: needs at least 2 labels")
        if len(set(labels)) != len(labels):
            raise ConfigError(f"ordinal feature {self.name!r}: labels must be unique")
        if len(cutoffs) != len(labels) - 1:
            raise ConfigError(
                f"ordinal feature {self.name!r}: expected {len(labels) - 1} cutoffs, got {len(cutoffs)}"
            )
        if not np.all(np.isfinite(cutoffs)) or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise ConfigError(f"ordinal feature {self.name!r}: cutoffs must be finite and strictly increasing")
        if self.value_ranges is not None:
            ranges = tuple((float(lo), float(hi)) for lo, hi in self.value_ranges)
            if len(ranges) != len(labels) or any(hi <= lo for lo, hi in ranges):
                raise ConfigError(f"ordinal feature {self.name!r}: value_ranges must give one [lo, hi) per label")
            object.__setattr__(self, "value_ranges", ranges)

    @property
    def cardinality(self) -> int:
        return len(self.labels)

    def label_of(self, codes) -> np.ndarray:
        return np.asarray(self.labels, dtype=object)[np.asarray(codes) - 1]


def sample_latents(P, n_users: int, rng: RngStream) -> np.ndarray:
    """Draw an ``(n_users, d)`` matrix of correlated standard normals.

    Uniforms are pushed through the normal quantile to get independent
    normals ``Z``, which are then mixed by the Cholesky factor ``F`` of ``P``
    so that each row is ``F @ z`` and has covariance ``P``.
    """
    P = validate_correlation(P)
    F = cholesky(P)
    if n_users < 0:
        raise ConfigError("n_users must be non-negative")
    Z = std_normal_inv_cdf(rng.uniform_open((n_users, P.shape[0]))) if n_users else np.empty((0, P.shape[0]))
    return Z @ F.T


def bin_probabilities(spec: OrdinalFeatureSpec) -> np.ndarray:
    edges = std_normal_cdf(np.array(spec.cutoffs))
    return np.diff(np.concatenate(([0.0], np.atleast_1d(edges), [1.0])))


def discretize(latent, spec: OrdinalFeatureSpec) -> np.ndarray:
    """Map latent values to 1-based ordinal codes."""
    return np.searchsorted(np.array(spec.cutoffs), np.asarray(latent, dtype=float), side="right") + 1


def numeric_values(codes, spec: OrdinalFeatureSpec, rng: RngStream) -> np.ndarray:
    """Continuous companion value drawn uniformly inside each code's range."""
    if spec.value_ranges is None:
        raise ConfigError(f"ordinal feature {spec.name!r} has no value_ranges")
    ranges = np.array(spec.value_ranges)
    codes = np.asarray(codes)
    lo, hi = ranges[codes - 1, 0], ranges[codes - 1, 1]
    return lo + (hi - lo) * rng.uniform_open(codes.shape)
