"""Numerical kernels shared by the generation stages.

Everything random goes through :class:`RngStream`, a Philox (counter-based)
generator keyed by ``(seed, stream_id)``. Stages never share a stream, so the
draws a stage sees do not depend on what other stages consumed or on how many
worker threads are used.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
from scipy import special

from .errors import DomainError, FactorizationError

_MASK64 = (1 << 64) - 1
_TWO_NEG53 = 2.0**-53

# Rational approximation of the normal quantile on the lower half (Acklam).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

PIVOT_TOL = 1e-12


def stream_id_for(step: str, *index: int | str) -> int:
    """Stable 64-bit stream id for a named pipeline step and entity index."""
    key = "/".join([step, *map(str, index)]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


class RngStream:
    """Seedable, single-owner random stream.

    Identical ``(seed, stream_id)`` pairs reproduce identical draws. Distinct
    stream ids select disjoint Philox keys, giving independent sequences.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @classmethod
    def for_step(cls, seed: int, step: str, *index: int | str) -> "RngStream":
        return cls(seed, stream_id_for(step, *index))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform_open(self, size=None) -> np.ndarray | float:
        """Uniform draws on the open interval (0, 1), never hitting either end."""
        bits = self._gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        return (bits + 0.5) * _TWO_NEG53

    def uniform(self, low: float, high: float, size=None) -> np.ndarray | float:
        return self._gen.uniform(low, high, size=size)

    def standard_gamma(self, shape) -> np.ndarray:
        return self._gen.standard_gamma(shape)

    def sample_without_replacement(self, population: int, k: int) -> np.ndarray:
        """``k`` distinct integers from ``range(population)``, sorted ascending."""
        if k == 0:
            return np.empty(0, dtype=np.int64)
        if k == population:
            return np.arange(population, dtype=np.int64)
        return np.sort(self._gen.choice(population, size=k, replace=False))


def std_normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays."""
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def _lower_quantile(q: np.ndarray) -> np.ndarray:
    # q in (0, 0.5]; returns x <= 0
    x = np.empty_like(q)
    tail = q < _P_LOW
    if tail.any():
        t = np.sqrt(-2.0 * np.log(q[tail]))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        x[tail] = num / den
    mid = ~tail
    if mid.any():
        s = q[mid] - 0.5
        r = s * s
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = num / den
    # one Halley step against the exact CDF
    err = 0.5 * special.erfc(-x / math.sqrt(2.0)) - q
    u = err * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def std_normal_inv_cdf(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    The upper half is handled by reflection so the refinement step always
    works on a small tail probability (``1 - p`` is exact for ``p >= 0.5``).
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("std_normal_inv_cdf requires 0 < p < 1")
    upper = arr > 0.5
    q = np.where(upper, 1.0 - arr, arr)
    x = _lower_quantile(np.atleast_1d(q)).reshape(q.shape)
    x = np.where(upper, -x, x)
    return float(x) if x.ndim == 0 else x


def validate_correlation(P, name: str = "correlation matrix") -> np.ndarray:
    """Check the structural correlation-matrix invariants and return ``P`` as an array.

    Positive definiteness is left to :func:`cholesky`.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise FactorizationError(f"{name} must be a non-empty square matrix, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise FactorizationError(f"{name} has non-finite entries")
    d = P.shape[0]
    for i in range(d):
        if abs(P[i, i] - 1.0) > 1e-12:
            raise FactorizationError(f"{name}: diagonal entry ({i},{i}) = {P[i, i]} is not 1")
        for j in range(d):
            if abs(P[i, j]) > 1.0:
                raise FactorizationError(f"{name}: entry ({i},{j}) = {P[i, j]} outside [-1, 1]")
    return P


def cholesky(P, *, tol: float = PIVOT_TOL) -> np.ndarray:
    """Lower-triangular ``F`` with ``F @ F.T == P``.

    Raises :class:`FactorizationError` naming the asymmetric entry or the
    first pivot that falls below ``tol``.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise FactorizationError(f"matrix must be square, got shape {P.shape}")
    n = P.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(P[i, j] - P[j, i]) > 1e-12:
                raise FactorizationError(
                    f"matrix is not symmetric: entry ({i},{j}) = {P[i, j]} but ({j},{i}) = {P[j, i]}"
                )
    F = np.zeros_like(P)
    for j in range(n):
        pivot = P[j, j] - F[j, :j] @ F[j, :j]
        if not pivot >= tol:
            raise FactorizationError(
                f"matrix is not positive definite: pivot {j} = {pivot:.6g} (< {tol:g})"
            )
        F[j, j] = math.sqrt(pivot)
        F[j + 1:, j] = (P[j + 1:, j] - F[j + 1:, :j] @ F[j, :j]) / F[j, j]
    return F


def gumbel_inv_cdf(u):
    """Standard Gumbel quantile, ``-ln(-ln(u))``."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("gumbel_inv_cdf requires 0 < u < 1")
    out = -np.log(-np.log(arr))
    return float(out) if out.ndim == 0 else out


def _check_alpha(alpha: np.ndarray) -> None:
    if alpha.shape[-1] < 2:
        raise DomainError("Dirichlet needs at least two categories")
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise DomainError("Dirichlet concentration parameters must be positive and finite")


def dirichlet_rows(alpha, rng: RngStream) -> np.ndarray:
    """One Dirichlet draw per row of ``alpha`` (shape ``(n, K)``) via normalized gammas."""
    alpha = np.asarray(alpha, dtype=float)
    _check_alpha(alpha)
    g = rng.standard_gamma(alpha)
    return g / g.sum(axis=-1, keepdims=True)


def dirichlet_sample(alpha, rng: RngStream) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1:
        raise DomainError("alpha must be a vector")
    return dirichlet_rows(alpha, rng)


def categorical_rows(theta, rng: RngStream) -> np.ndarray:
    """One categorical draw per row of ``theta``; returns 1-based category indices."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if np.any(theta < 0) or np.any(np.abs(theta.sum(axis=1) - 1.0) > 1e-9):
        raise DomainError("theta must lie on the probability simplex (within 1e-9)")
    cum = np.cumsum(theta, axis=1)
    u = rng.uniform_open(theta.shape[0]) * cum[:, -1]
    idx = (cum < u[:, None]).sum(axis=1)
    return np.minimum(idx, theta.shape[1] - 1) + 1


def categorical_sample(theta, rng: RngStream) -> int:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise DomainError("theta must be a vector")
    return int(categorical_rows(theta[None, :], rng)[0])
