"""Dense matrix core: SVD with a fixed sign convention, norms, centering,
and the empirical cross-covariance between inputs and aligned records.

All functions are pure and never mutate their arguments; matrices are
64-bit float, row-major, with rows as samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# A singular value sigma[i] counts toward the numerical rank iff
# sigma[i] > RANK_RTOL * sigma[0].
RANK_RTOL = 1e-10


def as_matrix(a, name="matrix"):
    """Validate and return *a* as a finite 2-d float64 array."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise InvalidInput(f"{name} must be 2-d, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise InvalidInput(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(out)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return out


def _as_index_map(pi, n, m=None):
    """Accept an Assignment or a plain index array; return int64 indices of length n."""
    idx = np.asarray(getattr(pi, "map", pi))
    if idx.ndim != 1 or idx.shape[0] != n:
        raise InvalidInput(f"assignment must map all {n} rows, got shape {idx.shape}")
    if not np.issubdtype(idx.dtype, np.integer):
        raise InvalidInput("assignment indices must be integers")
    idx = idx.astype(np.int64)
    if idx.min() < 0 or (m is not None and idx.max() >= m):
        raise InvalidInput("assignment index out of range")
    return idx


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD a = u @ diag(sigma) @ v.T with sigma sorted descending.

    u has orthonormal columns (rows x r), v likewise (cols x r),
    r = min(rows, cols). The sign of each singular pair is fixed so the
    largest-magnitude entry of every column of u is positive (first such
    entry on ties), which makes repeated runs reproducible.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        """Numerical rank: count of sigma[i] > RANK_RTOL * sigma[0]."""
        if self.sigma.size == 0 or self.sigma[0] <= 0.0:
            return 0
        return int(np.sum(self.sigma > RANK_RTOL * self.sigma[0]))

    def reconstruct(self):
        """Multiply the factors back together."""
        return (self.u * self.sigma) @ self.v.T


def _fix_signs(u, v):
    """Flip singular-vector pairs so each u column has a positive peak entry."""
    peak = np.abs(u).argmax(axis=0)
    flip = u[peak, np.arange(u.shape[1])] < 0.0
    u = u.copy()
    v = v.copy()
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return u, v


def svd(a):
    """Thin SVD of *a* with the deterministic sign convention.

    Raises InvalidInput on non-finite input.
    """
    a = as_matrix(a, "a")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    u, v = _fix_signs(u, vt.T)
    return SvdResult(u=u, sigma=s, v=v)


def cross_covariance(x, z, pi):
    """Empirical cross-covariance sum_i x_i z_{pi(i)}^T (an unnormalized sum).

    x is n x d, z is m x d', pi maps [n] into [m]. The raw sum is kept
    because every downstream use (singular directions, assignment argmax)
    is invariant to a positive rescaling.
    """
    x = as_matrix(x, "x")
    z = as_matrix(z, "z")
    idx = _as_index_map(pi, x.shape[0], z.shape[0])
    return x.T @ z[idx]


def center_columns(x):
    """Subtract per-column means; returns (centered, means)."""
    x = as_matrix(x, "x")
    means = x.mean(axis=0)
    return x - means, means


def spectral_norm(a):
    """Largest singular value."""
    a = as_matrix(a, "a")
    return float(np.linalg.svd(a, compute_uv=False)[0])


def frobenius_norm(a):
    """sqrt of the sum of squared entries."""
    a = as_matrix(a, "a")
    return float(np.sqrt(np.sum(a * a)))


def singular_value_sum(a):
    """Sum of all singular values (the nuclear norm)."""
    a = as_matrix(a, "a")
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def numerical_rank(a):
    """Rank of *a* under the RANK_RTOL relative threshold."""
    s = np.linalg.svd(as_matrix(a, "a"), compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))
