"""Sample containers and the matrix primitives every statistic consumes.

Distances and Gram matrices are plain ``(n, n)`` float arrays; the helpers
here only guarantee their construction (symmetry, exact zero diagonal).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .errors import InvalidBandwidthError, InvalidInputError


def as_matrix(a, name: str = "points") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float array (1-D input becomes one column)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    elif arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise InvalidInputError(f"{name} has no columns")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class PairedSample:
    """``n`` paired observations ``(x_i, y_i)`` with ``x`` in R^p and ``y`` in R^q."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        y = as_matrix(self.y, "y")
        if x.shape[0] != y.shape[0]:
            raise InvalidInputError(
                f"x and y must have the same number of rows, got {x.shape[0]} and {y.shape[0]}"
            )
        if x.shape[0] < 2:
            raise InvalidInputError(f"need at least 2 observations, got {x.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.y.shape[1]

    def permute_y(self, perm) -> "PairedSample":
        return PairedSample(self.x, self.y[np.asarray(perm)])


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distance matrix between the rows of ``points``.

    Computed from coordinate differences rather than the Gram-expansion
    ``|a|^2 + |b|^2 - 2ab`` so that the diagonal is exactly zero and small
    distances keep full relative precision.
    """
    pts = as_matrix(points)
    if pts.shape[0] < 2:
        raise InvalidInputError("need at least 2 points")
    n, dim = pts.shape
    if dim == 1:
        col = pts[:, 0]
        return np.abs(col[:, None] - col[None, :])
    sq = np.zeros((n, n))
    for j in range(dim):
        col = pts[:, j]
        diff = col[:, None] - col[None, :]
        sq += diff * diff
    return np.sqrt(sq)


def median_heuristic(d) -> float:
    """Bandwidth equal to the median off-diagonal distance.

    Falls back to the smallest nonzero distance when the median is zero, and
    to 1.0 when every distance is zero (constant sample).
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[1] != n or n < 2:
        raise InvalidInputError(f"expected a square distance matrix with n >= 2, got {d.shape}")
    upper = d[np.triu_indices(n, k=1)]
    sigma = float(np.median(upper))
    if sigma > 0:
        return sigma
    positive = upper[upper > 0]
    if positive.size:
        return float(positive.min())
    return 1.0


def gaussian_gram(d, sigma: float) -> np.ndarray:
    """Gaussian kernel matrix ``exp(-d**2 / (2 sigma**2))`` from distances ``d``."""
    sigma = float(sigma)
    if not (sigma > 0 and np.isfinite(sigma)):
        raise InvalidBandwidthError(f"bandwidth must be a positive finite number, got {sigma}")
    d = np.asarray(d, dtype=float)
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def rank_normal_scores(v) -> np.ndarray:
    """Approximate normal scores ``Phi^-1((rank - 3/8) / (n + 1/4))``.

    Ties share their midrank, so a constant input maps to a constant output.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1:
        raise InvalidInputError(f"expected a 1-D sequence, got shape {v.shape}")
    n = v.shape[0]
    if n < 2:
        raise InvalidInputError("need at least 2 values")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("input contains non-finite entries")
    ranks = rankdata(v, method="average")
    return ndtri((ranks - 0.375) / (n + 0.25))
