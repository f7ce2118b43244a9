"""Dependence statistics: distance covariance/correlation, HSIC, Feuerverger's rank statistic.

All statistics reduce to an O(n^2) contraction ``sum_ij A_ij B_ij`` of two
precomputed matrices.  Relabelling the y-sample by a permutation only
re-indexes ``B``, so :func:`prepare` builds the matrices once and
:meth:`Prepared.value` evaluates the statistic under any permutation of the
y rows.  Permutation nulls use that path; the public one-shot functions are
thin wrappers around it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._kernels import identity, permuted_inner
from .errors import InsufficientSampleError, InvalidInputError, UnsupportedDimensionError
from .sample import (
    PairedSample,
    as_matrix,
    gaussian_gram,
    median_heuristic,
    pairwise_distances,
    rank_normal_scores,
)

NEGATIVE_SLACK = 1e-12


class StatKind(str, Enum):
    DCOV = "dcov"
    DCOR = "dcor"
    HSIC_BIASED = "hsic"
    HSIC_UNBIASED = "hsic-u"
    FEUERVERGER_T1 = "feuerverger"

    @property
    def uses_kernels(self) -> bool:
        return self in (StatKind.HSIC_BIASED, StatKind.HSIC_UNBIASED)

    @property
    def nonnegative(self) -> bool:
        return self is not StatKind.HSIC_UNBIASED

    @classmethod
    def parse(cls, name) -> "StatKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip()
        for kind in cls:
            if key.lower() == kind.value or key.upper() == kind.name:
                return kind
        raise ValueError(f"unknown statistic {name!r}; choose from {[k.value for k in cls]}")


@dataclass(frozen=True)
class StatValue:
    value: float
    kind: StatKind
    n: int

    def __float__(self):
        return self.value


def double_center(d: np.ndarray) -> np.ndarray:
    """``H d H`` with ``H = I - 11'/n``."""
    row = d.mean(axis=0)
    return d - row[None, :] - row[:, None] + row.mean()


def _clamp_nonnegative(value: float, scale: float) -> float:
    if value >= 0.0:
        return value
    if value >= -NEGATIVE_SLACK * max(1.0, scale):
        return 0.0
    raise ArithmeticError(f"nonnegative statistic evaluated to {value!r}")


def _check_perm(perm, n: int) -> np.ndarray:
    if perm is None:
        return identity(n)
    perm = np.asarray(perm, dtype=np.intp)
    if perm.shape != (n,):
        raise InvalidInputError(f"permutation must have length {n}, got shape {perm.shape}")
    return perm


class Prepared:
    """A statistic bound to a sample, evaluable under permutations of the y rows."""

    kind: StatKind
    n: int
    bandwidths: tuple[float, float] | None = None

    def value(self, perm=None) -> float:
        raise NotImplementedError

    def observed(self) -> StatValue:
        return StatValue(self.value(), self.kind, self.n)


class _DistanceCovariance(Prepared):
    def __init__(self, dx, dy, kind=StatKind.DCOV, factor=1.0):
        self.kind = kind
        self.n = dx.shape[0]
        self.a = double_center(dx)
        self.b = double_center(dy)
        self.factor = factor
        n2 = float(self.n) ** 2
        self.var_x = permuted_inner(self.a, self.a, identity(self.n)) / n2
        self.var_y = permuted_inner(self.b, self.b, identity(self.n)) / n2

    def dcov(self, perm=None) -> float:
        perm = _check_perm(perm, self.n)
        raw = permuted_inner(self.a, self.b, perm) / float(self.n) ** 2
        return _clamp_nonnegative(raw, math.sqrt(max(self.var_x * self.var_y, 0.0)))

    def value(self, perm=None) -> float:
        return self.factor * self.dcov(perm)


class _DistanceCorrelation(_DistanceCovariance):
    def __init__(self, dx, dy):
        super().__init__(dx, dy, kind=StatKind.DCOR)
        self.denominator = math.sqrt(max(self.var_x, 0.0) * max(self.var_y, 0.0))

    def value(self, perm=None) -> float:
        if self.denominator <= 0.0:
            _check_perm(perm, self.n)
            return 0.0
        return min(self.dcov(perm) / self.denominator, 1.0)


class _BiasedHSIC(Prepared):
    kind = StatKind.HSIC_BIASED

    def __init__(self, k, l, bandwidths=None):
        self.n = k.shape[0]
        self.kc = double_center(k)
        self.l = np.ascontiguousarray(l, dtype=float)
        self.bandwidths = bandwidths

    def value(self, perm=None) -> float:
        perm = _check_perm(perm, self.n)
        raw = permuted_inner(self.kc, self.l, perm) / float(self.n) ** 2
        return _clamp_nonnegative(raw, 1.0)


class _UnbiasedHSIC(Prepared):
    kind = StatKind.HSIC_UNBIASED

    def __init__(self, k, l, bandwidths=None):
        n = k.shape[0]
        if n < 4:
            raise InsufficientSampleError(f"unbiased HSIC needs n >= 4, got {n}")
        self.n = n
        self.k = u_center(k)
        self.l = u_center(l)
        self.bandwidths = bandwidths

    def value(self, perm=None) -> float:
        perm = _check_perm(perm, self.n)
        # the inner product of U-centered Grams equals the distinct-tuple form;
        # centering first avoids cancellation between its three terms
        return permuted_inner(self.k, self.l, perm) / (self.n * (self.n - 3.0))


def u_center(k: np.ndarray) -> np.ndarray:
    """U-centered copy of a Gram matrix (zero diagonal), ``n >= 4``."""
    k = np.array(k, dtype=float)
    n = k.shape[0]
    np.fill_diagonal(k, 0.0)
    rows = k.sum(axis=1)
    out = k - rows[:, None] / (n - 2) - rows[None, :] / (n - 2) + rows.sum() / ((n - 1) * (n - 2))
    np.fill_diagonal(out, 0.0)
    return out


def _check_gram_pair(k, l):
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    for name, m in (("k", k), ("l", l)):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"{name} must be a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError(f"{name} contains non-finite entries")
        if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14):
            raise InvalidInputError(f"{name} must be symmetric")
    if k.shape != l.shape:
        raise InvalidInputError(f"Gram matrices differ in size: {k.shape} vs {l.shape}")
    return k, l


def _univariate(a, name):
    m = as_matrix(a, name)
    if m.shape[1] != 1:
        raise UnsupportedDimensionError(
            f"the Feuerverger statistic is univariate only; {name} has {m.shape[1]} columns"
        )
    return m[:, 0]


def resolve_bandwidths(dx, dy, bandwidths=None) -> tuple[float, float]:
    """Fixed ``(sigma_x, sigma_y)`` if given, otherwise one median heuristic per side."""
    if bandwidths is None:
        return median_heuristic(dx), median_heuristic(dy)
    sx, sy = (float(s) for s in bandwidths)
    return sx, sy


def prepare(kind, x, y=None, bandwidths=None) -> Prepared:
    """Bind statistic ``kind`` to the paired sample ``(x, y)``.

    ``x`` may also be a :class:`PairedSample`, in which case ``y`` is omitted.
    ``bandwidths`` only matters for the HSIC statistics; ``None`` selects the
    per-variable median heuristic.
    """
    kind = StatKind.parse(kind)
    sample = x if isinstance(x, PairedSample) else PairedSample(x, y)
    if kind is StatKind.FEUERVERGER_T1:
        sx = rank_normal_scores(_univariate(sample.x, "x"))
        sy = rank_normal_scores(_univariate(sample.y, "y"))
        return _DistanceCovariance(
            pairwise_distances(sx), pairwise_distances(sy), kind=kind, factor=math.pi**2
        )
    dx = pairwise_distances(sample.x)
    dy = pairwise_distances(sample.y)
    if kind is StatKind.DCOV:
        return _DistanceCovariance(dx, dy)
    if kind is StatKind.DCOR:
        return _DistanceCorrelation(dx, dy)
    sigmas = resolve_bandwidths(dx, dy, bandwidths)
    k = gaussian_gram(dx, sigmas[0])
    l = gaussian_gram(dy, sigmas[1])
    if kind is StatKind.HSIC_BIASED:
        return _BiasedHSIC(k, l, sigmas)
    return _UnbiasedHSIC(k, l, sigmas)


def dcov_v2(x, y) -> StatValue:
    """Squared distance covariance V-statistic of ``x`` (n x p) and ``y`` (n x q)."""
    return prepare(StatKind.DCOV, x, y).observed()


def dcor_r2(x, y) -> StatValue:
    """Squared distance correlation; 0 when either marginal distance variance vanishes."""
    return prepare(StatKind.DCOR, x, y).observed()


def hsic_biased(k, l) -> StatValue:
    """Biased (V-statistic) HSIC from two Gram matrices: ``tr(K H L H) / n^2``."""
    k, l = _check_gram_pair(k, l)
    return _BiasedHSIC(k, l).observed()


def hsic_unbiased(k, l) -> StatValue:
    """Unbiased HSIC: every term averaged over pairwise-distinct index tuples.

    Can be negative.  Requires ``n >= 4``.
    """
    k, l = _check_gram_pair(k, l)
    return _UnbiasedHSIC(k, l).observed()


def feuerverger_t1(x, y) -> StatValue:
    """pi^2 times the distance covariance of the rank normal scores of univariate x and y."""
    return prepare(StatKind.FEUERVERGER_T1, x, y).observed()


def hsic(x, y, bandwidths=None, unbiased: bool = False) -> StatValue:
    """HSIC of raw samples with Gaussian kernels; median-heuristic bandwidths by default."""
    kind = StatKind.HSIC_UNBIASED if unbiased else StatKind.HSIC_BIASED
    return prepare(kind, x, y, bandwidths=bandwidths).observed()
