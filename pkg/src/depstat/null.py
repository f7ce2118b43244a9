"""Independence tests: permutation null and Gamma moment-matched null.

The permutation null relabels the y-sample by ``B`` uniform random
permutations, each drawn from its own substream addressed by
``(seed, "perm", index)``.  Bandwidths for the kernel statistics are
resolved once on the original marginals and held fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import stats as sps

from .errors import DegenerateNullError, InvalidInputError, UnsupportedStatisticError
from .rng import substream
from .sample import PairedSample
from .stats import Prepared, StatKind, StatValue, prepare


class NullModel(str, Enum):
    PERMUTATION = "permutation"
    GAMMA = "gamma"

    @classmethod
    def parse(cls, name) -> "NullModel":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown null model {name!r}; choose from {[m.value for m in cls]}") from None


@dataclass(frozen=True)
class TestConfig:
    """Settings for one independence test.

    ``bandwidth`` is ``None`` for the median heuristic or a fixed
    ``(sigma_x, sigma_y)`` pair.  ``gamma_permutations`` is the number of
    permuted statistics used to fit the Gamma null.
    """

    __test__ = False  # not a pytest class

    stat: StatKind = StatKind.HSIC_BIASED
    alpha: float = 0.05
    permutations: int = 200
    null_model: NullModel = NullModel.PERMUTATION
    bandwidth: Optional[tuple[float, float]] = None
    seed: int = 0
    gamma_permutations: int = 50

    def __post_init__(self):
        object.__setattr__(self, "stat", StatKind.parse(self.stat))
        object.__setattr__(self, "null_model", NullModel.parse(self.null_model))
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.permutations) < 1:
            raise InvalidInputError(f"permutations must be >= 1, got {self.permutations}")
        if int(self.gamma_permutations) < 2:
            raise InvalidInputError("gamma_permutations must be >= 2 to estimate a variance")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.bandwidth is not None:
            sx, sy = (float(s) for s in self.bandwidth)
            if not (sx > 0 and sy > 0 and math.isfinite(sx) and math.isfinite(sy)):
                raise InvalidInputError(f"fixed bandwidths must be positive, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", (sx, sy))
        object.__setattr__(self, "permutations", int(self.permutations))
        object.__setattr__(self, "gamma_permutations", int(self.gamma_permutations))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def bandwidth_policy(self) -> str:
        return "median" if self.bandwidth is None else "fixed"

    def with_seed(self, seed: int) -> "TestConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class NullEstimate:
    model: NullModel
    threshold: float
    values: np.ndarray = field(repr=False)
    gamma_shape: Optional[float] = None
    gamma_scale: Optional[float] = None

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def summary(self) -> dict:
        out = {"model": self.model.value, "threshold": self.threshold, "size": self.size}
        if self.model is NullModel.GAMMA:
            out["gamma_shape"] = self.gamma_shape
            out["gamma_scale"] = self.gamma_scale
        return out


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: StatValue
    threshold: float
    p_value: float
    reject: bool
    null: NullEstimate
    config: TestConfig
    bandwidths: Optional[tuple[float, float]] = None


def empirical_quantile(values, q: float) -> float:
    """Ceiling order statistic: the ``ceil(q * B)``-th smallest of ``B`` values."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise InvalidInputError("cannot take the quantile of an empty sequence")
    if not 0.0 < q < 1.0:
        raise InvalidInputError(f"q must lie in (0, 1), got {q}")
    # q * B is often a float a hair above an integer (0.95 * 200); snap before the ceiling
    position = q * v.size
    nearest = round(position)
    if abs(position - nearest) < 1e-9 * max(1.0, position):
        position = nearest
    index = min(max(math.ceil(position) - 1, 0), v.size - 1)
    return float(v[index])


def permutation_stream(seed: int, index: int, n: int) -> np.ndarray:
    return substream(seed, "perm", index).permutation(n)


def _prepare(sample: PairedSample, config: TestConfig) -> Prepared:
    return prepare(config.stat, sample, bandwidths=config.bandwidth)


def _null_values(prepared: Prepared, count: int, seed: int, permute=None) -> np.ndarray:
    n = prepared.n
    draw = permute if permute is not None else (lambda i: permutation_stream(seed, i, n))
    values = np.empty(count)
    for i in range(count):
        values[i] = prepared.value(draw(i))
    if not np.all(np.isfinite(values)):
        raise ArithmeticError("non-finite permutation statistic")
    return values


def _as_sample(sample, y=None) -> PairedSample:
    if isinstance(sample, PairedSample):
        return sample
    return PairedSample(sample, y)


def permutation_null(
    sample: PairedSample,
    config: TestConfig,
    *,
    permute: Optional[Callable[[int], np.ndarray]] = None,
    prepared: Optional[Prepared] = None,
) -> NullEstimate:
    """Statistic values under ``config.permutations`` random relabellings of y.

    ``permute(i)`` overrides the permutation drawn for index ``i`` (used to
    force degenerate permutations in tests).
    """
    sample = _as_sample(sample)
    prepared = prepared or _prepare(sample, config)
    values = _null_values(prepared, config.permutations, config.seed, permute)
    return NullEstimate(
        NullModel.PERMUTATION,
        empirical_quantile(values, 1.0 - config.alpha),
        values,
    )


def permutation_p_value(observed: float, values) -> float:
    """``(1 + #{null >= observed}) / (B + 1)``; ties count against rejection."""
    values = np.asarray(values, dtype=float)
    return (1.0 + np.count_nonzero(values >= observed)) / (values.size + 1.0)


def permutation_test(sample, config: TestConfig, *, permute=None) -> TestResult:
    sample = _as_sample(sample)
    prepared = _prepare(sample, config)
    observed = prepared.observed()
    null = permutation_null(sample, config, permute=permute, prepared=prepared)
    return TestResult(
        statistic=observed,
        threshold=null.threshold,
        p_value=permutation_p_value(observed.value, null.values),
        reject=bool(observed.value > null.threshold),
        null=null,
        config=config,
        bandwidths=prepared.bandwidths,
    )


def fit_gamma(values) -> tuple[float, float]:
    """Moment-matched Gamma ``(shape, scale)``: ``shape = m^2 / v``, ``scale = v / m``."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise InvalidInputError("need at least two null values to fit a Gamma law")
    mean = float(values.mean())
    var = float(values.var(ddof=1))
    if not (var > 0.0 and mean > 0.0):
        raise DegenerateNullError(f"degenerate null: mean {mean!r}, variance {var!r}")
    return mean * mean / var, var / mean


def gamma_null(values, alpha: float) -> NullEstimate:
    shape, scale = fit_gamma(values)
    threshold = float(sps.gamma.ppf(1.0 - alpha, shape, scale=scale))
    return NullEstimate(NullModel.GAMMA, threshold, np.asarray(values, dtype=float), shape, scale)


def gamma_test(sample, config: TestConfig, *, permute=None) -> TestResult:
    """HSIC test against a Gamma law fitted to ``config.gamma_permutations`` permuted statistics."""
    if config.stat is not StatKind.HSIC_BIASED:
        raise UnsupportedStatisticError(
            f"the Gamma null approximation targets biased HSIC, not {config.stat.value}"
        )
    sample = _as_sample(sample)
    prepared = _prepare(sample, config)
    observed = prepared.observed()
    values = _null_values(prepared, config.gamma_permutations, config.seed, permute)
    null = gamma_null(values, config.alpha)
    p_value = float(sps.gamma.sf(observed.value, null.gamma_shape, scale=null.gamma_scale))
    return TestResult(
        statistic=observed,
        threshold=null.threshold,
        p_value=min(max(p_value, 0.0), 1.0),
        reject=bool(observed.value > null.threshold),
        null=null,
        config=config,
        bandwidths=prepared.bandwidths,
    )


def run_test(sample, config: TestConfig) -> TestResult:
    """Dispatch on ``config.null_model``."""
    if config.null_model is NullModel.GAMMA:
        return gamma_test(sample, config)
    return permutation_test(sample, config)
