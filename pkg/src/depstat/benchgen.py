"""Rotation-mixing benchmark for independence tests.

Two independent standardized sources are rotated by an angle ``theta``
(independent at 0, most dependent at pi/4, uncorrelated throughout), padded
with Gaussian noise up to dimension ``d`` and spun by independent Haar
orthogonal matrices so the dependence spreads across every coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError
from .rng import substream
from .sample import PairedSample

SUPPORTED_DIMS = (1, 2, 4)
THETA_SLACK = 1e-4

# two-Gaussian mixture: component sd 0.5, centres at +-sqrt(1 - 0.25) for unit variance
MIX_SD = 0.5
MIX_CENTRE = math.sqrt(1.0 - MIX_SD**2)


class SourceDensity(str, Enum):
    """Zero-mean, unit-variance univariate source laws."""

    TWO_GAUSSIAN_MIX = "two-gaussian-mix"
    LAPLACE = "laplace"
    UNIFORM = "uniform"
    STUDENT_T5 = "student-t5"
    EXP_CENTERED = "exp-centered"

    @classmethod
    def parse(cls, name) -> "SourceDensity":
        if isinstance(name, cls):
            return name
        key = str(name).strip()
        for density in cls:
            if key.lower() == density.value or key.upper() == density.name:
                return density
        raise ValueError(f"unknown density {name!r}; choose from {[d.value for d in cls]}")


RANDOM_DENSITY = "random"


def sample_source(density, n: int, rng: np.random.Generator) -> np.ndarray:
    density = SourceDensity.parse(density)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if density is SourceDensity.TWO_GAUSSIAN_MIX:
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return signs * MIX_CENTRE + MIX_SD * rng.standard_normal(n)
    if density is SourceDensity.LAPLACE:
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), n)
    if density is SourceDensity.UNIFORM:
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), n)
    if density is SourceDensity.STUDENT_T5:
        return rng.standard_t(5, n) * math.sqrt(3.0 / 5.0)
    return rng.standard_exponential(n) - 1.0


def rotate_pair(x, y, theta: float):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError(f"x and y lengths differ: {x.shape} vs {y.shape}")
    c, s = math.cos(theta), math.sin(theta)
    return c * x - s * y, s * x + c * y


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``d x d`` orthogonal matrix (QR of a Gaussian matrix, sign-corrected)."""
    if d < 1:
        raise InvalidInputError(f"d must be >= 1, got {d}")
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def embed_mix(x, y, d: int, rng: np.random.Generator) -> PairedSample:
    if d not in SUPPORTED_DIMS:
        raise InvalidInputError(f"d must be one of {SUPPORTED_DIMS}, got {d}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if d == 1:
        return PairedSample(x[:, None], y[:, None])
    n = x.shape[0]
    pad_x = rng.standard_normal((n, d - 1))
    pad_y = rng.standard_normal((n, d - 1))
    qx = random_orthogonal(d, rng)
    qy = random_orthogonal(d, rng)
    big_x = np.column_stack([x, pad_x]) @ qx.T
    big_y = np.column_stack([y, pad_y]) @ qy.T
    return PairedSample(big_x, big_y)


@dataclass(frozen=True)
class MixConfig:
    """One benchmark instance; a density of ``"random"`` picks a catalog entry per draw."""

    theta: float
    d: int
    n: int
    density_x: SourceDensity | str = SourceDensity.TWO_GAUSSIAN_MIX
    density_y: SourceDensity | str = SourceDensity.TWO_GAUSSIAN_MIX
    seed: int = 0

    def __post_init__(self):
        # a little headroom so that pi/4 typed to four decimals (0.7854) is accepted
        if not (0.0 <= self.theta <= math.pi / 4 + THETA_SLACK):
            raise InvalidInputError(f"theta must lie in [0, pi/4], got {self.theta}")
        if self.d not in SUPPORTED_DIMS:
            raise InvalidInputError(f"d must be one of {SUPPORTED_DIMS}, got {self.d}")
        if int(self.n) < 2:
            raise InvalidInputError(f"n must be >= 2, got {self.n}")
        for name in ("density_x", "density_y"):
            value = getattr(self, name)
            if value != RANDOM_DENSITY:
                object.__setattr__(self, name, SourceDensity.parse(value))


def _pick(density, rng):
    if density == RANDOM_DENSITY:
        catalog = list(SourceDensity)
        return catalog[int(rng.integers(len(catalog)))]
    return density


def generate_instance(config: MixConfig, rng: np.random.Generator | None = None) -> PairedSample:
    """Draw sources, rotate, pad and mix.

    Without an explicit ``rng`` each stage uses its own labelled substream of
    ``config.seed`` (``"source-x"``, ``"source-y"``, ``"mix"``).
    """
    if rng is None:
        rngs = {label: substream(config.seed, label) for label in ("density", "source-x", "source-y", "mix")}
    else:
        rngs = dict.fromkeys(("density", "source-x", "source-y", "mix"), rng)
    density_x = _pick(config.density_x, rngs["density"])
    density_y = _pick(config.density_y, rngs["density"])
    sx = sample_source(density_x, config.n, rngs["source-x"])
    sy = sample_source(density_y, config.n, rngs["source-y"])
    rx, ry = rotate_pair(sx, sy, config.theta)
    return embed_mix(rx, ry, config.d, rngs["mix"])
