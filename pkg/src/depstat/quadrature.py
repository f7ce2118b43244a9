"""Characteristic-function route to HSIC, by direct numerical integration.

Test-support oracle: it integrates the weighted squared distance between the
empirical joint characteristic function and the product of the empirical
marginals, with the weight being the spectral measure of the product of the
two Gaussian kernels.  Agreement with :func:`depstat.stats.hsic_biased`
certifies the kernel closed form independently.  Only practical for small n.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .errors import InvalidBandwidthError, InvalidInputError, OracleFailureError

TRUNCATION = 12.0


def _ecf_gap_squared(s, t, x, y):
    """``|f_xy(s, t) - f_x(s) f_y(t)|^2`` for the empirical characteristic functions."""
    ex = np.exp(1j * s * x)
    ey = np.exp(1j * t * y)
    joint = np.mean(ex * ey)
    gap = joint - np.mean(ex) * np.mean(ey)
    return gap.real * gap.real + gap.imag * gap.imag


def charfn_hsic_oracle(x, y, sigma_x: float, sigma_y: float, *, epsabs: float = 1e-8) -> float:
    """Integrate the weighted characteristic-function gap over a truncated box.

    The weight ``(sx sy / 2 pi) exp(-sx^2 s^2 / 2 - sy^2 t^2 / 2)`` is the
    inverse Fourier transform of ``k(a) l(b)``, so the integral equals the
    biased HSIC for the same bandwidths.  Integration runs over
    ``|s| <= 12 / sigma_x``, ``|t| <= 12 / sigma_y``.

    Raises
    ------
    OracleFailureError
        If the adaptive quadrature reports non-convergence or an error
        estimate above ``1e-7``.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size < 1:
        raise InvalidInputError("x and y must be non-empty univariate samples of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("samples contain non-finite entries")
    sigma_x = float(sigma_x)
    sigma_y = float(sigma_y)
    if not (sigma_x > 0 and sigma_y > 0):
        raise InvalidBandwidthError("bandwidths must be positive")

    norm = sigma_x * sigma_y / (2.0 * math.pi)

    def integrand(t, s):
        weight = norm * math.exp(-0.5 * (sigma_x * s) ** 2 - 0.5 * (sigma_y * t) ** 2)
        return weight * _ecf_gap_squared(s, t, x, y)

    s_max = TRUNCATION / sigma_x
    t_max = TRUNCATION / sigma_y
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.dblquad(
                integrand, -s_max, s_max, -t_max, t_max, epsabs=epsabs, epsrel=0.0
            )
        except integrate.IntegrationWarning as exc:
            raise OracleFailureError(f"quadrature did not converge: {exc}") from exc
    if not np.isfinite(value) or error > 1e-7:
        raise OracleFailureError(f"quadrature error estimate {error:.3g} exceeds 1e-7")
    return float(value)
