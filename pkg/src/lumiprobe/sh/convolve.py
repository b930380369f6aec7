"""Lambertian (clamped-cosine) convolution of radiance SH."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .basis import SHCoeffs, sh_degree_of_index, n_terms


@lru_cache(maxsize=32)
def lambertian_band_factors(l_max: int) -> tuple:
    """Band factors A_l turning radiance SH into irradiance SH.

    A_0 = pi, A_1 = 2*pi/3, odd bands >= 3 vanish, and for even l >= 2
    A_l = 2*pi * (-1)^(l/2-1) / ((l+2)(l-1)) * l! / (2^l * ((l/2)!)^2).
    Validated against direct quadrature of the clamped-cosine kernel in the
    test suite.
    """
    factors = []
    for l in range(l_max + 1):
        if l == 0:
            a = math.pi
        elif l == 1:
            a = 2.0 * math.pi / 3.0
        elif l % 2 == 1:
            a = 0.0
        else:
            half = l // 2
            a = (
                2.0
                * math.pi
                * (-1.0) ** (half - 1)
                / ((l + 2) * (l - 1))
                * math.factorial(l)
                / (2.0**l * math.factorial(half) ** 2)
            )
        factors.append(a)
    return tuple(factors)


@lru_cache(maxsize=32)
def _per_index_factors(l_max: int) -> np.ndarray:
    bands = lambertian_band_factors(l_max)
    return np.array([bands[sh_degree_of_index(i)] for i in range(n_terms(l_max))])


def lambertian_convolve(coeffs: SHCoeffs) -> SHCoeffs:
    """Scale each band of radiance SH by the clamped-cosine kernel factor."""
    return SHCoeffs(coeffs.data * _per_index_factors(coeffs.l_max)[None, :])
