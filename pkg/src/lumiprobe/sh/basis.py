"""Real spherical-harmonics basis evaluation and coefficient containers.

Convention (frozen, see docs/wire.md):
  * real orthonormal basis, no Condon-Shortley phase;
  * flat index i = l*(l+1) + m;
  * directions live in the probe-camera frame (+x right, +y up, +z forward);
  * the zonal axis of the m=0 harmonics is the probe *up* axis (+y), so the
    band-1 triplet (c_{1,1}, c_{1,0}, c_{1,-1}) reads back as an (x, y, z)
    direction in the probe frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_L_MAX = 5

# Rec. 709 luma weights, used wherever a scalar "luminance" of RGB data is
# needed (degree-1 direction, probe intensity filter).
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


def n_terms(l_max: int) -> int:
    return (l_max + 1) ** 2


def sh_index(l: int, m: int) -> int:
    """Flat index of the (l, m) harmonic."""
    if abs(m) > l:
        raise ValueError(f"invalid SH index (l={l}, m={m})")
    return l * (l + 1) + m


def sh_degree_of_index(i: int) -> int:
    return int(math.isqrt(i))


def eval_sh_basis(dirs: np.ndarray, l_max: int = DEFAULT_L_MAX) -> np.ndarray:
    """Evaluate the real SH basis at unit directions.

    Args:
        dirs: probe-frame unit vectors, shape (..., 3). NaNs are rejected;
            non-unit vectors are normalized.
        l_max: band limit, >= 0.

    Returns:
        Basis values, shape (..., (l_max+1)^2), float64, index i = l(l+1)+m.
    """
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    dirs = np.asarray(dirs, dtype=np.float64)
    if dirs.shape[-1] != 3:
        raise ValueError("directions must have a trailing dimension of 3")
    if not np.all(np.isfinite(dirs)):
        raise ValueError("direction contains NaN/Inf")
    norms = np.linalg.norm(dirs, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("zero-length direction")
    dirs = dirs / norms

    lead = dirs.shape[:-1]
    flat = dirs.reshape(-1, 3)
    # Basis-internal frame: polar axis Z = probe up (+y), X = probe right,
    # Y = probe forward. This places the m=0 zonal axis along +y.
    x = flat[:, 0]
    y = flat[:, 2]
    z = flat[:, 1]

    n = flat.shape[0]
    out = np.empty((n, n_terms(l_max)), dtype=np.float64)

    # Scaled associated Legendre Q_l^m(z) = P_l^m(z) / sin^m(theta), without
    # the Condon-Shortley phase; the sin^m factor lives in (cm, sm) below,
    # built by the angle-addition recurrence on the in-plane components
    # (x, y) = sin(theta) * (cos phi, sin phi).
    cm = np.ones(n)
    sm = np.zeros(n)

    p_mm = 1.0  # (2m-1)!!
    for m in range(l_max + 1):
        if m == 0:
            p_prev = np.ones(n)  # Q_0^0
        else:
            p_mm = p_mm * (2 * m - 1)
            p_prev = np.full(n, float(p_mm))  # Q_m^m = (2m-1)!!
            cm, sm = cm * x - sm * y, sm * x + cm * y
        p_curr = p_prev
        for l in range(m, l_max + 1):
            k = math.sqrt(
                (2 * l + 1)
                / (4.0 * math.pi)
                * math.factorial(l - m)
                / math.factorial(l + m)
            )
            if m == 0:
                out[:, sh_index(l, 0)] = k * p_curr
            else:
                km = math.sqrt(2.0) * k
                out[:, sh_index(l, m)] = km * cm * p_curr
                out[:, sh_index(l, -m)] = km * sm * p_curr
            if l < l_max:
                if l == m:
                    p_next = z * (2 * l + 1) * p_curr
                else:
                    p_next = (
                        z * (2 * l + 1) * p_curr - (l + m) * p_prev
                    ) / (l - m + 1)
                p_prev, p_curr = p_curr, p_next

    return out.reshape(*lead, n_terms(l_max))


# Sign of each basis function under the mirror x -> -x (probe frame).
# Derived once from the projected-mirror oracle (tests/test_sh_flip.py) and
# frozen: +1 for m >= 0 with even m, -1 for odd positive m, and the opposite
# parity for the sin branch (m < 0).
def flip_sign_mask(l_max: int = DEFAULT_L_MAX) -> np.ndarray:
    signs = np.empty(n_terms(l_max))
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            if m >= 0:
                signs[sh_index(l, m)] = 1.0 if m % 2 == 0 else -1.0
            else:
                signs[sh_index(l, m)] = -1.0 if (-m) % 2 == 0 else 1.0
    return signs


@dataclass(frozen=True)
class SHCoeffs:
    """Per-channel real SH coefficient vectors.

    data has shape (channels, (l_max+1)^2); channel count is 3 for radiance
    probes and 1 for depth probes.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("SHCoeffs.data must be 2-D (channels, terms)")
        root = math.isqrt(data.shape[1])
        if root * root != data.shape[1]:
            raise ValueError(f"{data.shape[1]} is not a square SH term count")
        if not np.all(np.isfinite(data)):
            raise ValueError("SH coefficients must be finite")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def l_max(self) -> int:
        return math.isqrt(self.data.shape[1]) - 1

    @property
    def terms(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, channels: int, l_max: int = DEFAULT_L_MAX) -> "SHCoeffs":
        return cls(np.zeros((channels, n_terms(l_max))))

    def band(self, l: int) -> np.ndarray:
        """Coefficients of band l, shape (channels, 2l+1)."""
        return self.data[:, l * l : (l + 1) * (l + 1)]

    def luminance(self) -> np.ndarray:
        """Scalar-channel coefficient vector (Rec. 709 luma for RGB)."""
        if self.channels == 1:
            return self.data[0]
        if self.channels == 3:
            return LUMA_WEIGHTS @ self.data
        return self.data.mean(axis=0)


def flip_sh_horizontal(coeffs: SHCoeffs) -> SHCoeffs:
    """Mirror the encoded environment across the camera's vertical plane."""
    return SHCoeffs(coeffs.data * flip_sign_mask(coeffs.l_max)[None, :])


def degree1_direction(coeffs: SHCoeffs, eps: float = 1e-12):
    """Dominant-light direction from the band-1 luminance coefficients.

    Returns a unit probe-frame vector, or None when the band-1 luminance
    vector is (numerically) zero.
    """
    lum = coeffs.luminance()
    v = np.array(
        [lum[sh_index(1, 1)], lum[sh_index(1, 0)], lum[sh_index(1, -1)]]
    )
    norm = np.linalg.norm(v)
    if norm <= eps:
        return None
    return v / norm
