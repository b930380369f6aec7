"""Cubemap probes: texel directions, exact solid angles, SH projection.

Face order is fixed as (px, nx, py, ny, pz, nz) in the probe-camera frame
(+x right, +y up, +z forward). Texel (row r, col c) of an N-texel face maps
to face-plane coordinates a = 2(c+0.5)/N - 1 (rightward) and
b = 2(r+0.5)/N - 1 (downward); see `face_directions` for the per-face axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import DEFAULT_L_MAX, SHCoeffs, eval_sh_basis, n_terms

FACE_NAMES = ("px", "nx", "py", "ny", "pz", "nz")


@dataclass(frozen=True)
class Cubemap:
    """Six float32 faces of linear radiance (or depth), shape (6, N, N, C)."""

    faces: np.ndarray

    def __post_init__(self):
        faces = np.asarray(self.faces, dtype=np.float32)
        if faces.ndim == 3:
            faces = faces[..., None]
        if faces.ndim != 4 or faces.shape[0] != 6 or faces.shape[1] != faces.shape[2]:
            raise ValueError("cubemap faces must have shape (6, N, N, C)")
        if faces.shape[3] not in (1, 3):
            raise ValueError("cubemap must have 1 or 3 channels")
        if faces.shape[1] < 1:
            raise ValueError("cubemap face resolution must be >= 1")
        if not np.all(np.isfinite(faces)):
            raise ValueError("cubemap texels must be finite")
        object.__setattr__(self, "faces", faces)

    @property
    def face_res(self) -> int:
        return self.faces.shape[1]

    @property
    def channels(self) -> int:
        return self.faces.shape[3]

    @classmethod
    def constant(cls, face_res: int, value, channels: int = 3) -> "Cubemap":
        value = np.broadcast_to(np.asarray(value, dtype=np.float32), (channels,))
        faces = np.tile(value, (6, face_res, face_res, 1))
        return cls(faces)


def directions_from_face_coords(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit directions for face-plane coordinates, shape (6, *a.shape, 3)."""
    o = np.ones_like(a)
    raw = np.stack(
        [
            np.stack([o, -b, -a], axis=-1),    # px
            np.stack([-o, -b, a], axis=-1),    # nx
            np.stack([a, o, b], axis=-1),      # py
            np.stack([a, -o, -b], axis=-1),    # ny
            np.stack([a, -b, o], axis=-1),     # pz
            np.stack([-a, -b, -o], axis=-1),   # nz
        ],
        axis=0,
    )
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


@lru_cache(maxsize=16)
def _face_grid(face_res: int):
    step = 2.0 / face_res
    centers = -1.0 + step * (np.arange(face_res, dtype=np.float64) + 0.5)
    a, b = np.meshgrid(centers, centers)  # a varies along columns
    return a, b  # b is the row coordinate (downward)


@lru_cache(maxsize=16)
def face_directions(face_res: int) -> np.ndarray:
    """Unit direction of every texel center, shape (6, N, N, 3), float64."""
    a, b = _face_grid(face_res)
    return directions_from_face_coords(a, b)


def _area_term(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Solid angle of the face-plane rectangle [0,u]x[0,v] as seen from the
    # cube center (unit half-edge): atan2(u*v, sqrt(u^2 + v^2 + 1)).
    return np.arctan2(u * v, np.sqrt(u * u + v * v + 1.0))


@lru_cache(maxsize=16)
def solid_angle_weights(face_res: int) -> np.ndarray:
    """Exact solid angle of each texel of one face, shape (N, N), float64.

    Identical for all six faces; the sum over six faces is 4*pi.
    """
    if face_res < 1:
        raise ValueError("face_res must be >= 1")
    step = 2.0 / face_res
    edges = -1.0 + step * np.arange(face_res + 1, dtype=np.float64)
    u, v = np.meshgrid(edges, edges)
    corner = _area_term(u, v)
    w = corner[1:, 1:] - corner[:-1, 1:] - corner[1:, :-1] + corner[:-1, :-1]
    return w


@lru_cache(maxsize=16)
def _projection_matrix(face_res: int, l_max: int) -> np.ndarray:
    # Solid-angle-weighted least-squares fit: c = G^-1 B^T W f with
    # B = basis at texel centers and W = texel solid angles. The raw
    # quadrature sum_t w(t) f(t) Y_i(t) is the leading term (G ~ I up to
    # O(1/N^2)); the Gram solve removes its discretization bias, so constant
    # maps and band-limited round trips reproduce exactly to float precision.
    dirs = face_directions(face_res).reshape(-1, 3)
    basis = eval_sh_basis(dirs, l_max)
    w = np.broadcast_to(
        solid_angle_weights(face_res), (6, face_res, face_res)
    ).reshape(-1)
    weighted = basis * w[:, None]
    gram = basis.T @ weighted
    return np.linalg.solve(gram, weighted.T).T


def project_cubemap_to_sh(cubemap: Cubemap, l_max: int = DEFAULT_L_MAX) -> SHCoeffs:
    """Fit SH coefficients to a cubemap (solid-angle-weighted least squares)."""
    mat = _projection_matrix(cubemap.face_res, l_max)
    texels = cubemap.faces.reshape(-1, cubemap.channels).astype(np.float64)
    return SHCoeffs(texels.T @ mat)


def reconstruct_cubemap_from_sh(coeffs: SHCoeffs, face_res: int) -> Cubemap:
    """Evaluate the band-limited signal at texel centers.

    Values may be negative (SH ringing); clamping is the caller's choice.
    """
    dirs = face_directions(face_res).reshape(-1, 3)
    basis = eval_sh_basis(dirs, coeffs.l_max)
    values = basis @ coeffs.data.T  # (6*N*N, channels)
    return Cubemap(values.reshape(6, face_res, face_res, coeffs.channels))


def synthesize_cubemap(fn, face_res: int, channels: int = 3) -> Cubemap:
    """Build a cubemap by evaluating fn(dirs) -> (M, channels) at texel centers."""
    dirs = face_directions(face_res).reshape(-1, 3)
    values = np.asarray(fn(dirs), dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    return Cubemap(values.reshape(6, face_res, face_res, channels))


def mean_luminance(cubemap: Cubemap) -> float:
    """Plain texel mean of the luminance across all six faces."""
    from .basis import LUMA_WEIGHTS

    faces = cubemap.faces.astype(np.float64)
    if cubemap.channels == 3:
        lum = faces @ LUMA_WEIGHTS
    else:
        lum = faces[..., 0]
    return float(lum.mean())


def total_solid_angle(face_res: int) -> float:
    return float(solid_angle_weights(face_res).sum() * 6.0)


def _check_total(face_res: int):
    total = total_solid_angle(face_res)
    assert math.isclose(total, 4.0 * math.pi, rel_tol=1e-9), total
