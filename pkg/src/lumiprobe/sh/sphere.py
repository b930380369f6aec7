"""Diffuse sphere renders from SH lighting, used by the relighting metrics."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .basis import SHCoeffs, eval_sh_basis
from .convolve import lambertian_convolve


@lru_cache(maxsize=8)
def sphere_normals(img_res: int):
    """Orthographic front-view sphere normals and coverage mask.

    Pixel (row 0, col 0) is the top-left; the visible hemisphere faces the
    probe camera (normals have negative z in the probe frame). Returns
    (normals (M, 3), mask (img_res, img_res) bool).
    """
    step = 2.0 / img_res
    u = -1.0 + step * (np.arange(img_res, dtype=np.float64) + 0.5)
    x, y = np.meshgrid(u, -u)  # y decreases with row index
    r2 = x * x + y * y
    mask = r2 <= 1.0
    z = -np.sqrt(np.maximum(0.0, 1.0 - r2))
    normals = np.stack([x[mask], y[mask], z[mask]], axis=-1)
    return normals, mask


def render_diffuse_sphere(coeffs: SHCoeffs, img_res: int, albedo=1.0):
    """Shade a Lambertian sphere under the given radiance SH.

    Pixel = albedo/pi * max(0, irradiance(normal)); negative SH-ringing
    irradiance is clamped here, at render time only.

    Returns (image (img_res, img_res, channels) float32, coverage mask bool).
    """
    if img_res < 4:
        raise ValueError("img_res must be >= 4")
    normals, mask = sphere_normals(img_res)
    irr = lambertian_convolve(coeffs)
    basis = eval_sh_basis(normals, coeffs.l_max)
    e = basis @ irr.data.T  # (M, channels)
    albedo = np.asarray(albedo, dtype=np.float64)
    if albedo.ndim == 0:
        albedo = np.full(coeffs.channels, float(albedo))
    if albedo.shape != (coeffs.channels,):
        raise ValueError("albedo must be scalar or one value per channel")
    shaded = np.maximum(0.0, e) * (albedo / np.pi)
    img = np.zeros((img_res, img_res, coeffs.channels), dtype=np.float32)
    img[mask] = shaded.astype(np.float32)
    return img, mask
