"""Real spherical-harmonics lighting math."""

from .basis import (
    DEFAULT_L_MAX,
    LUMA_WEIGHTS,
    SHCoeffs,
    degree1_direction,
    eval_sh_basis,
    flip_sh_horizontal,
    flip_sign_mask,
    n_terms,
    sh_degree_of_index,
    sh_index,
)
from .convolve import lambertian_band_factors, lambertian_convolve
from .cubemap import (
    FACE_NAMES,
    Cubemap,
    face_directions,
    mean_luminance,
    project_cubemap_to_sh,
    reconstruct_cubemap_from_sh,
    solid_angle_weights,
    synthesize_cubemap,
    total_solid_angle,
)
from .probe_io import load_probe, read_pfm, save_probe, write_pfm
from .sphere import render_diffuse_sphere, sphere_normals

__all__ = [
    "DEFAULT_L_MAX",
    "LUMA_WEIGHTS",
    "SHCoeffs",
    "Cubemap",
    "FACE_NAMES",
    "degree1_direction",
    "eval_sh_basis",
    "face_directions",
    "flip_sh_horizontal",
    "flip_sign_mask",
    "lambertian_band_factors",
    "lambertian_convolve",
    "load_probe",
    "mean_luminance",
    "n_terms",
    "project_cubemap_to_sh",
    "read_pfm",
    "reconstruct_cubemap_from_sh",
    "render_diffuse_sphere",
    "save_probe",
    "sh_degree_of_index",
    "sh_index",
    "solid_angle_weights",
    "sphere_normals",
    "synthesize_cubemap",
    "total_solid_angle",
    "write_pfm",
]
