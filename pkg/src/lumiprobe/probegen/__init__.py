"""Synthetic scene, probe, and dataset generation."""

from .dataset import DatasetConfig, build_dataset, render_scene_bundle
from .pairs import generate_probe_pair, pair_degree0_contrast
from .render import (
    ProbeRejected,
    place_camera,
    place_probe_camera,
    probe_is_occluded,
    render_probe,
    render_view,
    sample_probe_locations,
    surface_queries,
)
from .scene import Scene, Texture, derive_rng, generate_scene
from .tracer import Camera, CameraPlacementError, RenderSettings, TraceScene

__all__ = [
    "Camera",
    "CameraPlacementError",
    "DatasetConfig",
    "ProbeRejected",
    "RenderSettings",
    "Scene",
    "Texture",
    "TraceScene",
    "build_dataset",
    "derive_rng",
    "generate_probe_pair",
    "generate_scene",
    "pair_degree0_contrast",
    "place_camera",
    "place_probe_camera",
    "probe_is_occluded",
    "render_probe",
    "render_scene_bundle",
    "render_view",
    "sample_probe_locations",
    "surface_queries",
]
