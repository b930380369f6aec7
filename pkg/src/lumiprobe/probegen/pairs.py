"""Paired under-occluder / open probes for the occlusion benchmark."""

from __future__ import annotations

import numpy as np

from ..sh.cubemap import project_cubemap_to_sh
from .scene import Box, Texture, derive_rng, generate_scene
from .tracer import RenderSettings, TraceScene
from .render import render_probe


def generate_probe_pair(seed: int, settings: RenderSettings | None = None):
    """Render one probe under a table slab and one 0.5 m beside it.

    Returns (under_light, open_light, scene) cubemaps in the same scene with
    identical orientation; the pair isolates the occlusion effect.
    """
    if settings is None:
        settings = RenderSettings(
            probe_face_res=32,
            direct_samples=9,
            indirect_samples=4,
            secondary_direct_samples=2,
            exposure_scale=200.0,
        )
    rng = derive_rng(seed, 808)
    scene = generate_scene(seed, window_prob=0.3)
    w, h, d = scene.room

    # drop a table slab near the middle of the room with clearance beside it
    fx = rng.uniform(0.8, min(1.4, w - 2.0))
    fz = rng.uniform(0.8, min(1.4, d - 1.4))
    top = rng.uniform(0.55, 0.95)
    cx = rng.uniform(0.6 + fx / 2, w - 1.2 - fx / 2)
    cz = rng.uniform(0.6 + fz / 2, d - 0.6 - fz / 2)
    table = Box(
        lo=np.array([cx - fx / 2, top - 0.06, cz - fz / 2]),
        hi=np.array([cx + fx / 2, top, cz + fz / 2]),
        texture=Texture.random(rng),
    )
    scene.occluders = list(scene.occluders) + [table]
    scene.validate()

    probe_y = rng.uniform(0.15, max(0.16, top - 0.2))
    under = np.array([cx, probe_y, cz])
    beside = np.array([min(cx + fx / 2 + 0.5, w - 0.05), probe_y, cz])
    tracer = TraceScene(scene)
    if tracer.point_inside_occluder(beside):
        beside = np.array([cx, probe_y, min(cz + fz / 2 + 0.5, d - 0.05)])
    rotation = np.eye(3)
    under_light, _ = render_probe(
        scene, under, rotation, settings, rng=derive_rng(seed, 809)
    )
    open_light, _ = render_probe(
        scene, beside, rotation, settings, rng=derive_rng(seed, 810)
    )
    return under_light, open_light, scene


def pair_degree0_contrast(under_light, open_light, l_max: int = 5):
    """Mean-channel DC coefficient difference (open minus under)."""
    under = project_cubemap_to_sh(under_light, l_max).data[:, 0].mean()
    open_ = project_cubemap_to_sh(open_light, l_max).data[:, 0].mean()
    return float(open_ - under), float(under), float(open_)
