"""Camera/probe rendering on top of the tracer, plus probe placement."""

from __future__ import annotations

import math

import numpy as np

from ..sh.cubemap import Cubemap, face_directions
from .scene import Scene, derive_rng
from .tracer import (
    Camera,
    CameraPlacementError,
    K_BOX,
    K_LIGHT,
    K_WALL,
    K_WINDOW,
    RenderSettings,
    TraceScene,
    luminance,
)


class ProbeRejected(ValueError):
    pass


def pixel_rays(camera: Camera, width: int, height: int, jitter=None):
    """World-frame rays through pixel centers (row-major), (H*W, 3) dirs."""
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    aspect = width / height
    cols, rows = np.meshgrid(np.arange(width), np.arange(height))
    cols = cols.reshape(-1).astype(np.float64)
    rows = rows.reshape(-1).astype(np.float64)
    if jitter is None:
        jx = jy = 0.5
    else:
        jx, jy = jitter
    x = ((cols + jx) / width * 2.0 - 1.0) * tan_half * aspect
    y = (1.0 - (rows + jy) / height * 2.0) * tan_half
    local = np.stack([x, y, np.ones_like(x)], axis=1)
    world = local @ camera.rotation.T
    return world / np.linalg.norm(world, axis=1, keepdims=True)


def validate_camera(tracer: TraceScene, camera: Camera):
    p = np.asarray(camera.position, dtype=np.float64)
    if not tracer.point_inside_room(p):
        raise CameraPlacementError(f"camera position {p} is outside the room")
    if tracer.point_inside_occluder(p):
        raise CameraPlacementError(f"camera position {p} is inside an occluder")


def place_camera(scene: Scene, seed: int, max_tries: int = 32) -> Camera:
    """Sample a valid interior camera pose for a scene."""
    rng = derive_rng(seed, 202)
    w, h, d = scene.room
    tracer = TraceScene(scene)
    for _ in range(max_tries):
        pos = np.array(
            [
                rng.uniform(0.5, w - 0.5),
                rng.uniform(1.2, min(1.8, h - 0.3)),
                rng.uniform(0.5, d - 0.5),
            ]
        )
        cam = Camera(
            position=pos,
            yaw=float(rng.uniform(0.0, 2.0 * math.pi)),
            pitch=float(rng.uniform(math.radians(-15.0), math.radians(5.0))),
        )
        try:
            validate_camera(tracer, cam)
            return cam
        except CameraPlacementError:
            continue
    raise CameraPlacementError(f"no valid camera pose for scene seed {scene.seed}")


def render_view(
    scene: Scene, camera: Camera, settings: RenderSettings, rng=None
) -> np.ndarray:
    """Linear-radiance RGB image (H, W, 3) float32."""
    tracer = TraceScene(scene, settings.exposure_scale)
    validate_camera(tracer, camera)
    if rng is None:
        rng = derive_rng(scene.seed, 303)
    width, height = settings.image_res
    origins = np.broadcast_to(camera.position, (width * height, 3)).astype(np.float64)
    acc = np.zeros((width * height, 3))
    for s in range(settings.samples_per_pixel):
        if settings.samples_per_pixel == 1:
            jitter = None
        else:
            jitter = (rng.random(width * height), rng.random(width * height))
        dirs = pixel_rays(camera, width, height, jitter)
        hits = tracer.trace(origins, dirs)
        acc += tracer.shade(hits, rng, settings)
    image = (acc / settings.samples_per_pixel).reshape(height, width, 3)
    return image.astype(np.float32)


def sample_probe_locations(image_res: tuple, seed: int) -> np.ndarray:
    """One pixel coordinate per image quadrant, outside a 5% border.

    Returns int array (4, 2) of (x, y), quadrant order TL, TR, BL, BR.
    """
    width, height = image_res
    if width < 20 or height < 20:
        raise ValueError("image too small for quadrant probe sampling")
    rng = derive_rng(seed, 404)
    bx = int(round(0.05 * width))
    by = int(round(0.05 * height))
    xs = [(bx, width // 2 - 1), (width // 2, width - 1 - bx)]
    ys = [(by, height // 2 - 1), (height // 2, height - 1 - by)]
    coords = []
    for (y0, y1) in ys:
        for (x0, x1) in xs:
            coords.append(
                [int(rng.integers(x0, x1 + 1)), int(rng.integers(y0, y1 + 1))]
            )
    return np.array(coords, dtype=np.int64)


def place_probe_camera(scene: Scene, camera: Camera, pixel_coord, image_res):
    """Back-project a pixel, offset 10 cm along the surface normal.

    Returns (position, rotation); the probe axes equal the scene camera axes.
    Raises ProbeRejected when the pixel sees the sky through the window.
    """
    tracer = TraceScene(scene)
    width, height = image_res
    x, y = int(pixel_coord[0]), int(pixel_coord[1])
    if not (0 <= x < width and 0 <= y < height):
        raise ValueError(f"pixel {pixel_coord} outside image {image_res}")
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    aspect = width / height
    px = ((x + 0.5) / width * 2.0 - 1.0) * tan_half * aspect
    py = (1.0 - (y + 0.5) / height * 2.0) * tan_half
    local = np.array([px, py, 1.0])
    direction = camera.rotation @ local
    direction = direction / np.linalg.norm(direction)
    hits = tracer.trace(
        camera.position[None, :].astype(np.float64), direction[None, :]
    )
    kind = int(hits["kind"][0])
    if kind == K_WINDOW:
        raise ProbeRejected("pixel ray escapes through the window")
    if not np.isfinite(hits["t"][0]):
        raise ProbeRejected("pixel ray escapes the scene")
    position = hits["pos"][0] + 0.10 * hits["normal"][0]
    return position, camera.rotation


def render_probe(scene: Scene, position, rotation, settings: RenderSettings, rng=None):
    """Render light and depth cubemaps at a probe pose.

    Light faces are linear radiance; depth faces are hit distances in meters.
    """
    tracer = TraceScene(scene, settings.exposure_scale)
    if rng is None:
        rng = derive_rng(scene.seed, 505)
    res = settings.probe_face_res
    local_dirs = face_directions(res).reshape(-1, 3)
    world_dirs = local_dirs @ np.asarray(rotation).T
    origins = np.broadcast_to(np.asarray(position, dtype=np.float64), world_dirs.shape)
    hits = tracer.trace(origins, world_dirs)
    radiance = tracer.shade(hits, rng, settings)
    light = Cubemap(radiance.reshape(6, res, res, 3).astype(np.float32))
    depth = Cubemap(hits["t"].reshape(6, res, res, 1).astype(np.float32))
    return light, depth


def probe_is_occluded(scene: Scene, position) -> bool:
    """True when something other than the room shell hangs over the probe."""
    tracer = TraceScene(scene)
    up = np.array([[0.0, 1.0, 0.0]])
    hits = tracer.trace(np.asarray(position, dtype=np.float64)[None, :], up)
    return int(hits["kind"][0]) == K_BOX


def surface_queries(scene: Scene, camera: Camera, coords, settings: RenderSettings, rng):
    """Ground-truth albedo and gray shading for pixel coordinates (N, 2).

    albedo is the texture value at the first hit; shading is
    luminance(irradiance) / pi, matching image = albedo/pi * irradiance for
    diffuse surfaces. Emissive hits (lights, window sky) take albedo = 1 and
    shading = luminance(emission).
    """
    tracer = TraceScene(scene, settings.exposure_scale)
    width, height = settings.image_res
    coords = np.asarray(coords, dtype=np.float64)
    tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
    aspect = width / height
    x = ((coords[:, 0] + 0.5) / width * 2.0 - 1.0) * tan_half * aspect
    y = (1.0 - (coords[:, 1] + 0.5) / height * 2.0) * tan_half
    local = np.stack([x, y, np.ones_like(x)], axis=1)
    dirs = local @ camera.rotation.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(camera.position, dirs.shape).astype(np.float64)
    hits = tracer.trace(origins, dirs)
    n = dirs.shape[0]
    albedo = np.ones((n, 3))
    shading = np.zeros(n)
    diffuse = (hits["kind"] == K_WALL) | (hits["kind"] == K_BOX)
    if np.any(diffuse):
        idx = np.nonzero(diffuse)[0]
        e = tracer.irradiance(
            hits["pos"][idx], hits["normal"][idx], rng, settings, settings.bounce_count
        )
        albedo[idx] = hits["albedo"][idx]
        shading[idx] = luminance(e) / math.pi
    emissive = ~diffuse
    if np.any(emissive):
        shading[emissive] = luminance(hits["emission"][emissive])
    return albedo, shading
