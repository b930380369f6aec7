"""Procedural indoor scenes: a room shell, diffuse occluders, emitters.

World frame is y-up; the room occupies [0,W] x [0,H] x [0,D] meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# texture kinds
SOLID, CHECKER, STRIPES = 0, 1, 2


def derive_rng(*keys) -> np.random.Generator:
    """Deterministic generator from a tuple of integer keys."""
    return np.random.default_rng(np.random.SeedSequence(tuple(int(k) for k in keys)))


@dataclass
class Texture:
    kind: int
    color_a: np.ndarray
    color_b: np.ndarray
    scale: float

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Texture":
        kind = int(rng.choice([SOLID, SOLID, CHECKER, STRIPES]))
        base = rng.uniform(0.25, 0.85)
        tint = np.clip(base * rng.uniform(0.75, 1.25, size=3), 0.05, 0.95)
        other = np.clip(tint * rng.uniform(0.35, 0.9), 0.03, 0.95)
        return cls(kind, tint, other, float(rng.uniform(0.8, 4.0)))


@dataclass
class RectLight:
    """Axis-aligned emissive rectangle lying on plane axis=level."""

    axis: int            # normal axis (0=x, 1=y, 2=z)
    level: float
    sign: float          # emission direction: normal = sign * e_axis
    lo: np.ndarray       # (2,) bounds on the two non-normal axes (sorted order)
    hi: np.ndarray
    radiance: np.ndarray  # (3,) linear, before exposure scaling

    @property
    def area(self) -> float:
        return float((self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1]))


@dataclass
class Window:
    """Opening in a wall that shows a procedural sky."""

    axis: int
    level: float
    sign: float          # inward normal of the host wall
    lo: np.ndarray
    hi: np.ndarray
    yaw: float           # sky rotation about the vertical axis
    sky_radiance: np.ndarray
    sun_dir: np.ndarray  # world-frame unit vector toward the sun
    sun_radiance: np.ndarray
    cos_sun_radius: float

    @property
    def area(self) -> float:
        return float((self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1]))

    def sky(self, dirs: np.ndarray) -> np.ndarray:
        """Sky radiance for world-frame directions (N, 3) -> (N, 3)."""
        out = np.tile(self.sky_radiance, (dirs.shape[0], 1))
        sun = dirs @ self.sun_dir > self.cos_sun_radius
        out[sun] += self.sun_radiance
        return out


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray
    texture: Texture


@dataclass
class Scene:
    seed: int
    room: np.ndarray                 # (W, H, D)
    wall_textures: list              # 6 Textures: x0, x1, y0 (floor), y1, z0, z1
    occluders: list = field(default_factory=list)   # [Box]
    lights: list = field(default_factory=list)      # [RectLight]
    window: Window | None = None

    def validate(self):
        w, h, d = self.room
        assert w > 0 and h > 0 and d > 0
        for box in self.occluders:
            assert np.all(box.lo >= -1e-9) and np.all(box.lo <= box.hi)
            assert box.hi[0] <= w + 1e-9 and box.hi[1] <= h + 1e-9 and box.hi[2] <= d + 1e-9
        for light in self.lights:
            assert np.all(light.radiance >= 0.0)
        assert self.lights or self.window is not None, "scene has no light source"


def _other_axes(axis: int):
    return tuple(a for a in range(3) if a != axis)


def _ceiling_light(rng, room) -> RectLight:
    w, h, d = room
    size = rng.uniform([0.4, 0.3], [1.5, 1.0])
    cx = rng.uniform(0.4, w - 0.4)
    cz = rng.uniform(0.4, d - 0.4)
    lo = np.array([max(0.05, cx - size[0] / 2), max(0.05, cz - size[1] / 2)])
    hi = np.array([min(w - 0.05, cx + size[0] / 2), min(d - 0.05, cz + size[1] / 2)])
    base = rng.uniform(0.4, 1.2)
    radiance = np.clip(base * rng.uniform(0.8, 1.2, size=3), 0.05, None)
    return RectLight(axis=1, level=h, sign=-1.0, lo=lo, hi=hi, radiance=radiance)


def _wall_light(rng, room) -> RectLight:
    w, h, d = room
    wall = int(rng.integers(0, 4))  # x0, x1, z0, z1
    axis, level, sign, extent_u = {
        0: (0, 0.0, 1.0, d),
        1: (0, w, -1.0, d),
        2: (2, 0.0, 1.0, w),
        3: (2, d, -1.0, w),
    }[wall]
    size = rng.uniform([0.3, 0.2], [1.2, 0.6])
    cu = rng.uniform(0.3, extent_u - 0.3)
    cv = rng.uniform(1.0, min(h - 0.2, 2.2))
    lo = np.zeros(2)
    hi = np.zeros(2)
    for i, a in enumerate(_other_axes(axis)):
        if a == 1:  # walls always span y vertically
            lo[i], hi[i] = max(0.05, cv - size[1] / 2), min(h - 0.05, cv + size[1] / 2)
        else:
            lo[i], hi[i] = max(0.05, cu - size[0] / 2), min(extent_u - 0.05, cu + size[0] / 2)
    base = rng.uniform(0.4, 1.0)
    radiance = np.clip(base * rng.uniform(0.8, 1.2, size=3), 0.05, None)
    return RectLight(axis=axis, level=level, sign=sign, lo=lo, hi=hi, radiance=radiance)


def _occluder(rng, room) -> Box:
    w, h, d = room
    style = int(rng.integers(0, 3))  # 0 table slab, 1 cabinet, 2 panel
    if style == 0:
        fx, fz = rng.uniform(0.6, 1.6), rng.uniform(0.6, 1.6)
        top = rng.uniform(0.5, 1.1)
        thickness = rng.uniform(0.04, 0.1)
        lo_y, hi_y = top - thickness, top
    elif style == 1:
        fx, fz = rng.uniform(0.5, 1.2), rng.uniform(0.4, 0.9)
        lo_y, hi_y = 0.0, rng.uniform(0.5, 1.3)
    else:
        fx, fz = rng.uniform(0.06, 0.15), rng.uniform(0.8, 1.8)
        if rng.random() < 0.5:
            fx, fz = fz, fx
        lo_y, hi_y = 0.0, rng.uniform(1.0, min(1.9, h - 0.3))
    cx = rng.uniform(0.3, w - 0.3)
    cz = rng.uniform(0.3, d - 0.3)
    lo = np.array([max(0.02, cx - fx / 2), lo_y, max(0.02, cz - fz / 2)])
    hi = np.array([min(w - 0.02, cx + fx / 2), hi_y, min(d - 0.02, cz + fz / 2)])
    return Box(lo=lo, hi=hi, texture=Texture.random(rng))


def _window(rng, room) -> Window:
    w, h, d = room
    wall = int(rng.integers(0, 4))
    axis, level, sign, extent_u = {
        0: (0, 0.0, 1.0, d),
        1: (0, w, -1.0, d),
        2: (2, 0.0, 1.0, w),
        3: (2, d, -1.0, w),
    }[wall]
    width = rng.uniform(0.8, min(2.0, extent_u - 0.4))
    height = rng.uniform(0.8, 1.6)
    sill = rng.uniform(0.7, 1.2)
    cu = rng.uniform(0.2 + width / 2, extent_u - 0.2 - width / 2)
    top = min(h - 0.1, sill + height)
    axes = _other_axes(axis)
    lo = np.zeros(2)
    hi = np.zeros(2)
    for i, a in enumerate(axes):
        if a == 1:
            lo[i], hi[i] = sill, top
        else:
            lo[i], hi[i] = cu - width / 2, cu + width / 2
    yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    elevation = math.radians(rng.uniform(15.0, 60.0))
    sun_dir = np.array(
        [
            math.cos(elevation) * math.sin(yaw),
            math.sin(elevation),
            math.cos(elevation) * math.cos(yaw),
        ]
    )
    sky = rng.uniform(0.15, 0.5) * np.array([0.8, 0.9, 1.15])
    sun = rng.uniform(8.0, 35.0) * np.array([1.15, 1.0, 0.8])
    return Window(
        axis=axis,
        level=level,
        sign=sign,
        lo=lo,
        hi=hi,
        yaw=yaw,
        sky_radiance=sky,
        sun_dir=sun_dir,
        sun_radiance=sun,
        cos_sun_radius=math.cos(math.radians(3.0)),
    )


def generate_scene(seed: int, window_prob: float = 0.4) -> Scene:
    """Deterministic scene from an integer seed."""
    rng = derive_rng(seed, 101)
    # width x height x depth, heights drawn from the indoor-ceiling range
    room = np.array(
        [rng.uniform(3.0, 6.0), rng.uniform(2.4, 3.2), rng.uniform(3.0, 6.0)]
    )
    wall_textures = [Texture.random(rng) for _ in range(6)]
    n_lights = int(rng.integers(1, 4))
    lights = []
    for _ in range(n_lights):
        if rng.random() < 0.7:
            lights.append(_ceiling_light(rng, room))
        else:
            lights.append(_wall_light(rng, room))
    n_occluders = int(rng.integers(0, 4))
    occluders = [_occluder(rng, room) for _ in range(n_occluders)]
    window = _window(rng, room) if rng.random() < window_prob else None
    scene = Scene(
        seed=seed,
        room=room,
        wall_textures=wall_textures,
        occluders=occluders,
        lights=lights,
        window=window,
    )
    scene.validate()
    return scene
