"""Vectorized CPU renderer: stratified direct lighting plus diffuse bounces.

All sampling is driven by caller-provided numpy Generators, so identical
seeds give bit-identical renders regardless of batching or process layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..sh.basis import LUMA_WEIGHTS
from .scene import CHECKER, STRIPES, Scene, _other_axes

EPS = 1e-6

# hit kinds
K_WALL, K_BOX, K_LIGHT, K_WINDOW = 0, 1, 2, 3

WALL_NORMALS = np.array(
    [
        [1.0, 0.0, 0.0],   # x = 0
        [-1.0, 0.0, 0.0],  # x = W
        [0.0, 1.0, 0.0],   # floor
        [0.0, -1.0, 0.0],  # ceiling
        [0.0, 0.0, 1.0],   # z = 0
        [0.0, 0.0, -1.0],  # z = D
    ]
)


class CameraPlacementError(ValueError):
    pass


@dataclass
class RenderSettings:
    image_res: tuple = (128, 96)      # (width, height)
    probe_face_res: int = 64
    samples_per_pixel: int = 1
    bounce_count: int = 1
    exposure_scale: float = 1.0
    direct_samples: int = 16          # area-light samples at primary hits
    indirect_samples: int = 8         # hemisphere directions per bounce
    secondary_direct_samples: int = 4  # area-light samples at bounce hits
    fov_deg: float = 55.0

    def __post_init__(self):
        if self.samples_per_pixel < 1:
            raise ValueError("samples_per_pixel must be >= 1")
        if self.bounce_count < 1:
            raise ValueError("bounce_count must be >= 1")
        if not (self.exposure_scale > 0):
            raise ValueError("exposure_scale must be positive")


@dataclass
class Camera:
    position: np.ndarray
    yaw: float
    pitch: float
    fov_deg: float = 55.0

    @property
    def rotation(self) -> np.ndarray:
        """Columns are the camera right/up/forward axes in world space."""
        f = np.array(
            [
                math.cos(self.pitch) * math.sin(self.yaw),
                math.sin(self.pitch),
                math.cos(self.pitch) * math.cos(self.yaw),
            ]
        )
        right = np.cross([0.0, 1.0, 0.0], f)
        right /= np.linalg.norm(right)
        up = np.cross(f, right)
        return np.stack([right, up, f], axis=1)


class TraceScene:
    """Scene compiled to flat arrays for batched intersection."""

    def __init__(self, scene: Scene, exposure_scale: float = 1.0):
        self.scene = scene
        self.room_hi = np.asarray(scene.room, dtype=np.float64)
        self.n_boxes = len(scene.occluders)
        if self.n_boxes:
            self.box_lo = np.stack([b.lo for b in scene.occluders])
            self.box_hi = np.stack([b.hi for b in scene.occluders])
        else:
            self.box_lo = np.zeros((0, 3))
            self.box_hi = np.zeros((0, 3))
        self.lights = scene.lights
        self.window = scene.window
        self.exposure = float(exposure_scale)
        self.light_radiance = [light.radiance * self.exposure for light in self.lights]
        # textures: walls 0..5 then boxes
        textures = list(scene.wall_textures) + [b.texture for b in scene.occluders]
        self.tex_kind = np.array([t.kind for t in textures])
        self.tex_a = np.stack([t.color_a for t in textures])
        self.tex_b = np.stack([t.color_b for t in textures])
        self.tex_scale = np.array([t.scale for t in textures])
        # Energy-sanity clamp for the direct estimator: irradiance from
        # spatially disjoint emitters never exceeds pi * max emitter radiance.
        peak = np.zeros(3)
        for radiance in self.light_radiance:
            peak = np.maximum(peak, radiance)
        if self.window is not None:
            peak = np.maximum(
                peak,
                (self.window.sky_radiance + self.window.sun_radiance) * self.exposure,
            )
        self.direct_clamp = math.pi * peak
        self.max_emitter_radiance = peak

    def point_inside_occluder(self, p: np.ndarray) -> bool:
        for b in range(self.n_boxes):
            if np.all(p > self.box_lo[b]) and np.all(p < self.box_hi[b]):
                return True
        return False

    def point_inside_room(self, p: np.ndarray) -> bool:
        return bool(np.all(p > 0.0) and np.all(p < self.room_hi))

    # -- intersection ------------------------------------------------------

    def trace(self, origins: np.ndarray, dirs: np.ndarray):
        """Nearest hit for each ray; origins must lie inside the room.

        Returns dict with t, kind, prim, pos, normal, albedo, emission.
        """
        n = origins.shape[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(dirs) > 1e-12, 1.0 / dirs, np.inf)

            # room shell exit (origins are interior)
            t_axis = np.where(
                dirs > 0,
                (self.room_hi[None, :] - origins) * inv,
                (0.0 - origins) * inv,
            )
        t_axis = np.where(np.abs(dirs) <= 1e-12, np.inf, t_axis)
        wall_axis = np.argmin(t_axis, axis=1)
        rows = np.arange(n)
        t_best = t_axis[rows, wall_axis]
        going_up = dirs[rows, wall_axis] > 0
        prim = (2 * wall_axis + going_up).astype(np.int16)
        kind = np.zeros(n, dtype=np.int8)

        # occluder boxes (exterior hits at the near slab, interior at the far)
        for b in range(self.n_boxes):
            with np.errstate(invalid="ignore"):
                t1 = (self.box_lo[b][None, :] - origins) * inv
                t2 = (self.box_hi[b][None, :] - origins) * inv
            tn = np.minimum(t1, t2).max(axis=1)
            tf = np.maximum(t1, t2).min(axis=1)
            outside_hit = (tn > EPS) & (tn < tf) & (tn < t_best)
            inside_hit = (tn <= EPS) & (tf > EPS) & (tf < t_best)
            hit = outside_hit | inside_hit
            if np.any(hit):
                t_best = np.where(outside_hit, tn, np.where(inside_hit, tf, t_best))
                kind = np.where(hit, K_BOX, kind).astype(np.int8)
                prim = np.where(hit, b, prim).astype(np.int16)

        # emissive rects and the window live on the shell planes
        rect_groups = [(K_LIGHT, self.lights)]
        if self.window is not None:
            rect_groups.append((K_WINDOW, [self.window]))
        for kind_id, rects in rect_groups:
            for idx, rect in enumerate(rects):
                axis = rect.axis
                t = (rect.level - origins[:, axis]) * inv[:, axis]
                candidate = (t > EPS) & (t <= t_best + 1e-6)
                if not np.any(candidate):
                    continue
                hit_pos = origins + t[:, None] * dirs
                ua, va = _other_axes(axis)
                inside = (
                    candidate
                    & (hit_pos[:, ua] >= rect.lo[0])
                    & (hit_pos[:, ua] <= rect.hi[0])
                    & (hit_pos[:, va] >= rect.lo[1])
                    & (hit_pos[:, va] <= rect.hi[1])
                )
                if np.any(inside):
                    t_best = np.where(inside, t, t_best)
                    kind = np.where(inside, kind_id, kind).astype(np.int8)
                    prim = np.where(inside, idx, prim).astype(np.int16)

        pos = origins + t_best[:, None] * dirs
        normal = self._normals(dirs, kind, prim, pos)
        albedo = self._albedo(kind, prim, pos, normal)
        emission = self._emission(dirs, kind, prim)
        return {
            "t": t_best,
            "kind": kind,
            "prim": prim,
            "pos": pos,
            "normal": normal,
            "albedo": albedo,
            "emission": emission,
        }

    def _normals(self, dirs, kind, prim, pos):
        n = dirs.shape[0]
        normal = np.zeros((n, 3))
        wall_sel = kind == K_WALL
        normal[wall_sel] = WALL_NORMALS[prim[wall_sel]]
        for idx, light in enumerate(self.lights):
            sel = (kind == K_LIGHT) & (prim == idx)
            if np.any(sel):
                normal[sel, light.axis] = light.sign
        if self.window is not None:
            sel = kind == K_WINDOW
            if np.any(sel):
                normal[sel, self.window.axis] = self.window.sign
        box_sel = kind == K_BOX
        if np.any(box_sel):
            idx = np.nonzero(box_sel)[0]
            p = pos[idx]
            b = prim[idx]
            d_lo = np.abs(p - self.box_lo[b])
            d_hi = np.abs(p - self.box_hi[b])
            face = np.argmin(np.concatenate([d_lo, d_hi], axis=1), axis=1)
            axis = face % 3
            sign = np.where(face < 3, -1.0, 1.0)
            nb = np.zeros((idx.size, 3))
            nb[np.arange(idx.size), axis] = sign
            # orient toward the incoming ray (covers interior hits)
            flip = np.sum(nb * dirs[idx], axis=1) > 0
            nb[flip] *= -1.0
            normal[idx] = nb
        return normal

    def _albedo(self, kind, prim, pos, normal):
        n = kind.shape[0]
        albedo = np.zeros((n, 3))
        diffuse = (kind == K_WALL) | (kind == K_BOX)
        if not np.any(diffuse):
            return albedo
        idx = np.nonzero(diffuse)[0]
        tex_id = np.where(kind[idx] == K_WALL, prim[idx], 6 + prim[idx])
        axis_n = np.argmax(np.abs(normal[idx]), axis=1)
        rowsel = np.arange(idx.size)
        u = pos[idx][rowsel, (axis_n + 1) % 3] * self.tex_scale[tex_id]
        v = pos[idx][rowsel, (axis_n + 2) % 3] * self.tex_scale[tex_id]
        kind_t = self.tex_kind[tex_id]
        use_b = np.zeros(idx.size, dtype=bool)
        checker = kind_t == CHECKER
        use_b[checker] = ((np.floor(u[checker]) + np.floor(v[checker])) % 2) == 1
        stripes = kind_t == STRIPES
        use_b[stripes] = (np.floor(u[stripes]) % 2) == 1
        albedo[idx] = np.where(use_b[:, None], self.tex_b[tex_id], self.tex_a[tex_id])
        return albedo

    def _emission(self, dirs, kind, prim):
        n = kind.shape[0]
        emission = np.zeros((n, 3))
        for idx_light, light in enumerate(self.lights):
            sel = (kind == K_LIGHT) & (prim == idx_light)
            if not np.any(sel):
                continue
            # one-sided emitter: radiates against its plane normal
            facing = dirs[sel, light.axis] * light.sign < 0
            vals = np.zeros((int(sel.sum()), 3))
            vals[facing] = self.light_radiance[idx_light]
            emission[sel] = vals
        if self.window is not None:
            sel = kind == K_WINDOW
            if np.any(sel):
                emission[sel] = self.window.sky(dirs[sel]) * self.exposure
        return emission

    # -- occlusion ---------------------------------------------------------

    def segment_blocked(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        """True where the open segment start->end crosses an occluder box."""
        blocked = np.zeros(start.shape[0], dtype=bool)
        if self.n_boxes == 0:
            return blocked
        d = end - start
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(d) > 1e-12, 1.0 / d, np.inf)
            for b in range(self.n_boxes):
                t1 = (self.box_lo[b][None, :] - start) * inv
                t2 = (self.box_hi[b][None, :] - start) * inv
                tn = np.minimum(t1, t2).max(axis=1)
                tf = np.maximum(t1, t2).min(axis=1)
                blocked |= (tn < tf) & (tf > 1e-4) & (tn < 1.0 - 1e-4)
        return blocked

    # -- lighting ----------------------------------------------------------

    def direct_irradiance(self, pos, normal, rng, samples: int):
        """Stratified area-sampled direct irradiance at surface points."""
        n = pos.shape[0]
        e = np.zeros((n, 3))
        k = max(1, int(round(math.sqrt(samples))))
        emitters = [
            (light, self.light_radiance[i], False) for i, light in enumerate(self.lights)
        ]
        if self.window is not None:
            emitters.append((self.window, None, True))
        for rect, radiance, is_window in emitters:
            ua, va = _other_axes(rect.axis)
            du = (rect.hi[0] - rect.lo[0]) / k
            dv = (rect.hi[1] - rect.lo[1]) / k
            contrib = np.zeros((n, 3))
            for iu in range(k):
                for iv in range(k):
                    ju = rng.random(n)
                    jv = rng.random(n)
                    q = np.empty((n, 3))
                    q[:, rect.axis] = rect.level
                    q[:, ua] = rect.lo[0] + (iu + ju) * du
                    q[:, va] = rect.lo[1] + (iv + jv) * dv
                    w = q - pos
                    r2 = np.maximum(np.sum(w * w, axis=1), 1e-8)
                    wn = w / np.sqrt(r2)[:, None]
                    cos_p = np.sum(normal * wn, axis=1)
                    cos_q = -wn[:, rect.axis] * rect.sign
                    front = (cos_p > 0) & (cos_q > 0)
                    if not np.any(front):
                        continue
                    geom = np.where(front, cos_p * np.maximum(cos_q, 0.0) / r2, 0.0)
                    geom = geom * ~self.segment_blocked(pos, q)
                    le = rect.sky(wn) * self.exposure if is_window else radiance[None, :]
                    contrib += geom[:, None] * le
            e += contrib * (rect.area / (k * k))
        return np.minimum(e, self.direct_clamp[None, :])

    def cosine_dirs(self, normal, rng):
        n = normal.shape[0]
        u1 = rng.random(n)
        u2 = rng.random(n)
        r = np.sqrt(u1)
        phi = 2.0 * math.pi * u2
        local = np.stack(
            [r * np.cos(phi), r * np.sin(phi), np.sqrt(np.maximum(0.0, 1.0 - u1))],
            axis=1,
        )
        # branchless orthonormal frame around the normal
        nz = normal[:, 2]
        sign = np.where(nz >= 0.0, 1.0, -1.0)
        a = -1.0 / (sign + nz)
        b = normal[:, 0] * normal[:, 1] * a
        t1 = np.stack(
            [1.0 + sign * normal[:, 0] ** 2 * a, sign * b, -sign * normal[:, 0]],
            axis=1,
        )
        t2 = np.stack([b, sign + normal[:, 1] ** 2 * a, -normal[:, 1]], axis=1)
        return local[:, 0:1] * t1 + local[:, 1:2] * t2 + local[:, 2:3] * normal

    def irradiance(self, pos, normal, rng, settings: RenderSettings, depth: int):
        """Direct plus gathered indirect irradiance at surface points."""
        primary = depth >= settings.bounce_count
        samples = (
            settings.direct_samples if primary else settings.secondary_direct_samples
        )
        e = self.direct_irradiance(pos, normal, rng, samples)
        if depth > 0:
            gathered = np.zeros_like(e)
            offset = pos + normal * 1e-4
            for _ in range(settings.indirect_samples):
                d = self.cosine_dirs(normal, rng)
                sub = self.trace(offset, d)
                diffuse = (sub["kind"] == K_WALL) | (sub["kind"] == K_BOX)
                if np.any(diffuse):
                    j = np.nonzero(diffuse)[0]
                    e2 = self.irradiance(
                        sub["pos"][j], sub["normal"][j], rng, settings, depth - 1
                    )
                    # cosine-weighted estimator of the reflected radiance
                    # rho/pi * E gives E_ind contribution rho * E per sample
                    gathered[j] += sub["albedo"][j] * e2
            e = e + gathered / settings.indirect_samples
        return e

    def shade(self, hits, rng, settings: RenderSettings):
        """Outgoing radiance toward the ray origin for traced hits."""
        radiance = hits["emission"].copy()
        diffuse = (hits["kind"] == K_WALL) | (hits["kind"] == K_BOX)
        if not np.any(diffuse):
            return radiance
        idx = np.nonzero(diffuse)[0]
        e = self.irradiance(
            hits["pos"][idx],
            hits["normal"][idx],
            rng,
            settings,
            settings.bounce_count,
        )
        radiance[idx] += hits["albedo"][idx] / math.pi * e
        return radiance


def luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb @ LUMA_WEIGHTS
