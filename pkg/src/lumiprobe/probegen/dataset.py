"""Dataset builder: renders scenes and probes, fits SH, writes the layout.

Output layout:
    manifest.json                 config echo, seed, splits, normalization
    images/<scene>.pfm            linear radiance after global normalization
    probes/<scene>_p<k>/light/    sh-core probe directory (radiance)
    probes/<scene>_p<k>/depth/    sh-core probe directory (depth)
    records.jsonl                 one ProbeRecord per line

Everything is a pure function of (config, seed); parallel and serial builds
produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .. import SH_CONVENTION
from ..sh.basis import SHCoeffs
from ..sh.cubemap import Cubemap, mean_luminance, project_cubemap_to_sh
from ..sh.probe_io import save_probe, write_pfm
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
from .scene import derive_rng, generate_scene
from .tracer import CameraPlacementError, RenderSettings, luminance

log = logging.getLogger(__name__)

DEPTH_CLAMP_METERS = 10.0

DATASET_CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "scenes"],
    "properties": {
        "schema_version": {"const": 1},
        "scenes": {"type": "integer", "minimum": 1},
        "probes_per_scene": {"type": "integer", "minimum": 1},
        "image_width": {"type": "integer", "minimum": 20},
        "image_height": {"type": "integer", "minimum": 20},
        "probe_face_res": {"type": "integer", "minimum": 8},
        "samples_per_pixel": {"type": "integer", "minimum": 1},
        "direct_samples": {"type": "integer", "minimum": 1},
        "indirect_samples": {"type": "integer", "minimum": 1},
        "secondary_direct_samples": {"type": "integer", "minimum": 1},
        "bounce_count": {"type": "integer", "minimum": 1},
        "window_prob": {"type": "number", "minimum": 0, "maximum": 1},
        "domain_b_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "splits": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
            "minItems": 3,
            "maxItems": 3,
        },
        "filter_threshold": {"type": "number", "exclusiveMinimum": 0},
        "target_median": {"type": "number", "exclusiveMinimum": 0},
        "l_max": {"type": "integer", "minimum": 1, "maximum": 8},
        "patch_res": {"type": "integer", "minimum": 7},
        "save_probe_maps": {"type": "boolean"},
    },
    "additionalProperties": False,
}


@dataclass
class DatasetConfig:
    scenes: int
    probes_per_scene: int = 4
    image_width: int = 128
    image_height: int = 96
    probe_face_res: int = 32
    samples_per_pixel: int = 1
    direct_samples: int = 9
    indirect_samples: int = 4
    secondary_direct_samples: int = 2
    bounce_count: int = 1
    window_prob: float = 0.4
    domain_b_fraction: float = 0.3
    splits: tuple = (0.7, 0.15, 0.15)
    filter_threshold: float = 0.01
    target_median: float = 0.5
    l_max: int = 5
    patch_res: int = 49
    save_probe_maps: bool = True

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetConfig":
        import jsonschema

        jsonschema.validate(raw, DATASET_CONFIG_SCHEMA)
        data = dict(raw)
        data.pop("schema_version")
        if "splits" in data:
            data["splits"] = tuple(data["splits"])
        return cls(**data)

    def to_manifest_dict(self) -> dict:
        out = asdict(self)
        out["splits"] = list(self.splits)
        out["schema_version"] = 1
        return out

    def render_settings(self, exposure_scale: float) -> RenderSettings:
        return RenderSettings(
            image_res=(self.image_width, self.image_height),
            probe_face_res=self.probe_face_res,
            samples_per_pixel=self.samples_per_pixel,
            bounce_count=self.bounce_count,
            exposure_scale=exposure_scale,
            direct_samples=self.direct_samples,
            indirect_samples=self.indirect_samples,
            secondary_direct_samples=self.secondary_direct_samples,
        )


def _patch_grid(coord, patch_res: int, image_res) -> np.ndarray:
    """7x7 sample pixel coordinates across the patch footprint (clamped)."""
    width, height = image_res
    cell = patch_res // 7
    offsets = (np.arange(7) - 3) * cell
    xs = np.clip(coord[0] + offsets, 0, width - 1)
    ys = np.clip(coord[1] + offsets, 0, height - 1)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def render_scene_bundle(config: DatasetConfig, seed: int, scene_idx: int) -> dict:
    """Render one scene with its candidate probes (deterministic, picklable)."""
    scene_seed = int(
        np.random.SeedSequence((seed, scene_idx)).generate_state(1)[0]
    )
    scene = generate_scene(scene_seed, window_prob=config.window_prob)
    exposure = float(derive_rng(seed, scene_idx, 2).uniform(100.0, 500.0))
    settings = config.render_settings(exposure)
    try:
        camera = place_camera(scene, scene_seed)
    except CameraPlacementError as exc:
        return {"scene_idx": scene_idx, "skipped": str(exc)}
    image = render_view(
        scene, camera, settings, rng=derive_rng(seed, scene_idx, 3)
    )
    rounds = (config.probes_per_scene + 3) // 4
    coords = np.concatenate(
        [
            sample_probe_locations(
                (config.image_width, config.image_height), scene_seed + 7919 * r
            )
            for r in range(rounds)
        ]
    )
    probes = []
    for k in range(config.probes_per_scene):
        coord = coords[k]
        try:
            position, rotation = place_probe_camera(
                scene, camera, coord, (config.image_width, config.image_height)
            )
        except (ProbeRejected, ValueError) as exc:
            probes.append({"k": k, "rejected": f"placement: {exc}"})
            continue
        light, depth = render_probe(
            scene, position, rotation, settings, rng=derive_rng(seed, scene_idx, 4, k)
        )
        grid = _patch_grid(coord, config.patch_res, (config.image_width, config.image_height))
        albedo7, shading7 = surface_queries(
            scene, camera, grid, settings, rng=derive_rng(seed, scene_idx, 5, k)
        )
        probes.append(
            {
                "k": k,
                "coord": np.asarray(coord),
                "position": position,
                "light_faces": light.faces,
                "depth_faces": depth.faces,
                "albedo7": albedo7.reshape(7, 7, 3),
                "shading7": shading7.reshape(7, 7),
                "occluded": probe_is_occluded(scene, position),
            }
        )
    return {
        "scene_idx": scene_idx,
        "scene_seed": scene_seed,
        "exposure": exposure,
        "image": image,
        "probes": probes,
        "has_window": scene.window is not None,
    }


def _worker(args):
    config_dict, seed, scene_idx = args
    config = DatasetConfig(**config_dict)
    return render_scene_bundle(config, seed, scene_idx)


def _scene_id(idx: int) -> str:
    return f"s{idx:05d}"


def _assign_splits(config: DatasetConfig, seed: int):
    rng = derive_rng(seed, 1)
    order = rng.permutation(config.scenes)
    total = np.asarray(config.splits, dtype=np.float64)
    total = total / total.sum()
    n_train = int(round(total[0] * config.scenes))
    n_val = int(round(total[1] * config.scenes))
    train = sorted(int(i) for i in order[:n_train])
    val = sorted(int(i) for i in order[n_train : n_train + n_val])
    test = sorted(int(i) for i in order[n_train + n_val :])
    n_b = int(round(config.domain_b_fraction * len(train)))
    b_rng = derive_rng(seed, 6)
    b_scenes = sorted(int(i) for i in b_rng.permutation(train)[:n_b])
    return train, val, test, set(b_scenes)


def _domain_b_image(image: np.ndarray, seed: int, scene_idx: int) -> np.ndarray:
    """Shifted-statistics variant: sensor noise plus a non-gamma tone curve."""
    rng = derive_rng(seed, scene_idx, 7)
    sigma = rng.uniform(0.002, 0.01)
    k = rng.uniform(2.0, 10.0)
    noisy = np.maximum(0.0, image + rng.normal(0.0, sigma, size=image.shape))
    return (np.log1p(k * noisy) / math.log1p(k)).astype(np.float32)


def build_dataset(config: DatasetConfig, out_dir, seed: int, jobs: int = 1) -> dict:
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        raise FileExistsError(f"output directory {out_dir} is not empty")
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "probes").mkdir(exist_ok=True)

    train, val, test, b_scenes = _assign_splits(config, seed)
    split_of = {}
    for name, ids in (("train", train), ("val", val), ("test", test)):
        for i in ids:
            split_of[i] = name

    tasks = [(asdict(config), seed, i) for i in range(config.scenes)]
    if jobs > 1:
        with get_context("spawn").Pool(processes=jobs) as pool:
            bundles = pool.map(_worker, tasks, chunksize=4)
    else:
        bundles = [_worker(t) for t in tasks]
    bundles.sort(key=lambda b: b["scene_idx"])

    # global exposure normalization from the train-split linear images
    train_lums = [
        luminance(b["image"].reshape(-1, 3).astype(np.float64))
        for b in bundles
        if "image" in b and split_of[b["scene_idx"]] == "train"
    ]
    if not train_lums:
        raise ValueError("no train-split scenes rendered")
    median = float(np.median(np.concatenate(train_lums)))
    scale = config.target_median / max(median, 1e-12)

    records = []
    counts = {
        "scenes": config.scenes,
        "scenes_skipped": 0,
        "candidates": 0,
        "rejected_placement": 0,
        "rejected_intensity": 0,
        "accepted": 0,
    }
    exposures = {}
    for bundle in bundles:
        idx = bundle["scene_idx"]
        if "skipped" in bundle:
            counts["scenes_skipped"] += 1
            log.warning("scene %d skipped: %s", idx, bundle["skipped"])
            continue
        scene_id = _scene_id(idx)
        split = split_of[idx]
        domain = "B" if idx in b_scenes else "A"
        exposures[scene_id] = bundle["exposure"]
        image = bundle["image"] * scale
        if domain == "B":
            image = _domain_b_image(image, seed, idx)
        write_pfm(out_dir / "images" / f"{scene_id}.pfm", image)

        for probe in bundle["probes"]:
            counts["candidates"] += 1
            if "rejected" in probe:
                counts["rejected_placement"] += 1
                continue
            light = Cubemap(probe["light_faces"] * scale)
            if mean_luminance(light) < config.filter_threshold:
                counts["rejected_intensity"] += 1
                continue
            counts["accepted"] += 1
            record_id = f"{scene_id}_p{probe['k']}"
            record = {
                "record_id": record_id,
                "image_id": scene_id,
                "split": split,
                "domain": domain,
                "pixel_coord": [int(probe["coord"][0]), int(probe["coord"][1])],
                "world_pos": [float(v) for v in probe["position"]],
                "occluded": bool(probe["occluded"]),
            }
            if domain == "A":
                light_sh = project_cubemap_to_sh(light, config.l_max)
                depth_m = np.clip(probe["depth_faces"], 0.0, DEPTH_CLAMP_METERS)
                depth_cm = Cubemap(depth_m / DEPTH_CLAMP_METERS)
                depth_sh = project_cubemap_to_sh(depth_cm, config.l_max)
                record["light_sh"] = [[float(v) for v in ch] for ch in light_sh.data]
                record["depth_sh"] = [float(v) for v in depth_sh.data[0]]
                record["albedo7"] = np.round(probe["albedo7"], 9).tolist()
                record["shading7"] = np.round(probe["shading7"] * scale, 9).tolist()
                if config.save_probe_maps:
                    probe_dir = out_dir / "probes" / record_id
                    save_probe(probe_dir / "light", light, light_sh)
                    save_probe(probe_dir / "depth", depth_cm, depth_sh)
                    record["probe_rel"] = f"probes/{record_id}"
            else:
                record["light_sh"] = None
                record["depth_sh"] = None
                record["albedo7"] = None
                record["shading7"] = None
            records.append(record)

    with open(out_dir / "records.jsonl", "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")

    manifest = {
        "schema_version": 1,
        "kind": "lumiprobe-dataset",
        "convention": SH_CONVENTION,
        "seed": seed,
        "config": config.to_manifest_dict(),
        "normalization_scale": scale,
        "train_median_luminance": median,
        "splits": {
            "train": [_scene_id(i) for i in train],
            "val": [_scene_id(i) for i in val],
            "test": [_scene_id(i) for i in test],
        },
        "domain_b_scenes": sorted(_scene_id(i) for i in b_scenes),
        "counts": counts,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1)
    )
    return manifest
