"""PFM images and the on-disk probe layout.

A probe directory holds one face per file (px.pfm ... nz.pfm, little-endian
32-bit float, linear radiance) plus meta.json with the fitted SH
coefficients as nested [channel][terms] arrays and the convention string.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import SH_CONVENTION
from .basis import SHCoeffs
from .cubemap import FACE_NAMES, Cubemap


def write_pfm(path, image: np.ndarray) -> None:
    """Write a float32 PFM ('PF' for 3-channel, 'Pf' for single-channel)."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        image = image[..., None]
    if image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ValueError("PFM images must be HxW or HxWx{1,3}")
    height, width, channels = image.shape
    tag = b"PF" if channels == 3 else b"Pf"
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{width} {height}\n".encode())
        f.write(b"-1.0\n")  # negative scale marks little-endian
        f.write(np.flipud(image).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM image as float32 (H, W, C)."""
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file")
        width, height = (int(t) for t in f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(
            f.read(width * height * channels * 4),
            dtype="<f4" if scale < 0 else ">f4",
        )
    if data.size != width * height * channels:
        raise ValueError(f"{path}: truncated PFM payload")
    img = data.reshape(height, width, channels)
    return np.flipud(img).astype(np.float32)


def save_probe(probe_dir, cubemap: Cubemap, coeffs: SHCoeffs) -> None:
    """Write a probe directory (atomic: staged in a sibling tmp dir)."""
    probe_dir = Path(probe_dir)
    if coeffs.channels != cubemap.channels:
        raise ValueError("coefficient/cubemap channel mismatch")
    tmp = probe_dir.with_name(probe_dir.name + ".tmp")
    if tmp.exists():
        for leftover in tmp.iterdir():
            leftover.unlink()
        tmp.rmdir()
    tmp.mkdir(parents=True)
    for i, name in enumerate(FACE_NAMES):
        face = cubemap.faces[i]
        write_pfm(tmp / f"{name}.pfm", face[..., 0] if cubemap.channels == 1 else face)
    meta = {
        "convention": SH_CONVENTION,
        "channels": coeffs.channels,
        "l_max": coeffs.l_max,
        "coefficients": [[float(v) for v in ch] for ch in coeffs.data],
        "face_res": cubemap.face_res,
    }
    (tmp / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    if probe_dir.exists():
        raise FileExistsError(f"probe directory already exists: {probe_dir}")
    tmp.rename(probe_dir)


def load_probe(probe_dir):
    """Read a probe directory back as (Cubemap, SHCoeffs, meta dict)."""
    probe_dir = Path(probe_dir)
    meta = json.loads((probe_dir / "meta.json").read_text())
    if meta["convention"] != SH_CONVENTION:
        raise ValueError(
            f"{probe_dir}: convention {meta['convention']!r} != {SH_CONVENTION!r}"
        )
    faces = [read_pfm(probe_dir / f"{name}.pfm") for name in FACE_NAMES]
    cubemap = Cubemap(np.stack(faces))
    coeffs = SHCoeffs(np.array(meta["coefficients"], dtype=np.float64))
    return cubemap, coeffs, meta
