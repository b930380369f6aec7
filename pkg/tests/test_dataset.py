"""Dataset builder: counting, splits, determinism, refit oracle."""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from lumiprobe.probegen import DatasetConfig, build_dataset
from lumiprobe.sh import Cubemap, load_probe, project_cubemap_to_sh, read_pfm
from lumiprobe.sh.cubemap import reconstruct_cubemap_from_sh


def small_config(**overrides) -> DatasetConfig:
    base = dict(
        scenes=10,
        probes_per_scene=4,
        image_width=64,
        image_height=48,
        probe_face_res=16,
        direct_samples=4,
        indirect_samples=2,
        secondary_direct_samples=1,
        domain_b_fraction=0.3,
    )
    base.update(overrides)
    return DatasetConfig(**base)


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "data"
    manifest = build_dataset(small_config(), out, seed=42)
    records = [
        json.loads(line) for line in (out / "records.jsonl").read_text().splitlines()
    ]
    return out, manifest, records


class TestBuild:
    def test_record_count_bounded_and_valid(self, built):
        out, manifest, records = built
        assert manifest["counts"]["candidates"] <= 40
        assert len(records) == manifest["counts"]["accepted"]
        assert len(records) <= 40
        for r in records:
            x, y = r["pixel_coord"]
            assert 0 <= x < 64 and 0 <= y < 48
            if r["domain"] == "A":
                assert len(r["light_sh"]) == 3 and len(r["light_sh"][0]) == 36
                assert len(r["depth_sh"]) == 36
                assert np.isfinite(np.array(r["light_sh"])).all()
            else:
                assert r["light_sh"] is None

    def test_splits_disjoint(self, built):
        _, manifest, _ = built
        train = set(manifest["splits"]["train"])
        val = set(manifest["splits"]["val"])
        test = set(manifest["splits"]["test"])
        assert not (train & val) and not (train & test) and not (val & test)
        assert len(train | val | test) == manifest["counts"]["scenes"]

    def test_domain_b_only_in_train(self, built):
        _, manifest, records = built
        train = set(manifest["splits"]["train"])
        for r in records:
            if r["domain"] == "B":
                assert r["image_id"] in train

    def test_images_written_and_finite(self, built):
        out, manifest, records = built
        for r in records[:5]:
            img = read_pfm(out / "images" / f"{r['image_id']}.pfm")
            assert img.shape == (48, 64, 3)
            assert np.isfinite(img).all() and img.min() >= 0.0

    def test_refit_reproduces_stored_coefficients(self, built):
        # band-limit round trip: refit of the reconstruction reproduces the
        # stored fit within 1e-4 (no fitting bug)
        out, _, records = built
        done = 0
        for r in records:
            if r["domain"] != "A" or "probe_rel" not in r:
                continue
            cubemap, coeffs, _ = load_probe(out / r["probe_rel"] / "light")
            stored = np.array(r["light_sh"])
            np.testing.assert_allclose(coeffs.data, stored, atol=1e-9)
            recon = reconstruct_cubemap_from_sh(coeffs, cubemap.face_res)
            refit = project_cubemap_to_sh(recon, coeffs.l_max)
            assert np.abs(refit.data - coeffs.data).max() <= 1e-4
            done += 1
            if done >= 4:
                break
        assert done > 0

    def test_depth_probe_reconstruction_accuracy(self):
        # Flat-wall probes (smooth depth, no occluders): the band-limited
        # depth fit lands within 15% of true depth at face centers.
        from lumiprobe.probegen import RenderSettings, render_probe
        from lumiprobe.sh import Cubemap as CM, project_cubemap_to_sh as fit

        from test_probegen_render import white_room

        scene = white_room(width=4.0, height=4.0, depth=4.0)
        settings = RenderSettings(
            probe_face_res=32, direct_samples=4, indirect_samples=1,
            secondary_direct_samples=1,
        )
        for pos in ([2.0, 2.0, 2.0], [1.6, 2.2, 2.4], [2.4, 1.8, 1.7]):
            _, depth = render_probe(scene, np.array(pos), np.eye(3), settings)
            clamped = np.clip(depth.faces, 0.0, 10.0) / 10.0
            coeffs = fit(CM(clamped), 5)
            recon = reconstruct_cubemap_from_sh(coeffs, 32)
            center = 16
            for face in range(6):
                true = float(clamped[face, center, center, 0])
                estimate = float(recon.faces[face, center, center, 0])
                assert abs(estimate - true) <= 0.15 * true

    def test_refuses_dirty_output_dir(self, built, tmp_path):
        out = tmp_path / "dirty"
        out.mkdir()
        (out / "junk.txt").write_text("x")
        with pytest.raises(FileExistsError):
            build_dataset(small_config(), out, seed=1)


class TestDeterminism:
    def test_rebuild_is_bit_identical(self, tmp_path):
        cfg = small_config(scenes=4)
        a = tmp_path / "a"
        b = tmp_path / "b"
        build_dataset(cfg, a, seed=7)
        build_dataset(cfg, b, seed=7)
        assert tree_digest(a) == tree_digest(b)

    def test_parallel_matches_serial(self, tmp_path):
        cfg = small_config(scenes=4)
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        build_dataset(cfg, serial, seed=9, jobs=1)
        build_dataset(cfg, parallel, seed=9, jobs=2)
        assert tree_digest(serial) == tree_digest(parallel)


class TestConfigSchema:
    def test_valid_config_loads(self):
        cfg = DatasetConfig.from_dict({"schema_version": 1, "scenes": 3})
        assert cfg.scenes == 3

    def test_bad_schema_rejected(self):
        import jsonschema

        with pytest.raises(jsonschema.ValidationError):
            DatasetConfig.from_dict({"schema_version": 1, "scenes": "many"})

    def test_unknown_key_rejected(self):
        import jsonschema

        with pytest.raises(jsonschema.ValidationError):
            DatasetConfig.from_dict({"schema_version": 1, "scenes": 3, "zap": 1})
