"""Basis evaluation, solid angles, and projection round trips."""

import math

import numpy as np
import pytest

from lumiprobe.sh import (
    Cubemap,
    SHCoeffs,
    eval_sh_basis,
    face_directions,
    n_terms,
    project_cubemap_to_sh,
    reconstruct_cubemap_from_sh,
    sh_index,
    solid_angle_weights,
    synthesize_cubemap,
    total_solid_angle,
)

from conftest import fibonacci_sphere

FOUR_PI = 4.0 * math.pi


class TestBasis:
    def test_constant_band(self):
        v = eval_sh_basis(np.array([0.0, 0.0, 1.0]), l_max=0)
        assert v.shape == (1,)
        assert v[0] == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), abs=1e-12)

    def test_band1_zonal_axis_is_up(self):
        # (1,0) is aligned with the probe +y axis; the other band-1 terms
        # vanish on that axis.
        v = eval_sh_basis(np.array([0.0, 1.0, 0.0]), l_max=1)
        assert v[sh_index(1, 0)] == pytest.approx(math.sqrt(3.0 / (4.0 * math.pi)), abs=1e-12)
        assert v[sh_index(1, 1)] == pytest.approx(0.0, abs=1e-12)
        assert v[sh_index(1, -1)] == pytest.approx(0.0, abs=1e-12)

    def test_band1_component_mapping(self):
        # (1,1) reads the x component, (1,-1) the z component.
        vx = eval_sh_basis(np.array([1.0, 0.0, 0.0]), l_max=1)
        vz = eval_sh_basis(np.array([0.0, 0.0, 1.0]), l_max=1)
        c1 = math.sqrt(3.0 / (4.0 * math.pi))
        assert vx[sh_index(1, 1)] == pytest.approx(c1, abs=1e-12)
        assert vz[sh_index(1, -1)] == pytest.approx(c1, abs=1e-12)

    def test_monte_carlo_orthonormality(self):
        dirs = fibonacci_sphere(1_000_000)
        basis = eval_sh_basis(dirs, l_max=5)
        gram = (FOUR_PI / dirs.shape[0]) * (basis.T @ basis)
        assert np.abs(gram - np.eye(n_terms(5))).max() < 5e-3

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            eval_sh_basis(np.array([np.nan, 0.0, 1.0]), l_max=2)

    def test_normalizes_non_unit_input(self):
        a = eval_sh_basis(np.array([0.0, 2.0, 0.0]), l_max=3)
        b = eval_sh_basis(np.array([0.0, 1.0, 0.0]), l_max=3)
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_deterministic(self, rng):
        dirs = rng.normal(size=(64, 3))
        a = eval_sh_basis(dirs, l_max=5)
        b = eval_sh_basis(dirs, l_max=5)
        assert np.array_equal(a, b)


class TestSolidAngles:
    def test_single_texel_face(self):
        w = solid_angle_weights(1)
        assert w.shape == (1, 1)
        assert w[0, 0] == pytest.approx(FOUR_PI / 6.0, abs=1e-12)

    @pytest.mark.parametrize("face_res", [1, 2, 4, 8, 16, 32, 64, 128, 256])
    def test_sphere_coverage(self, face_res):
        assert total_solid_angle(face_res) == pytest.approx(
            FOUR_PI, rel=1e-9
        )

    def test_against_numerical_quadrature(self):
        # Independent oracle: 2-D Gauss-Legendre quadrature of the texel
        # footprint with the pinhole Jacobian (1 + a^2 + b^2)^(-3/2).
        face_res = 64
        nodes, weights = np.polynomial.legendre.leggauss(48)

        def quad(a0, a1, b0, b1):
            am = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * nodes
            bm = 0.5 * (b0 + b1) + 0.5 * (b1 - b0) * nodes
            a, b = np.meshgrid(am, bm)
            f = (1.0 + a * a + b * b) ** -1.5
            ww = np.outer(weights, weights)
            return float((f * ww).sum() * 0.25 * (a1 - a0) * (b1 - b0))

        w = solid_angle_weights(face_res)
        step = 2.0 / face_res
        mid = face_res // 2
        for r, c in [(mid, mid), (0, 0)]:
            a0 = -1.0 + c * step
            b0 = -1.0 + r * step
            assert w[r, c] == pytest.approx(
                quad(a0, a0 + step, b0, b0 + step), abs=1e-8
            )
        assert w[mid, mid] > w[0, 0]


class TestProjection:
    def test_constant_map(self):
        value = 0.7
        cm = Cubemap.constant(32, [value] * 3)
        coeffs = project_cubemap_to_sh(cm, l_max=5)
        dc = value * 2.0 * math.sqrt(math.pi)
        for ch in range(3):
            assert coeffs.data[ch, 0] == pytest.approx(dc, abs=1e-6 * value)
            assert np.abs(coeffs.data[ch, 1:]).max() < 1e-6 * value

    def test_zero_map(self):
        cm = Cubemap.constant(16, [0.0, 0.0, 0.0])
        coeffs = project_cubemap_to_sh(cm)
        assert np.all(coeffs.data == 0.0)

    @pytest.mark.parametrize("face_res,tol", [(64, 1e-3), (128, 1e-4)])
    def test_band_limited_round_trip(self, rng, face_res, tol):
        truth = SHCoeffs(rng.uniform(-1.0, 1.0, size=(3, 36)))
        cm = reconstruct_cubemap_from_sh(truth, face_res)
        refit = project_cubemap_to_sh(cm, l_max=5)
        assert np.abs(refit.data - truth.data).max() <= tol

    def test_reconstruct_constant(self):
        coeffs = SHCoeffs.zeros(3)
        data = coeffs.data.copy()
        data[:, 0] = 2.0 * math.sqrt(math.pi)
        cm = reconstruct_cubemap_from_sh(SHCoeffs(data), 8)
        np.testing.assert_allclose(cm.faces, 1.0, atol=1e-6)

    def test_reconstruct_zero(self):
        cm = reconstruct_cubemap_from_sh(SHCoeffs.zeros(1), 8)
        assert np.all(cm.faces == 0.0)

    def test_project_reconstruct_idempotent(self, rng):
        truth = SHCoeffs(rng.uniform(-1.0, 1.0, size=(1, 36)))
        first = reconstruct_cubemap_from_sh(truth, 64)
        again = reconstruct_cubemap_from_sh(project_cubemap_to_sh(first), 64)
        assert np.abs(again.faces - first.faces).max() <= 1e-4

    def test_rejects_empty_map(self):
        with pytest.raises(ValueError):
            Cubemap(np.zeros((6, 0, 0, 3), dtype=np.float32))

    def test_synthesized_patch_projection_is_deterministic(self):
        def fn(dirs):
            hot = dirs @ np.array([0.3, 0.9, 0.3]) / np.linalg.norm([0.3, 0.9, 0.3])
            return np.repeat((hot > 0.99).astype(np.float64)[:, None], 3, axis=1)

        a = project_cubemap_to_sh(synthesize_cubemap(fn, 64)).data
        b = project_cubemap_to_sh(synthesize_cubemap(fn, 64)).data
        assert np.array_equal(a, b)
