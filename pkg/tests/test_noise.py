"""Procedural texture primitives."""

import numpy as np
import pytest

from somaviz.render.noise import (
    apply_normal_perturbation,
    cycloidal_normal_perturbation,
    perlin_noise3,
)


class TestPerlin:
    def test_zero_on_lattice(self):
        grid = np.stack(np.meshgrid(*[np.arange(16)] * 3), axis=-1).reshape(-1, 3)
        # frequency 1: the scaled domain lattice is the integer lattice itself
        values = perlin_noise3(grid.astype(float), frequency=1.0, amplitude=1.0, seed=3)
        assert np.all(values == 0.0)

    def test_lattice_zero_respects_frequency(self):
        pts = np.array([[2.0, 4.0, 6.0], [10.0, 0.0, 2.0]])
        values = perlin_noise3(pts, frequency=0.5, amplitude=1.0, seed=9)
        assert np.all(values == 0.0)

    def test_deterministic(self):
        pts = np.random.RandomState(0).uniform(-10, 10, size=(500, 3))
        a = perlin_noise3(pts, 0.37, 0.8, seed=42)
        b = perlin_noise3(pts, 0.37, 0.8, seed=42)
        assert np.array_equal(a, b)
        c = perlin_noise3(pts, 0.37, 0.8, seed=43)
        assert not np.array_equal(a, c)

    def test_range_bounded_on_grid(self):
        # Exhaustive scan over a 64^3 grid of off-lattice samples.
        axis = np.linspace(0.05, 7.93, 64)
        grid = np.stack(np.meshgrid(axis, axis, axis), axis=-1).reshape(-1, 3)
        amplitude = 0.6
        values = perlin_noise3(grid, frequency=1.0, amplitude=amplitude, seed=5)
        assert values.min() >= -amplitude
        assert values.max() <= amplitude
        assert np.mean(np.abs(values)) > 0.0

    def test_scalar_input(self):
        v = perlin_noise3(np.array([0.3, 0.7, 0.1]), 1.0, 1.0, seed=1)
        assert np.isscalar(v) or v.shape == ()

    def test_frequency_must_be_positive(self):
        with pytest.raises(ValueError):
            perlin_noise3(np.zeros(3), 0.0, 1.0)


class TestCycloid:
    def test_zero_amplitude(self):
        pts = np.random.RandomState(1).uniform(-5, 5, (100, 3))
        offsets = cycloidal_normal_perturbation(pts, frequency=0.2, amplitude=0.0)
        assert np.all(offsets == 0.0)

    def test_periodicity(self):
        # Oracle: direct evaluation at points translated by one period.
        pts = np.random.RandomState(2).uniform(-5, 5, (200, 3))
        freq = 0.25
        period = 1.0 / freq
        base = cycloidal_normal_perturbation(pts, freq, 0.7)
        for axis in range(3):
            shifted = pts.copy()
            shifted[:, axis] += period
            moved = cycloidal_normal_perturbation(shifted, freq, 0.7)
            assert np.allclose(base, moved, atol=1e-6)

    def test_amplitude_bounds(self):
        with pytest.raises(ValueError):
            cycloidal_normal_perturbation(np.zeros(3), 0.2, 1.5)

    def test_normals_stay_unit(self):
        rs = np.random.RandomState(3)
        normals = rs.normal(size=(300, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = cycloidal_normal_perturbation(rs.uniform(-9, 9, (300, 3)), 0.31, 0.9)
        out = apply_normal_perturbation(normals, offsets)
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)

    def test_identity_at_zero_amplitude(self):
        rs = np.random.RandomState(4)
        normals = rs.normal(size=(50, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = cycloidal_normal_perturbation(rs.uniform(-9, 9, (50, 3)), 0.31, 0.0)
        out = apply_normal_perturbation(normals, offsets)
        assert np.allclose(out, normals, atol=1e-12)
