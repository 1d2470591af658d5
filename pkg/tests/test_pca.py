"""PCA against an independent analytic 3x3 eigensolver."""

import math

import numpy as np
import pytest

from somaviz.render.pca import PcaError, compute_pca


def analytic_eigh3(m):
    """Closed-form symmetric 3x3 eigendecomposition (trigonometric method).

    Independent of numpy's LAPACK path; eigenvalues descending.
    """
    m = np.asarray(m, np.float64)
    q = np.trace(m) / 3.0
    b = m - q * np.eye(3)
    p2 = (b * b).sum() / 6.0
    p = math.sqrt(p2)
    if p < 1e-300:
        eigvals = np.array([q, q, q])
    else:
        detb = np.linalg.det(b / p)
        r = max(-1.0, min(1.0, detb / 2.0))
        phi = math.acos(r) / 3.0
        e1 = q + 2.0 * p * math.cos(phi)
        e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
        e2 = 3.0 * q - e1 - e3
        eigvals = np.array([e1, e2, e3])

    vecs = []
    for lam in eigvals:
        a = m - lam * np.eye(3)
        # Null space direction via the largest cross product of two rows.
        candidates = [np.cross(a[i], a[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
        norms = [np.linalg.norm(c) for c in candidates]
        v = candidates[int(np.argmax(norms))]
        n = np.linalg.norm(v)
        if n < 1e-14:
            v = np.array([1.0, 0.0, 0.0])
            n = 1.0
        vecs.append(v / n)
    return eigvals, np.stack(vecs)


def oracle_pca(points):
    pts = np.asarray(points, np.float64)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    eigvals, axes = analytic_eigh3(cov)
    return centroid, np.sqrt(np.clip(eigvals, 0, None)), axes


def random_cloud(rs, n=400):
    # Anisotropic cloud with well-separated spreads so eigenvectors are stable.
    scales = np.sort(rs.uniform(0.5, 8.0, 3))[::-1] * np.array([4.0, 1.6, 1.0])
    pts = rs.normal(size=(n, 3)) * scales
    rot, _ = np.linalg.qr(rs.normal(size=(3, 3)))
    return pts @ rot.T + rs.uniform(-50, 50, 3)


class TestPca:
    def test_box_corners(self):
        corners = np.array(
            [[x, y, z] for x in (-2, 2) for y in (-1, 1) for z in (-0.5, 0.5)], float
        )
        frame = compute_pca(corners + np.array([5.0, -3.0, 1.0]))
        assert np.allclose(frame.centroid, [5.0, -3.0, 1.0])
        assert np.allclose(np.abs(frame.axes[0]), [1, 0, 0], atol=1e-12)

    def test_collinear_points(self):
        t = np.linspace(0, 1, 17)[:, None]
        pts = t * np.array([[3.0, 4.0, 0.0]])
        frame = compute_pca(pts)
        direction = np.array([3.0, 4.0, 0.0]) / 5.0
        assert abs(abs(frame.axes[0] @ direction) - 1.0) < 1e-12
        assert frame.extents[1] < 1e-9 and frame.extents[2] < 1e-9

    def test_empty_input(self):
        with pytest.raises(PcaError):
            compute_pca(np.empty((0, 3)))

    def test_matches_analytic_oracle(self):
        rs = np.random.RandomState(77)
        for _ in range(50):
            pts = random_cloud(rs, n=1000)
            frame = compute_pca(pts)
            centroid, extents, axes = oracle_pca(pts)
            assert np.allclose(frame.centroid, centroid, atol=1e-9)
            assert np.allclose(frame.extents, extents, atol=1e-9)
            for got, want in zip(frame.axes, axes):
                assert abs(abs(got @ want) - 1.0) < 1e-9

    def test_orthonormal_right_handed(self):
        rs = np.random.RandomState(5)
        for _ in range(20):
            frame = compute_pca(random_cloud(rs))
            assert np.allclose(frame.axes @ frame.axes.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(frame.axes) > 0.999999

    def test_translation_equivariance(self):
        rs = np.random.RandomState(6)
        pts = random_cloud(rs)
        shift = np.array([12.0, -7.0, 3.0])
        a = compute_pca(pts)
        b = compute_pca(pts + shift)
        assert np.allclose(b.centroid - a.centroid, shift, atol=1e-9)
        assert np.allclose(a.axes, b.axes, atol=1e-9)
        assert np.allclose(a.extents, b.extents, atol=1e-9)

    def test_rotation_equivariance(self):
        # Axes are lines: rotated axes must match up to eigenvector sign.
        rs = np.random.RandomState(8)
        for _ in range(10):
            pts = random_cloud(rs)
            rot, _ = np.linalg.qr(rs.normal(size=(3, 3)))
            if np.linalg.det(rot) < 0:
                rot[:, 0] = -rot[:, 0]
            a = compute_pca(pts)
            b = compute_pca(pts @ rot.T)
            assert np.allclose(b.centroid, rot @ a.centroid, atol=1e-9)
            assert np.allclose(a.extents, b.extents, atol=1e-9)
            for i in range(3):
                assert abs(abs(b.axes[i] @ (rot @ a.axes[i])) - 1.0) < 1e-9
