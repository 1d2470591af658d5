"""Rasterizer and footprint buffer."""

import numpy as np
import pytest

from somaviz.render.camera import Camera
from somaviz.render.peel import RenderError, build_footprint
from somaviz.render.raster import covered_pixel_count, nearest_per_pixel, rasterize


def ortho_like_camera(width=100, height=100, distance=5000.0, fov=2.0):
    # A long lens looking down -y at the origin keeps projections near-affine.
    return Camera(
        target=(0.0, 0.0, 0.0),
        azimuth_deg=0.0,
        elevation_deg=0.0,
        distance=distance,
        fov_y_deg=fov,
        near=50.0,
        far=20000.0,
        viewport=(width, height),
    )


def quad(center_y, half, z_offset=0.0):
    v = np.array(
        [
            [-half, center_y, -half + z_offset],
            [half, center_y, -half + z_offset],
            [half, center_y, half + z_offset],
            [-half, center_y, half + z_offset],
        ]
    )
    n = np.tile([0.0, 1.0, 0.0], (4, 1))
    f = np.array([[0, 1, 2], [0, 2, 3]])
    return v, n, f


class TestRasterize:
    def test_full_screen_quad_covers_viewport(self):
        cam = ortho_like_camera()
        half = cam.distance * np.tan(np.radians(cam.fov_y_deg / 2))
        v, n, f = quad(0.0, half * 1.2)
        frags = rasterize(v, n, None, f, np.zeros(2, int), cam)
        assert covered_pixel_count(frags) == 100 * 100

    def test_behind_camera_empty(self):
        cam = ortho_like_camera()
        v, n, f = quad(cam.distance + 1000.0, 50.0)
        frags = rasterize(v, n, None, f, np.zeros(2, int), cam)
        assert len(frags) == 0

    def test_depth_order_between_two_quads(self):
        cam = ortho_like_camera()
        v1, n1, f1 = quad(100.0, 40.0)  # nearer to the camera (+y side)
        v2, n2, f2 = quad(-100.0, 40.0)
        v = np.vstack([v1, v2])
        n = np.vstack([n1, n2])
        f = np.vstack([f1, f2 + 4])
        attr = np.array([0, 0, 1, 1])
        frags = rasterize(v, n, None, f, attr, cam)
        nearest = nearest_per_pixel(frags)
        center = frags.pix[nearest] == (50 * 100 + 50)
        assert frags.face_attr[nearest][center].tolist() == [0]

    def test_deterministic_fragments(self):
        cam = ortho_like_camera()
        rs = np.random.RandomState(3)
        v = rs.uniform(-80, 80, (30, 3))
        n = np.tile([0.0, 1.0, 0.0], (30, 1))
        f = rs.randint(0, 30, (40, 3))
        a = rasterize(v, n, None, f, np.arange(40), cam)
        b = rasterize(v, n, None, f, np.arange(40), cam)
        assert np.array_equal(a.pix, b.pix)
        assert np.array_equal(a.depth, b.depth)
        assert np.array_equal(a.world, b.world)

    def test_near_plane_clipping(self):
        # A triangle straddling the near plane still produces fragments and
        # none of them project from behind the eye.
        cam = ortho_like_camera(distance=300.0, fov=40.0)
        v = np.array([[0.0, 280.0, 0.0], [-60.0, -400.0, -30.0], [60.0, -400.0, -30.0]])
        n = np.tile([0.0, 0.0, 1.0], (3, 1))
        f = np.array([[0, 1, 2]])
        frags = rasterize(v, n, None, f, np.zeros(1, int), cam)
        assert len(frags) > 0
        assert np.all(frags.depth >= 0.0) and np.all(frags.depth <= 1.0)

    def test_world_interpolation_matches_geometry(self):
        cam = ortho_like_camera()
        v, n, f = quad(0.0, 60.0)
        frags = rasterize(v, n, None, f, np.zeros(2, int), cam)
        # All interpolated world positions must stay on the quad plane y=0.
        assert np.max(np.abs(frags.world[:, 1])) < 1e-3


class TestFootprint:
    def build(self, margin=4):
        cam = ortho_like_camera()
        v, n, f = quad(0.0, 20.0)  # small quad in the middle
        frags = rasterize(v, n, None, f, np.zeros(2, int), cam)
        structure = np.full(len(frags), 3, np.int64)
        region = np.full(len(frags), 1, np.int64)
        return build_footprint(frags, structure, region, margin=margin)

    def test_single_target_ids(self):
        fp = self.build()
        assert fp.structure[50, 50] == 3
        assert fp.region[50, 50] == 1
        assert fp.structure[0, 0] == -1
        assert np.isinf(fp.depth[0, 0])

    def test_overlap_keeps_nearest(self):
        cam = ortho_like_camera()
        v1, n1, f1 = quad(80.0, 20.0)
        v2, n2, f2 = quad(-80.0, 30.0)
        v = np.vstack([v1, v2])
        n = np.vstack([n1, n2])
        f = np.vstack([f1, f2 + 4])
        frags = rasterize(v, n, None, f, np.array([0, 0, 1, 1]), cam)
        structure = frags.face_attr.copy()
        region = np.zeros(len(frags), np.int64)
        fp = build_footprint(frags, structure, region, margin=0)
        assert fp.structure[50, 50] == 0  # nearer quad wins

    def test_mask_dilation_against_brute_force(self):
        fp = self.build(margin=5)
        covered = fp.covered
        ys, xs = np.nonzero(covered)
        pts = np.stack([ys, xs], axis=1)
        # Brute-force distance transform on a band of probe pixels.
        rs = np.random.RandomState(0)
        probe_y = rs.randint(30, 70, 200)
        probe_x = rs.randint(30, 70, 200)
        for y, x in zip(probe_y, probe_x):
            d = np.sqrt(((pts - [y, x]) ** 2).sum(axis=1)).min()
            assert fp.mask[y, x] == (d <= 5)
            assert abs(fp.dist[y, x] - d) < 1e-9

    def test_margin_boundary_pixels(self):
        m = 6
        fp = self.build(margin=m)
        ys, xs = np.nonzero(fp.covered)
        x_right = xs.max()
        y_mid = ys[xs == x_right][0]
        assert fp.mask[y_mid, x_right + m - 1]
        assert not fp.mask[y_mid, x_right + m + 1]

    def test_pick_semantics(self):
        fp = self.build(margin=6)
        assert fp.pick(50, 50) == 3
        assert fp.pick(0, 0) == -1
        ys, xs = np.nonzero(fp.covered)
        x_right, y_mid = xs.max(), ys[xs == xs.max()][0]
        # Inside the margin band but outside the true footprint: no hit.
        assert fp.mask[y_mid, x_right + 2]
        assert fp.pick(x_right + 2, y_mid) == -1
        with pytest.raises(RenderError) as err:
            fp.pick(100, 0)
        assert err.value.code == "out-of-viewport"
