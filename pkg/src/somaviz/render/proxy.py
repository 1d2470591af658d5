"""Skin-surface proxy disks for structures too small to style directly.

An orthographic projector looks along a configured direction at the PCA
centroid of the target.  Skin geometry is rasterized into min/max depth
planes over the projector footprint; the midpoint depth separates the body
side facing the projector from the far side, so the disk never bleeds
through to the opposite surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RenderConfig
from .pca import compute_pca


class ProxyError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ProxyPlacement:
    structure_id: str
    lookat: np.ndarray  # (3,) projector aim point
    axes: np.ndarray  # (3, 3) rows right/up/forward, orthonormal
    radius: float  # footprint radius in mm
    depth_threshold: float  # along the forward axis, origin at the lookat
    near_side: bool  # keep skin on the projector side of the threshold

    def local_coords(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, np.float64) - self.lookat) @ self.axes.T

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True for world points inside the disk on the surviving side."""
        local = self.local_coords(points)
        radial = local[:, 0] ** 2 + local[:, 1] ** 2 <= self.radius**2
        side = local[:, 2] <= self.depth_threshold if self.near_side else local[:, 2] >= self.depth_threshold
        return radial & side


def _projector_axes(direction: np.ndarray) -> np.ndarray:
    fwd = np.asarray(direction, np.float64)
    norm = np.linalg.norm(fwd)
    if norm == 0:
        raise ProxyError("bad-projector", "projector direction must be non-zero")
    fwd = fwd / norm
    up_hint = np.array([0.0, 0.0, 1.0]) if abs(fwd[2]) < 0.99 else np.array([0.0, 1.0, 0.0])
    right = np.cross(up_hint, fwd)
    right /= np.linalg.norm(right)
    up = np.cross(fwd, right)
    return np.stack([right, up, fwd])


def _skin_depth_range(
    placement_axes: np.ndarray,
    lookat: np.ndarray,
    radius: float,
    skin_positions: np.ndarray,
    skin_faces: np.ndarray,
    resolution: int = 64,
) -> tuple[float, float]:
    """Min/max projector-space skin depth inside the circular footprint.

    Triangles are rasterized orthographically on a small grid covering the
    footprint; depth interpolates linearly, which is exact per planar face.
    """
    local = (np.asarray(skin_positions, np.float64) - lookat) @ placement_axes.T
    tri = local[np.asarray(skin_faces, np.int64)]  # (F, 3, 3)

    lo = tri.min(axis=1)
    hi = tri.max(axis=1)
    near_disk = (lo[:, 0] <= radius) & (hi[:, 0] >= -radius) & (lo[:, 1] <= radius) & (hi[:, 1] >= -radius)
    tri = tri[near_disk]
    if len(tri) == 0:
        raise ProxyError("no-skin-in-footprint", "projector footprint misses the skin")

    step = 2.0 * radius / resolution
    centers = -radius + (np.arange(resolution) + 0.5) * step
    gx, gy = np.meshgrid(centers, centers)
    in_disk = (gx**2 + gy**2) <= radius**2
    px = gx[in_disk]
    py = gy[in_disk]

    dmin, dmax = np.inf, -np.inf
    for a, b, c in tri:
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area) < 1e-12:
            continue
        e0 = (c[0] - b[0]) * (py - b[1]) - (c[1] - b[1]) * (px - b[0])
        e1 = (a[0] - c[0]) * (py - c[1]) - (a[1] - c[1]) * (px - c[0])
        e2 = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
        l0, l1, l2 = e0 / area, e1 / area, e2 / area
        hit = (l0 >= 0) & (l1 >= 0) & (l2 >= 0)
        if not hit.any():
            continue
        z = l0[hit] * a[2] + l1[hit] * b[2] + l2[hit] * c[2]
        dmin = min(dmin, float(z.min()))
        dmax = max(dmax, float(z.max()))
    if not np.isfinite(dmin):
        raise ProxyError("no-skin-in-footprint", "no skin fragment inside the footprint")
    return dmin, dmax


def place_proxy(
    structure_id: str,
    target_vertices: np.ndarray,
    skin_positions: np.ndarray,
    skin_faces: np.ndarray,
    direction,
    config: RenderConfig,
    lookat_shift=(0.0, 0.0, 0.0),
    near_side: bool = True,
) -> ProxyPlacement:
    """Place a proxy disk over a small target structure.

    ``direction`` is the projection direction; ``lookat_shift`` moves the aim
    point along the target's PCA axes (mm), e.g. toward a muscle attachment.
    """
    frame = compute_pca(target_vertices)
    lookat = frame.centroid + np.asarray(lookat_shift, np.float64) @ frame.axes
    radius = max(config.proxy_radius_scale * float(frame.extents.max()), config.proxy_min_radius)
    axes = _projector_axes(direction)
    dmin, dmax = _skin_depth_range(axes, lookat, radius, skin_positions, skin_faces)
    threshold = 0.5 * (dmin + dmax)
    return ProxyPlacement(
        structure_id=structure_id,
        lookat=lookat,
        axes=axes,
        radius=radius,
        depth_threshold=threshold,
        near_side=near_side,
    )
