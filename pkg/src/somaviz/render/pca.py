"""Principal component analysis of vertex clouds for proxy placement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SIGN_EPS = 1e-12


class PcaError(ValueError):
    pass


@dataclass(frozen=True)
class PcaFrame:
    centroid: np.ndarray  # (3,)
    axes: np.ndarray  # (3, 3) rows, descending spread, right-handed
    extents: np.ndarray  # (3,) standard deviation along each axis


def _fix_sign(axis: np.ndarray) -> np.ndarray:
    # Canonical eigenvector orientation: first non-zero component along
    # +x, then +y, then +z must be non-negative.
    for c in range(3):
        if axis[c] > _SIGN_EPS:
            return axis
        if axis[c] < -_SIGN_EPS:
            return -axis
    return axis


def compute_pca(vertices) -> PcaFrame:
    """Centroid, ordered principal axes and per-axis spread of a point cloud.

    Axes are eigenvectors of the covariance matrix sorted by descending
    eigenvalue.  The first two axes are sign-fixed toward +x/+y/+z; the third
    is their cross product, which keeps the frame right-handed.
    """
    pts = np.asarray(vertices, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise PcaError("empty-input")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / pts.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    axes = eigvecs[:, order].T

    axes[0] = _fix_sign(axes[0])
    axes[1] = _fix_sign(axes[1])
    axes[2] = np.cross(axes[0], axes[1])
    return PcaFrame(centroid=centroid, axes=axes, extents=np.sqrt(eigvals))
