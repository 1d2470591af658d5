"""Procedural solid textures evaluated in object space.

Gradient noise varies surface brightness; the cycloidal field perturbs
shading normals.  Both take raw millimetre positions, so textures stay
distortion-free regardless of the mesh parametrization.
"""

from __future__ import annotations

import numpy as np

# Perlin's 12 edge gradients, normalized to unit length so the noise value
# stays strictly inside [-1, 1] (3D bound is sqrt(3)/2).
_EDGE = np.array(
    [
        [1, 1, 0], [-1, 1, 0], [1, -1, 0], [-1, -1, 0],
        [1, 0, 1], [-1, 0, 1], [1, 0, -1], [-1, 0, -1],
        [0, 1, 1], [0, -1, 1], [0, 1, -1], [0, -1, -1],
        [1, 1, 0], [-1, 1, 0], [0, -1, 1], [0, -1, -1],
    ],
    dtype=np.float64,
) / np.sqrt(2.0)


def _permutation(seed: int) -> np.ndarray:
    perm = np.random.RandomState(seed & 0x7FFFFFFF).permutation(256)
    return np.concatenate([perm, perm]).astype(np.int64)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin_noise3(points, frequency: float, amplitude: float, seed: int = 0) -> np.ndarray:
    """Classic 3D gradient noise in [-amplitude, amplitude].

    Zero at every integer lattice point of the frequency-scaled domain and
    C1-continuous everywhere; deterministic in (points, seed).
    """
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    p = np.asarray(points, dtype=np.float64) * frequency
    single = p.ndim == 1
    p = np.atleast_2d(p)

    perm = _permutation(seed)
    cell = np.floor(p).astype(np.int64)
    frac = p - cell
    cell &= 255

    u, v, w = _fade(frac[:, 0]), _fade(frac[:, 1]), _fade(frac[:, 2])

    def grad_dot(dx: int, dy: int, dz: int) -> np.ndarray:
        h = perm[perm[perm[cell[:, 0] + dx] + cell[:, 1] + dy] + cell[:, 2] + dz] & 15
        offs = frac - np.array([dx, dy, dz], dtype=np.float64)
        return np.einsum("ij,ij->i", _EDGE[h], offs)

    n000 = grad_dot(0, 0, 0)
    n100 = grad_dot(1, 0, 0)
    n010 = grad_dot(0, 1, 0)
    n110 = grad_dot(1, 1, 0)
    n001 = grad_dot(0, 0, 1)
    n101 = grad_dot(1, 0, 1)
    n011 = grad_dot(0, 1, 1)
    n111 = grad_dot(1, 1, 1)

    nx00 = n000 + u * (n100 - n000)
    nx10 = n010 + u * (n110 - n010)
    nx01 = n001 + u * (n101 - n001)
    nx11 = n011 + u * (n111 - n011)
    nxy0 = nx00 + v * (nx10 - nx00)
    nxy1 = nx01 + v * (nx11 - nx01)
    out = amplitude * (nxy0 + w * (nxy1 - nxy0))
    return out[0] if single else out


def cycloidal_normal_perturbation(points, frequency: float, amplitude: float) -> np.ndarray:
    """Periodic normal offset derived from cycloid-arch height bumps.

    The offset is the (sign-flipped) gradient of per-axis 1-cos arches, so it
    repeats every 1/frequency along each axis and vanishes for amplitude 0.
    Callers add it to the shading normal and renormalize.
    """
    if not 0.0 <= amplitude <= 1.0:
        raise ValueError("amplitude must lie in [0, 1]")
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    phase = 2.0 * np.pi * frequency * p
    out = -amplitude * np.sin(phase)
    return out[0] if single else out


def apply_normal_perturbation(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Tangent-plane projection of the offsets, renormalized to unit length."""
    n = np.asarray(normals, dtype=np.float64)
    tang = offsets - np.einsum("ij,ij->i", offsets, n)[:, None] * n
    out = n + tang
    norm = np.linalg.norm(out, axis=1, keepdims=True)
    norm[norm == 0.0] = 1.0
    return out / norm
