"""Footprint buffer, occlusion transparency and front-to-back depth peeling.

Information-carrying structures are rasterized once into the footprint
buffer (nearest depth + structure id + body-region id).  During compositing
a fragment turns semi-transparent only when it lies in front of the
footprint, belongs to the same body region and carries no information
itself; the effect fades out across a margin band around the footprint.
A coverage bit mask (the dilated footprint) limits the peeling passes after
the first one to pixels that can contain transparency at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import RenderConfig
from .raster import FragmentBuffer, nearest_per_pixel

PEEL_CAP_EXCEEDED = "peel-cap-exceeded"


class RenderError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class FootprintBuffer:
    """Image-space record of the information-carrying structures."""

    width: int
    height: int
    depth: np.ndarray  # (H, W) nearest target depth, +inf where empty
    structure: np.ndarray  # (H, W) int, -1 where empty
    region: np.ndarray  # (H, W) int, -1 where empty
    covered: np.ndarray  # (H, W) bool, true footprint
    mask: np.ndarray  # (H, W) bool, footprint dilated by the margin
    dist: np.ndarray  # (H, W) distance to the nearest covered pixel
    nearest_flat: np.ndarray  # (H*W,) linear index of that nearest pixel
    margin: int

    def pick(self, x: int, y: int) -> int:
        """Structure index at a pixel, -1 if empty.  Margin pixels are empty."""
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise RenderError("out-of-viewport", f"pixel ({x}, {y}) outside {self.width}x{self.height}")
        return int(self.structure[y, x])


def build_footprint(
    targets: FragmentBuffer,
    structure_of_fragment: np.ndarray,
    region_of_fragment: np.ndarray,
    margin: int,
) -> FootprintBuffer:
    """Reduce target fragments to the nearest-per-pixel footprint buffer."""
    width, height = targets.width, targets.height
    depth = np.full((height, width), np.inf)
    structure = np.full((height, width), -1, np.int64)
    region = np.full((height, width), -1, np.int64)

    idx = nearest_per_pixel(targets)
    if len(idx):
        pix = targets.pix[idx]
        depth.reshape(-1)[pix] = targets.depth[idx]
        structure.reshape(-1)[pix] = structure_of_fragment[idx]
        region.reshape(-1)[pix] = region_of_fragment[idx]

    covered = structure >= 0
    if covered.any():
        dist, (iy, ix) = ndimage.distance_transform_edt(~covered, return_indices=True)
        nearest_flat = (iy * width + ix).reshape(-1)
    else:
        dist = np.full((height, width), np.inf)
        nearest_flat = np.zeros(height * width, np.int64)
    mask = dist <= margin
    return FootprintBuffer(
        width=width,
        height=height,
        depth=depth,
        structure=structure,
        region=region,
        covered=covered,
        mask=mask,
        dist=np.asarray(dist, np.float64),
        nearest_flat=nearest_flat.astype(np.int64),
        margin=margin,
    )


@dataclass
class PeelResult:
    color: np.ndarray  # (H, W, 3) float in [0, 1]
    first_alpha: np.ndarray  # (H, W) opacity applied to the nearest fragment
    first_structure: np.ndarray  # (H, W) structure of the nearest fragment
    first_region: np.ndarray  # (H, W)
    exceeded_pixels: int  # masked pixels holding more fragments than the cap

    @property
    def errors(self) -> list[str]:
        return [PEEL_CAP_EXCEEDED] if self.exceeded_pixels else []


def occluder_alpha(
    footprint: FootprintBuffer,
    pix: np.ndarray,
    depth: np.ndarray,
    region: np.ndarray,
    carries_info: np.ndarray,
    config: RenderConfig,
    mask_override: np.ndarray | None = None,
) -> np.ndarray:
    """Per-fragment opacity under the occlusion-transparency rules."""
    mask = footprint.mask if mask_override is None else mask_override
    in_mask = mask.reshape(-1)[pix]
    ref = footprint.nearest_flat[pix]
    fp_depth = footprint.depth.reshape(-1)[ref]
    fp_region = footprint.region.reshape(-1)[ref]
    occludes = in_mask & (depth < fp_depth) & (region == fp_region) & ~carries_info

    d = footprint.dist.reshape(-1)[pix]
    if footprint.margin > 0:
        t = np.clip(d / footprint.margin, 0.0, 1.0)
        smooth = t * t * (3.0 - 2.0 * t)
        a0 = config.occluder_opacity_floor
        faded = a0 + (1.0 - a0) * smooth
        transparent = occludes & (d < footprint.margin)
    else:
        faded = np.full_like(d, config.occluder_opacity_floor)
        transparent = occludes & (d <= 0.0)
    return np.where(transparent, faded, 1.0)


def peel_and_blend(
    fragments: FragmentBuffer,
    rgb: np.ndarray,
    region: np.ndarray,
    structure: np.ndarray,
    carries_info: np.ndarray,
    footprint: FootprintBuffer,
    config: RenderConfig,
    force_full_mask: bool = False,
) -> PeelResult:
    """Front-to-back peeling of the fragment lists onto the background.

    Pass r extracts, per pixel, the r-th nearest fragment (ties broken by
    submission order) and blends it with the accumulated transmittance.
    Pixels outside the coverage mask stop after the first pass; their
    nearest fragment is opaque by construction, so the restriction does not
    change any output value.
    """
    width, height = fragments.width, fragments.height
    n_px = width * height
    bg = np.asarray(config.background, np.float64)

    color = np.zeros((n_px, 3))
    transmittance = np.ones(n_px)
    first_alpha = np.ones((height, width))
    first_structure = np.full((height, width), -1, np.int64)
    first_region = np.full((height, width), -1, np.int64)
    exceeded = 0

    if len(fragments):
        mask_override = np.ones((height, width), bool) if force_full_mask else None
        alpha = occluder_alpha(
            footprint,
            fragments.pix,
            fragments.depth,
            region,
            carries_info,
            config,
            mask_override=mask_override,
        )

        order = np.lexsort((fragments.seq, fragments.depth, fragments.pix))
        pix_s = fragments.pix[order]
        alpha_s = alpha[order]
        rgb_s = np.asarray(rgb, np.float64)[order]
        struct_s = structure[order]
        region_s = region[order]

        group_first = np.ones(len(order), bool)
        group_first[1:] = pix_s[1:] != pix_s[:-1]
        first_pos = np.nonzero(group_first)[0]
        rank = np.arange(len(order)) - np.repeat(first_pos, np.diff(np.append(first_pos, len(order))))

        eff_mask = (np.ones((height, width), bool) if force_full_mask else footprint.mask).reshape(-1)
        frag_count = np.bincount(pix_s, minlength=n_px)
        exceeded = int(np.count_nonzero((frag_count > config.peel_layer_cap) & eff_mask))

        for r in range(config.peel_layer_cap):
            sel = rank == r
            if r > 0:
                sel &= eff_mask[pix_s]
            if not sel.any():
                break
            px = pix_s[sel]
            a = alpha_s[sel]
            contribution = (transmittance[px] * a)[:, None] * rgb_s[sel]
            color[px] += contribution
            transmittance[px] *= 1.0 - a
            if r == 0:
                flat_a = first_alpha.reshape(-1)
                flat_a[px] = a
                first_structure.reshape(-1)[px] = struct_s[sel]
                first_region.reshape(-1)[px] = region_s[sel]

    color += transmittance[:, None] * bg
    return PeelResult(
        color=color.reshape(height, width, 3),
        first_alpha=first_alpha,
        first_structure=first_structure,
        first_region=first_region,
        exceeded_pixels=exceeded,
    )


def over_composite(stack: list[tuple[np.ndarray, float]], background: np.ndarray) -> np.ndarray:
    """Analytic front-to-back over-composition of one pixel's (rgb, a) stack."""
    out = np.zeros(3)
    t = 1.0
    for rgb, a in stack:
        out += t * a * np.asarray(rgb, np.float64)
        t *= 1.0 - a
    return out + t * np.asarray(background, np.float64)
