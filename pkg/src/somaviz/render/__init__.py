"""Deterministic CPU rendering pipeline."""

from .camera import CAMERA_PRESETS, Camera, CameraError, camera_preset  # noqa: F401
from .config import RenderConfig  # noqa: F401
from .noise import (  # noqa: F401
    apply_normal_perturbation,
    cycloidal_normal_perturbation,
    perlin_noise3,
)
from .pca import PcaError, PcaFrame, compute_pca  # noqa: F401
from .peel import (  # noqa: F401
    FootprintBuffer,
    PeelResult,
    RenderError,
    build_footprint,
    occluder_alpha,
    over_composite,
    peel_and_blend,
)
from .proxy import ProxyError, ProxyPlacement, place_proxy  # noqa: F401
from .raster import FragmentBuffer, covered_pixel_count, nearest_per_pixel, rasterize  # noqa: F401
