"""Tunable rendering parameters with spec'd defaults."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RenderConfig:
    peel_layer_cap: int = 8
    occluder_opacity_floor: float = 0.05  # alpha applied right over a target
    margin_px: int = 12  # transparency falloff band around the footprint
    background: tuple[float, float, float] = (0.10, 0.11, 0.13)
    light_direction: tuple[float, float, float] = (-0.35, -0.65, -0.7)
    ambient: float = 0.35
    diffuse: float = 0.65
    proxy_radius_scale: float = 2.4
    proxy_min_radius: float = 18.0  # mm
    proxy_extent_threshold: float = 600.0  # px^2 below which a proxy is used
    texture_seed: int = 7
    natural_albedos: dict = field(
        default_factory=lambda: {
            "skin": (0.86, 0.71, 0.59),
            "muscle": (0.58, 0.27, 0.25),
            "tendon": (0.85, 0.84, 0.74),
            "organ": (0.66, 0.44, 0.42),
            "dermatome": (0.86, 0.71, 0.59),
            "region-proxy-site": (0.66, 0.44, 0.42),
        }
    )

    def __post_init__(self):
        if self.peel_layer_cap < 2:
            raise ValueError("peel layer cap must be at least 2")
        if self.margin_px < 0:
            raise ValueError("margin must be non-negative")
        if not 0.0 <= self.occluder_opacity_floor <= 1.0:
            raise ValueError("opacity floor must lie in [0,1]")
