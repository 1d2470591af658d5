"""Perspective camera with orbit parametrization around a target point."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

WORLD_UP = np.array([0.0, 0.0, 1.0])


class CameraError(ValueError):
    pass


@dataclass(frozen=True)
class Camera:
    """Orbit camera: position derived from (azimuth, elevation, distance).

    Azimuth 0 looks from the +y side (the avatar's front), increasing toward
    +x; elevation raises the eye above the target.  Units are millimetres and
    degrees; the viewport is (width, height) in pixels.
    """

    target: tuple[float, float, float]
    azimuth_deg: float
    elevation_deg: float
    distance: float
    fov_y_deg: float = 35.0
    near: float = 50.0
    far: float = 20000.0
    viewport: tuple[int, int] = (640, 480)

    def __post_init__(self):
        if not (1.0 < self.fov_y_deg < 170.0):
            raise CameraError(f"field of view out of range: {self.fov_y_deg}")
        if not (0.0 < self.near < self.far):
            raise CameraError("near/far planes invalid")
        if self.distance <= 0:
            raise CameraError("distance must be positive")

    @property
    def position(self) -> np.ndarray:
        az = math.radians(self.azimuth_deg)
        el = math.radians(max(-89.0, min(89.0, self.elevation_deg)))
        d = self.distance
        offset = np.array(
            [d * math.cos(el) * math.sin(az), d * math.cos(el) * math.cos(az), d * math.sin(el)]
        )
        return np.asarray(self.target, dtype=np.float64) + offset

    def orbit(self, d_azimuth: float = 0.0, d_elevation: float = 0.0, zoom: float = 1.0) -> "Camera":
        if zoom <= 0:
            raise CameraError("zoom factor must be positive")
        return replace(
            self,
            azimuth_deg=(self.azimuth_deg + d_azimuth) % 360.0,
            elevation_deg=max(-89.0, min(89.0, self.elevation_deg + d_elevation)),
            distance=self.distance * zoom,
        )

    def view_matrix(self) -> np.ndarray:
        eye = self.position
        fwd = np.asarray(self.target, dtype=np.float64) - eye
        fwd = fwd / np.linalg.norm(fwd)
        up_hint = WORLD_UP if abs(fwd @ WORLD_UP) < 0.999 else np.array([0.0, 1.0, 0.0])
        right = np.cross(fwd, up_hint)
        right = right / np.linalg.norm(right)
        up = np.cross(right, fwd)
        view = np.eye(4)
        view[0, :3], view[1, :3], view[2, :3] = right, up, -fwd
        view[0, 3], view[1, 3], view[2, 3] = -right @ eye, -up @ eye, fwd @ eye
        return view

    def projection_matrix(self) -> np.ndarray:
        aspect = self.viewport[0] / self.viewport[1]
        t = math.tan(math.radians(self.fov_y_deg) / 2.0)
        n, f = self.near, self.far
        proj = np.zeros((4, 4))
        proj[0, 0] = 1.0 / (aspect * t)
        proj[1, 1] = 1.0 / t
        proj[2, 2] = -(f + n) / (f - n)
        proj[2, 3] = -2.0 * f * n / (f - n)
        proj[3, 2] = -1.0
        return proj

    def to_json(self) -> dict:
        return {
            "target": list(self.target),
            "azimuth": self.azimuth_deg,
            "elevation": self.elevation_deg,
            "distance": self.distance,
            "fovY": self.fov_y_deg,
            "near": self.near,
            "far": self.far,
            "viewport": list(self.viewport),
        }

    @staticmethod
    def from_json(doc: dict) -> "Camera":
        return Camera(
            target=tuple(doc["target"]),
            azimuth_deg=doc["azimuth"],
            elevation_deg=doc["elevation"],
            distance=doc["distance"],
            fov_y_deg=doc.get("fovY", 35.0),
            near=doc.get("near", 50.0),
            far=doc.get("far", 20000.0),
            viewport=tuple(doc.get("viewport", (640, 480))),
        )


# Named presets used by the CLI, fixtures and the session protocol.  The
# avatar stands on z=0, faces +y and is about 1.75 m tall.
CAMERA_PRESETS: dict[str, Camera] = {
    "front": Camera(target=(0.0, 0.0, 900.0), azimuth_deg=0.0, elevation_deg=4.0, distance=3200.0),
    "back": Camera(target=(0.0, 0.0, 900.0), azimuth_deg=180.0, elevation_deg=4.0, distance=3200.0),
    "left": Camera(target=(0.0, 0.0, 900.0), azimuth_deg=90.0, elevation_deg=4.0, distance=3200.0),
    "right": Camera(target=(0.0, 0.0, 900.0), azimuth_deg=270.0, elevation_deg=4.0, distance=3200.0),
    "legs-front": Camera(target=(0.0, 0.0, 420.0), azimuth_deg=0.0, elevation_deg=6.0, distance=1700.0),
    "knees": Camera(target=(0.0, 0.0, 460.0), azimuth_deg=0.0, elevation_deg=2.0, distance=900.0, fov_y_deg=28.0),
    "right-shin": Camera(target=(-105.0, 20.0, 290.0), azimuth_deg=-14.0, elevation_deg=8.0, distance=700.0, fov_y_deg=26.0),
    "calves-rear": Camera(target=(-100.0, -30.0, 420.0), azimuth_deg=174.0, elevation_deg=6.0, distance=1500.0, fov_y_deg=30.0),
}


def camera_preset(name: str, viewport: tuple[int, int] | None = None) -> Camera:
    if name not in CAMERA_PRESETS:
        raise CameraError(f"unknown camera preset {name!r}; known: {sorted(CAMERA_PRESETS)}")
    cam = CAMERA_PRESETS[name]
    if viewport is not None:
        cam = replace(cam, viewport=tuple(viewport))
    return cam
