"""Scene assembly and frame rendering.

One geometry pass rasterizes the whole avatar into fragment lists.  Fragments
on a host mesh are reassigned to painted substructures (dermatomes) or proxy
disks, styled targets get their encoded appearance and everything is fed
through the footprint buffer and depth peeling.  Rendering is bit
deterministic for equal inputs.
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .anatomy import Avatar, ProxyConfig, screen_extent
from .mapping import (
    NOISE_TEXTURE,
    NORMAL_PERTURBATION,
    MappingSpec,
    VisualStyle,
    alternation_schedule,
    encode_observation,
    validate_mapping,
)
from .records import Observation, PatientRecord, RecordError, ViewRegistry, select_view_data
from .render.camera import Camera
from .render.config import RenderConfig
from .render.noise import (
    apply_normal_perturbation,
    cycloidal_normal_perturbation,
    perlin_noise3,
)
from .render.peel import FootprintBuffer, PeelResult, build_footprint, peel_and_blend
from .render.proxy import ProxyError, ProxyPlacement, place_proxy
from .render.raster import FragmentBuffer, rasterize


@dataclass
class Target:
    structure_id: str
    observation: Observation
    style: VisualStyle
    proxy: ProxyPlacement | None = None


@dataclass
class RenderOutput:
    color: np.ndarray  # (H, W, 3) float in [0, 1]
    footprint: FootprintBuffer
    peel: PeelResult
    targets: list[Target]
    structure_ids: list[str] = field(default_factory=list)  # index -> id

    @property
    def errors(self) -> list[str]:
        return self.peel.errors

    def to_rgba_bytes(self) -> np.ndarray:
        rgb = np.clip(np.rint(self.color * 255.0), 0, 255).astype(np.uint8)
        alpha = np.full(rgb.shape[:2] + (1,), 255, np.uint8)
        return np.concatenate([rgb, alpha], axis=2)

    def png_bytes(self) -> bytes:
        out = io.BytesIO()
        Image.fromarray(self.to_rgba_bytes(), mode="RGBA").save(out, format="PNG")
        return out.getvalue()


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    rgb = np.empty(h.shape + (3,))
    for idx, (r, g, b) in enumerate(((v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q))):
        m = i == idx
        rgb[m, 0], rgb[m, 1], rgb[m, 2] = r[m], g[m], b[m]
    return rgb


class Engine:
    """Binds avatar, view registry, mapping and render config into a renderer."""

    def __init__(
        self,
        avatar: Avatar,
        registry: ViewRegistry,
        spec: MappingSpec,
        config: RenderConfig | None = None,
    ):
        self.avatar = avatar
        self.registry = registry
        self.spec = spec
        self.config = config or RenderConfig()
        self.validation = validate_mapping(spec, registry)
        self._proxy_cache: dict[str, ProxyPlacement] = {}
        self._conflict_groups = {
            c.spatial_ref: set(c.categories)
            for c in self.validation.spatial_conflicts
        }
        self._skin_geometry = None

    # ------------------------------------------------------------------
    # Scene assembly

    def active_observations(
        self,
        record: PatientRecord,
        view_name: str | None,
        date: dt.date,
        category_filter: set[str] | None,
        phase: int,
        selection: str | None,
    ) -> list[Observation]:
        """View-filtered observations with spatial conflicts resolved.

        Structures claimed by several categories at once show only the
        alternation winner of the current phase (or the user's selection).
        """
        view = self.registry.view(view_name)
        exam = record.examination_on(date)
        observations = select_view_data(exam, view)
        if category_filter is not None:
            observations = [o for o in observations if o.category_name in category_filter]

        by_structure: dict[str, list[Observation]] = {}
        for o in observations:
            by_structure.setdefault(o.structure_ref, []).append(o)
        active: list[Observation] = []
        for structure_ref in sorted(by_structure):
            group = by_structure[structure_ref]
            if len(group) == 1:
                active.append(group[0])
                continue
            names = sorted(o.category_name for o in group)
            chosen = alternation_schedule(
                names, selection if selection in names else None, phase
            )
            active.append(next(o for o in group if o.category_name == chosen))
        return active

    def _proxy_placement(self, structure_id: str) -> ProxyPlacement:
        if structure_id not in self._proxy_cache:
            if self._skin_geometry is None:
                self._skin_geometry = self.avatar.skin_geometry()
            skin_v, skin_f = self._skin_geometry
            vertices = self.avatar.structure_vertices(structure_id)
            cfg = self.avatar.proxy_configs.get(structure_id)
            if cfg is None:
                # Unconfigured structure: project through the nearest skin
                # point, which lands the disk on the body side closest to it.
                centroid = vertices.mean(axis=0)
                nearest = skin_v[np.argmin(((skin_v - centroid) ** 2).sum(axis=1))]
                direction = centroid - nearest
                direction /= np.linalg.norm(direction)
                cfg = ProxyConfig(direction=tuple(direction))
            self._proxy_cache[structure_id] = place_proxy(
                structure_id,
                vertices,
                skin_v,
                skin_f,
                direction=cfg.direction,
                config=self.config,
                lookat_shift=cfg.lookat_shift,
                near_side=cfg.near_side,
            )
        return self._proxy_cache[structure_id]

    def build_targets(self, observations: list[Observation], camera: Camera) -> list[Target]:
        targets = []
        for obs in observations:
            if obs.structure_ref not in self.avatar.structures:
                raise RecordError("unknown-structure", f"avatar has no structure {obs.structure_ref!r}")
            style = encode_observation(obs, self.spec, self.registry)
            structure = self.avatar.structures[obs.structure_ref]
            proxy = None
            if not structure.hosted:
                extent = screen_extent(self.avatar, obs.structure_ref, camera)
                if extent < self.config.proxy_extent_threshold:
                    proxy = self._proxy_placement(obs.structure_ref)
            targets.append(Target(obs.structure_ref, obs, style, proxy))
        return targets

    # ------------------------------------------------------------------
    # Fragment pipeline

    def _rasterize_avatar(self, camera: Camera) -> FragmentBuffer:
        positions, normals, uvs, faces, attrs = [], [], [], [], []
        offset = 0
        for mesh_id in sorted(self.avatar.meshes):
            mesh = self.avatar.meshes[mesh_id]
            positions.append(mesh.positions)
            normals.append(mesh.normals)
            uvs.append(mesh.uvs)
            faces.append(mesh.faces + offset)
            attrs.append(
                np.asarray([self.avatar.structure_index(g) for g in mesh.face_group], np.int64)
            )
            offset += len(mesh.positions)
        return rasterize(
            np.vstack(positions),
            np.vstack(normals),
            np.vstack(uvs),
            np.vstack(faces),
            np.concatenate(attrs),
            camera,
        )

    def _assign_structures(self, frags: FragmentBuffer, targets: list[Target]) -> np.ndarray:
        """Per-fragment structure index after label and proxy reassignment."""
        assigned = frags.face_attr.copy()
        kinds = np.asarray([self.avatar.structure_at(i).kind for i in range(self.avatar.structure_count)])
        on_skin = kinds[assigned] == "skin"

        # Painted substructures become the active structure only when styled;
        # unpainted and unstyled skin stays skin.
        styled_ids = {t.structure_id for t in targets}
        for mesh_id, labels in self.avatar.index_textures.items():
            table = self.avatar.label_lookup(mesh_id)
            h, w = labels.shape
            sel = on_skin.copy()
            if not sel.any():
                continue
            cols = np.clip((frags.uv[sel, 0] * w).astype(np.int64), 0, w - 1)
            rows = np.clip((frags.uv[sel, 1] * h).astype(np.int64), 0, h - 1)
            sub = table[labels[rows, cols]]
            keep = np.asarray([
                s >= 0 and self.avatar.structure_id_at(s) in styled_ids for s in sub
            ])
            idx = np.nonzero(sel)[0][keep]
            assigned[idx] = sub[keep]

        # Proxy disks override painted labels on the skin surface.
        for t in targets:
            if t.proxy is None:
                continue
            inside = t.proxy.contains(frags.world[on_skin])
            idx = np.nonzero(on_skin)[0][inside]
            assigned[idx] = self.avatar.structure_index(t.structure_id)
        return assigned

    def _shade(
        self,
        frags: FragmentBuffer,
        assigned: np.ndarray,
        targets: list[Target],
        camera: Camera,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Fragment colors (N, 3) and the carries-information flags."""
        n_structures = self.avatar.structure_count
        albedo_table = np.zeros((n_structures, 3))
        for i in range(n_structures):
            kind = self.avatar.structure_at(i).kind
            albedo_table[i] = self.config.natural_albedos.get(kind, (0.7, 0.7, 0.7))
        color = albedo_table[assigned]

        normals = frags.normal.astype(np.float64)
        carries = np.zeros(len(frags), bool)

        for t in targets:
            mask = assigned == self.avatar.structure_index(t.structure_id)
            carries |= mask
            if not mask.any():
                continue
            style = t.style
            h = np.full(mask.sum(), (style.hue.hue_deg or 0.0) / 360.0)
            s = np.full(mask.sum(), style.sat_bright.sat if style.sat_bright else 0.8)
            v = np.full(mask.sum(), style.sat_bright.brightness if style.sat_bright else 0.8)
            world = frags.world[mask].astype(np.float64)
            for layer in style.texture_layers:
                if layer.kind == NOISE_TEXTURE:
                    noise = perlin_noise3(
                        world, layer.frequency, layer.amplitude,
                        seed=self.config.texture_seed + (layer.level or 0),
                    )
                    v = np.clip(v * (1.0 + noise), 0.0, 1.0)
                elif layer.kind == NORMAL_PERTURBATION:
                    offsets = cycloidal_normal_perturbation(world, layer.frequency, layer.amplitude)
                    normals[mask] = apply_normal_perturbation(normals[mask], offsets)
            color[mask] = _hsv_to_rgb(h, s, v)

        # Single directional light plus ambient; normals flipped toward the
        # eye so closed surfaces shade on both sides.
        light = np.asarray(self.config.light_direction, np.float64)
        light = light / np.linalg.norm(light)
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        lengths[lengths == 0.0] = 1.0
        normals = normals / lengths
        to_eye = camera.position[None, :] - frags.world.astype(np.float64)
        flip = np.einsum("ij,ij->i", normals, to_eye) < 0.0
        normals[flip] = -normals[flip]
        lambert = np.clip(-(normals @ light), 0.0, None)
        intensity = self.config.ambient + self.config.diffuse * lambert
        return color * intensity[:, None], carries

    def render(
        self,
        record: PatientRecord,
        view_name: str | None,
        date: dt.date,
        camera: Camera,
        category_filter: set[str] | None = None,
        phase: int = 0,
        selection: str | None = None,
        force_full_mask: bool = False,
    ) -> RenderOutput:
        observations = self.active_observations(
            record, view_name, date, category_filter, phase, selection
        )
        targets = self.build_targets(observations, camera)

        frags = self._rasterize_avatar(camera)
        assigned = self._assign_structures(frags, targets)
        color, carries = self._shade(frags, assigned, targets, camera)

        region_table = np.asarray(
            [
                self.avatar.region_index(self.avatar.structure_at(i).body_region_id)
                for i in range(self.avatar.structure_count)
            ],
            np.int64,
        )
        regions = region_table[assigned]

        target_frags = FragmentBuffer(width=frags.width, height=frags.height)
        sel = np.nonzero(carries)[0]
        target_frags.pix = frags.pix[sel]
        target_frags.depth = frags.depth[sel]
        target_frags.world = frags.world[sel]
        target_frags.normal = frags.normal[sel]
        target_frags.uv = frags.uv[sel]
        target_frags.face_attr = assigned[sel]
        target_frags.seq = frags.seq[sel]
        footprint = build_footprint(target_frags, assigned[sel], regions[sel], self.config.margin_px)

        peel = peel_and_blend(
            frags, color, regions, assigned, carries, footprint, self.config,
            force_full_mask=force_full_mask,
        )
        return RenderOutput(
            color=peel.color,
            footprint=footprint,
            peel=peel,
            targets=targets,
            structure_ids=[self.avatar.structure_id_at(i) for i in range(self.avatar.structure_count)],
        )

    def pick(self, output: RenderOutput, x: int, y: int) -> str | None:
        idx = output.footprint.pick(x, y)
        return None if idx < 0 else self.avatar.structure_id_at(idx)
