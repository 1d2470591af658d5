"""Labeled hierarchical avatar: meshes, body regions, substructure lookup.

Structures either own mesh geometry (a named face group of a mesh) or live
as painted labels in an index texture on a host mesh (dermatomes on skin).
Index textures are categorical label images and are always sampled nearest,
never filtered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .render.camera import Camera
from .render.raster import covered_pixel_count, rasterize

STRUCTURE_KINDS = ("muscle", "dermatome", "tendon", "skin", "organ", "region-proxy-site")


class AvatarError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Structure:
    id: str
    name: str
    kind: str
    body_region_id: str
    mesh_id: str | None = None  # own geometry: face group in this mesh
    host_mesh_id: str | None = None  # painted: label on this mesh
    label: int | None = None

    def __post_init__(self):
        own = self.mesh_id is not None
        hosted = self.host_mesh_id is not None and self.label is not None
        if own == hosted:
            raise AvatarError("malformed-manifest", f"{self.id}: exactly one geometry variant required")
        if self.kind not in STRUCTURE_KINDS:
            raise AvatarError("malformed-manifest", f"{self.id}: unknown kind {self.kind!r}")

    @property
    def hosted(self) -> bool:
        return self.host_mesh_id is not None


@dataclass
class Mesh:
    positions: np.ndarray  # (V, 3) mm
    normals: np.ndarray  # (V, 3) unit
    uvs: np.ndarray  # (V, 2)
    faces: np.ndarray  # (F, 3) vertex indices
    face_group: list[str]  # structure id per face

    def validate(self):
        if self.faces.size and self.faces.max() >= len(self.positions):
            raise AvatarError("malformed-manifest", "face index out of range")
        norms = np.linalg.norm(self.normals, axis=1)
        if len(norms) and (np.abs(norms - 1.0) > 1e-4).any():
            raise AvatarError("malformed-manifest", "normals must be unit length")
        if len(self.face_group) != len(self.faces):
            raise AvatarError("unlabeled-triangle", "every face needs a structure group")


@dataclass
class ProxyConfig:
    direction: tuple[float, float, float]
    lookat_shift: tuple[float, float, float] = (0.0, 0.0, 0.0)
    near_side: bool = True


@dataclass
class Avatar:
    meshes: dict[str, Mesh]
    structures: dict[str, Structure]
    regions: dict[str, str | None]  # region id -> parent id (None for the root)
    index_textures: dict[str, np.ndarray] = field(default_factory=dict)  # mesh id -> (H, W) labels
    proxy_configs: dict[str, ProxyConfig] = field(default_factory=dict)

    def __post_init__(self):
        self._structure_order = sorted(self.structures)
        self._structure_idx = {s: i for i, s in enumerate(self._structure_order)}
        self._region_order = sorted(self.regions)
        self._region_idx = {r: i for i, r in enumerate(self._region_order)}
        self.validate()

    # --- integer handles used by the raster buffers

    def structure_index(self, structure_id: str) -> int:
        return self._structure_idx[structure_id]

    def structure_at(self, index: int) -> Structure:
        return self.structures[self._structure_order[index]]

    def structure_id_at(self, index: int) -> str:
        return self._structure_order[index]

    def region_index(self, region_id: str) -> int:
        return self._region_idx[region_id]

    @property
    def structure_count(self) -> int:
        return len(self._structure_order)

    # --- validation

    def validate(self):
        root_candidates = [r for r, p in self.regions.items() if p is None]
        if len(root_candidates) != 1:
            raise AvatarError("dangling-region", "region hierarchy must have exactly one root")
        for region, parent in self.regions.items():
            seen = {region}
            node = parent
            while node is not None:
                if node not in self.regions:
                    raise AvatarError("dangling-region", f"region {node!r} undefined")
                if node in seen:
                    raise AvatarError("dangling-region", f"region cycle at {node!r}")
                seen.add(node)
                node = self.regions[node]
        for s in self.structures.values():
            if s.body_region_id not in self.regions:
                raise AvatarError("dangling-region", f"{s.id}: region {s.body_region_id!r} undefined")
            if s.hosted:
                if s.host_mesh_id not in self.meshes:
                    raise AvatarError("missing-mesh", f"{s.id}: host mesh {s.host_mesh_id!r} missing")
                if s.host_mesh_id not in self.index_textures:
                    raise AvatarError("missing-mesh", f"{s.id}: host mesh has no index texture")
            else:
                if s.mesh_id not in self.meshes:
                    raise AvatarError("missing-mesh", f"{s.id}: mesh {s.mesh_id!r} missing")
        for mesh_id, mesh in self.meshes.items():
            mesh.validate()
            for group in mesh.face_group:
                if group not in self.structures:
                    raise AvatarError(
                        "unlabeled-triangle", f"mesh {mesh_id}: face group {group!r} is not a structure"
                    )

    # --- geometry access

    def structure_faces(self, structure_id: str) -> tuple[Mesh, np.ndarray]:
        """Own-mesh faces of a structure (mesh, face index array)."""
        s = self.structures[structure_id]
        if s.hosted:
            raise AvatarError("malformed-manifest", f"{structure_id} has painted geometry")
        mesh = self.meshes[s.mesh_id]
        idx = np.nonzero(np.asarray([g == structure_id for g in mesh.face_group]))[0]
        return mesh, idx

    def structure_vertices(self, structure_id: str) -> np.ndarray:
        mesh, faces = self.structure_faces(structure_id)
        used = np.unique(mesh.faces[faces])
        return mesh.positions[used]

    def label_lookup(self, mesh_id: str) -> np.ndarray:
        """(256,) table: texture label -> structure index, -1 unpainted."""
        table = np.full(256, -1, np.int64)
        for s in self.structures.values():
            if s.hosted and s.host_mesh_id == mesh_id:
                table[s.label] = self.structure_index(s.id)
        return table

    def skin_geometry(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated positions/faces of all skin-kind groups (for proxies)."""
        pts, faces = [], []
        offset = 0
        for mesh in self.meshes.values():
            kinds = np.asarray([self.structures[g].kind == "skin" for g in mesh.face_group])
            if kinds.any():
                pts.append(mesh.positions)
                faces.append(mesh.faces[kinds] + offset)
                offset += len(mesh.positions)
        if not pts:
            raise AvatarError("missing-mesh", "avatar has no skin geometry")
        return np.vstack(pts), np.vstack(faces)


def resolve_substructure(avatar: Avatar, mesh_id: str, face_index: int, barycentric) -> str:
    """Structure at a surface point: painted label, else the face's own group.

    The interpolated texture coordinate is sampled nearest-texel; labels are
    categorical and must never blend.
    """
    mesh = avatar.meshes[mesh_id]
    if not (0 <= face_index < len(mesh.faces)):
        raise AvatarError("out-of-range-texel", f"face {face_index} out of range")
    bary = np.asarray(barycentric, np.float64)
    uv = (bary[:, None] * mesh.uvs[mesh.faces[face_index]]).sum(axis=0)
    labels = avatar.index_textures.get(mesh_id)
    if labels is not None:
        h, w = labels.shape
        col = min(max(int(uv[0] * w), 0), w - 1)
        row = min(max(int(uv[1] * h), 0), h - 1)
        label = int(labels[row, col])
        if label:
            table = avatar.label_lookup(mesh_id)
            if table[label] >= 0:
                return avatar.structure_id_at(table[label])
    return mesh.face_group[face_index]


def screen_extent(avatar: Avatar, structure_id: str, camera: Camera) -> int:
    """Projected footprint area of a structure in pixels."""
    s = avatar.structures[structure_id]
    if s.hosted:
        mesh = avatar.meshes[s.host_mesh_id]
        frags = rasterize(
            mesh.positions, mesh.normals, mesh.uvs, mesh.faces,
            np.zeros(len(mesh.faces), np.int64), camera,
        )
        if not len(frags):
            return 0
        labels = avatar.index_textures[s.host_mesh_id]
        h, w = labels.shape
        cols = np.clip((frags.uv[:, 0] * w).astype(np.int64), 0, w - 1)
        rows = np.clip((frags.uv[:, 1] * h).astype(np.int64), 0, h - 1)
        hit = labels[rows, cols] == s.label
        return int(len(np.unique(frags.pix[hit])))
    mesh, faces = avatar.structure_faces(structure_id)
    frags = rasterize(
        mesh.positions, mesh.normals, mesh.uvs, mesh.faces[faces],
        np.zeros(len(faces), np.int64), camera,
    )
    return covered_pixel_count(frags)


# ---------------------------------------------------------------------------
# Mesh and manifest files


def write_mesh(mesh: Mesh, path: Path):
    with open(path, "w") as fh:
        for p, n, t in zip(mesh.positions, mesh.normals, mesh.uvs):
            fh.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
            fh.write(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
            fh.write(f"vt {t[0]:.9g} {t[1]:.9g}\n")
        current = None
        for face, group in zip(mesh.faces, mesh.face_group):
            if group != current:
                fh.write(f"g {group}\n")
                current = group
            fh.write(f"f {face[0] + 1} {face[1] + 1} {face[2] + 1}\n")


def read_mesh(path: Path) -> Mesh:
    positions, normals, uvs, faces, groups = [], [], [], [], []
    current = None
    try:
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                tag = parts[0]
                if tag == "v":
                    positions.append([float(x) for x in parts[1:4]])
                elif tag == "vn":
                    normals.append([float(x) for x in parts[1:4]])
                elif tag == "vt":
                    uvs.append([float(x) for x in parts[1:3]])
                elif tag == "g":
                    current = parts[1]
                elif tag == "f":
                    if current is None:
                        raise AvatarError("unlabeled-triangle", f"{path}: face before any group")
                    faces.append([int(x) - 1 for x in parts[1:4]])
                    groups.append(current)
    except OSError as exc:
        raise AvatarError("missing-mesh", f"cannot read mesh {path}: {exc}") from exc
    return Mesh(
        positions=np.asarray(positions, np.float64),
        normals=np.asarray(normals, np.float64),
        uvs=np.asarray(uvs, np.float64) if uvs else np.zeros((len(positions), 2)),
        faces=np.asarray(faces, np.int64).reshape(-1, 3),
        face_group=groups,
    )


def save_avatar(avatar: Avatar, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"meshes": [], "structures": [], "regions": [], "proxies": {}}
    for mesh_id, mesh in avatar.meshes.items():
        entry = {"id": mesh_id, "file": f"{mesh_id}.obj"}
        write_mesh(mesh, directory / entry["file"])
        if mesh_id in avatar.index_textures:
            entry["indexTexture"] = f"{mesh_id}_labels.png"
            Image.fromarray(avatar.index_textures[mesh_id], mode="L").save(directory / entry["indexTexture"])
        manifest["meshes"].append(entry)
    for s in avatar.structures.values():
        entry = {"id": s.id, "name": s.name, "kind": s.kind, "region": s.body_region_id}
        if s.hosted:
            entry["geometry"] = {"host": s.host_mesh_id, "label": s.label}
        else:
            entry["geometry"] = {"mesh": s.mesh_id}
        manifest["structures"].append(entry)
    manifest["regions"] = [{"id": r, "parent": p} for r, p in avatar.regions.items()]
    for sid, cfg in avatar.proxy_configs.items():
        manifest["proxies"][sid] = {
            "direction": list(cfg.direction),
            "lookatShift": list(cfg.lookat_shift),
            "nearSide": cfg.near_side,
        }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return directory / "manifest.json"


def load_avatar(manifest_path: str | Path) -> Avatar:
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise AvatarError("malformed-manifest", f"cannot read manifest: {exc}") from exc
    base = manifest_path.parent

    meshes: dict[str, Mesh] = {}
    index_textures: dict[str, np.ndarray] = {}
    for entry in doc.get("meshes", []):
        mesh_file = base / entry["file"]
        if not mesh_file.exists():
            raise AvatarError("missing-mesh", f"mesh file {mesh_file} missing")
        meshes[entry["id"]] = read_mesh(mesh_file)
        if "indexTexture" in entry:
            tex_file = base / entry["indexTexture"]
            if not tex_file.exists():
                raise AvatarError("missing-mesh", f"index texture {tex_file} missing")
            index_textures[entry["id"]] = np.asarray(Image.open(tex_file).convert("L"), np.uint8)

    structures: dict[str, Structure] = {}
    for entry in doc.get("structures", []):
        geom = entry.get("geometry", {})
        structures[entry["id"]] = Structure(
            id=entry["id"],
            name=entry.get("name", entry["id"]),
            kind=entry["kind"],
            body_region_id=entry["region"],
            mesh_id=geom.get("mesh"),
            host_mesh_id=geom.get("host"),
            label=geom.get("label"),
        )
    regions = {r["id"]: r.get("parent") for r in doc.get("regions", [])}
    proxies = {
        sid: ProxyConfig(
            direction=tuple(cfg["direction"]),
            lookat_shift=tuple(cfg.get("lookatShift", (0.0, 0.0, 0.0))),
            near_side=cfg.get("nearSide", True),
        )
        for sid, cfg in doc.get("proxies", {}).items()
    }
    return Avatar(
        meshes=meshes,
        structures=structures,
        regions=regions,
        index_textures=index_textures,
        proxy_configs=proxies,
    )
