"""Deterministic procedural humanoid used as the built-in test avatar.

The body stands on z=0 facing +y; units are millimetres.  Skin parts are
lofted tubes merged into one mesh whose index texture carries the painted
L3-L5 dermatome labels; muscles, tendons and pelvic organs are separate
meshes.  Everything derives from the seed, so equal seeds give bit-identical
vertex data.
"""

from __future__ import annotations

import numpy as np

from .anatomy import Avatar, Mesh, ProxyConfig, Structure

ATLAS_SIZE = 1024

# Atlas columns (u ranges) per skin part; v spans the full [0, 1].
SKIN_UV_RECTS = {
    "skin-leg-left": (0.00, 0.24),
    "skin-leg-right": (0.25, 0.49),
    "skin-torso": (0.50, 0.69),
    "skin-arm-left": (0.70, 0.79),
    "skin-arm-right": (0.80, 0.89),
    "skin-head": (0.90, 0.99),
}

# Dermatome paint bands in leg parametrization: angle from the anterior
# direction (degrees, positive toward the patient's left) and height fraction
# along the leg.  Bands are written for the right leg; the left leg mirrors
# the angles so medial/lateral stay anatomically correct.
DERMATOME_BANDS = {
    "L3": ((-45.0, 45.0), (0.55, 0.80)),
    "L4": ((5.0, 80.0), (0.05, 0.55)),  # medial
    "L5": ((-80.0, -5.0), (0.04, 0.50)),  # lateral
}
DERMATOME_LABELS = {
    "dermatome-L3-left": 1,
    "dermatome-L4-left": 2,
    "dermatome-L5-left": 3,
    "dermatome-L3-right": 4,
    "dermatome-L4-right": 5,
    "dermatome-L5-right": 6,
}


def _tube(bottom, top, profile, segments, rings, uv_rect, radius_scale=1.0, ellipse=(1.0, 1.0)):
    """Lofted tube with pole caps; returns (positions, uvs, faces).

    ``profile`` is a list of (t, radius) control points interpolated along the
    axis; rings collapse to poles at both ends.
    """
    bottom = np.asarray(bottom, np.float64)
    top = np.asarray(top, np.float64)
    ts = np.array([t for t, _ in profile])
    rs = np.array([r for _, r in profile]) * radius_scale
    u0, u1 = uv_rect

    ring_t = np.linspace(0.0, 1.0, rings)
    ring_r = np.interp(ring_t, ts, rs)
    # Shrink the outermost rings toward the poles for rounded caps.
    ring_r[0] *= 0.4
    ring_r[-1] *= 0.4

    angles = 2.0 * np.pi * np.arange(segments + 1) / segments
    dir_x = np.sin(angles) * ellipse[0]
    dir_y = np.cos(angles) * ellipse[1]

    positions = [bottom + np.array([0.0, 0.0, -2.0])]
    uvs = [[0.5 * (u0 + u1), 0.0]]
    for j, (t, r) in enumerate(zip(ring_t, ring_r)):
        center = bottom + t * (top - bottom)
        for i in range(segments + 1):
            positions.append(center + np.array([r * dir_x[i], r * dir_y[i], 0.0]))
            uvs.append([u0 + (u1 - u0) * (i / segments), t])
    positions.append(top + np.array([0.0, 0.0, 2.0]))
    uvs.append([0.5 * (u0 + u1), 1.0])

    cols = segments + 1
    first_ring = 1
    last_ring = first_ring + (rings - 1) * cols
    top_pole = len(positions) - 1
    faces = []
    for i in range(segments):
        faces.append([0, first_ring + i + 1, first_ring + i])
    for j in range(rings - 1):
        base = first_ring + j * cols
        for i in range(segments):
            a, b = base + i, base + i + 1
            c, d = a + cols, b + cols
            faces.append([a, b, d])
            faces.append([a, d, c])
    for i in range(segments):
        faces.append([top_pole, last_ring + i, last_ring + i + 1])
    return np.asarray(positions), np.asarray(uvs), np.asarray(faces, np.int64)


def _vertex_normals(positions, faces):
    e1 = positions[faces[:, 1]] - positions[faces[:, 0]]
    e2 = positions[faces[:, 2]] - positions[faces[:, 0]]
    fn = np.cross(e1, e2)
    normals = np.zeros_like(positions)
    for c in range(3):
        np.add.at(normals, faces[:, c], fn)
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return normals / lengths


class _MeshBuilder:
    def __init__(self):
        self.positions = []
        self.uvs = []
        self.faces = []
        self.groups = []

    def add(self, group, positions, uvs, faces):
        offset = sum(len(p) for p in self.positions)
        self.positions.append(positions)
        self.uvs.append(uvs)
        self.faces.append(faces + offset)
        self.groups.extend([group] * len(faces))

    def build(self) -> Mesh:
        positions = np.vstack(self.positions)
        faces = np.vstack(self.faces)
        return Mesh(
            positions=positions,
            normals=_vertex_normals(positions, faces),
            uvs=np.vstack(self.uvs),
            faces=faces,
            face_group=self.groups,
        )


def _leg_angle_deg(u_local: np.ndarray) -> np.ndarray:
    theta = u_local * 360.0
    return np.where(theta > 180.0, theta - 360.0, theta)


def _paint_dermatomes(labels: np.ndarray):
    """Fill the leg atlas rects with the dermatome label patches."""
    h, w = labels.shape
    for side in ("left", "right"):
        u0, u1 = SKIN_UV_RECTS[f"skin-leg-{side}"]
        c0, c1 = int(u0 * w), int(u1 * w) + 1
        cols = np.arange(c0, min(c1, w))
        u_local = ((cols + 0.5) / w - u0) / (u1 - u0)
        angles = _leg_angle_deg(np.clip(u_local, 0.0, 1.0))
        rows = np.arange(h)
        heights = (rows + 0.5) / h
        ang_grid, h_grid = np.meshgrid(angles, heights)
        for root, ((a_lo, a_hi), (t_lo, t_hi)) in DERMATOME_BANDS.items():
            if side == "left":
                a_lo, a_hi = -a_hi, -a_lo
            hit = (ang_grid >= a_lo) & (ang_grid <= a_hi) & (h_grid >= t_lo) & (h_grid <= t_hi)
            label = DERMATOME_LABELS[f"dermatome-{root}-{side}"]
            block = labels[:, cols[0] : cols[-1] + 1]
            block[hit] = label


def generate_test_avatar(seed: int = 0) -> Avatar:
    """Build the synthetic labeled avatar (~46k triangles)."""
    rng = np.random.default_rng(seed)

    def jitter() -> float:
        return 1.0 + 0.008 * float(rng.uniform(-1.0, 1.0))

    skin = _MeshBuilder()
    leg_profile = [(0.0, 45.0), (0.35, 62.0), (0.48, 62.0), (0.75, 85.0), (1.0, 92.0)]
    for side, x in (("left", 100.0), ("right", -100.0)):
        pos, uv, faces = _tube(
            (x, 0.0, 60.0), (x, 0.0, 900.0), leg_profile, 64, 72,
            SKIN_UV_RECTS[f"skin-leg-{side}"], radius_scale=jitter(),
        )
        skin.add(f"skin-leg-{side}", pos, uv, faces)
    pos, uv, faces = _tube(
        (0.0, 0.0, 880.0), (0.0, 0.0, 1460.0),
        [(0.0, 150.0), (0.35, 135.0), (0.8, 165.0), (1.0, 120.0)],
        72, 44, SKIN_UV_RECTS["skin-torso"], radius_scale=jitter(), ellipse=(1.0, 0.72),
    )
    skin.add("skin-torso", pos, uv, faces)
    for side, x in (("left", 1.0), ("right", -1.0)):
        pos, uv, faces = _tube(
            (x * 240.0, 0.0, 960.0), (x * 196.0, 0.0, 1390.0),
            [(0.0, 30.0), (0.5, 42.0), (1.0, 52.0)],
            40, 48, SKIN_UV_RECTS[f"skin-arm-{side}"], radius_scale=jitter(),
        )
        skin.add(f"skin-arm-{side}", pos, uv, faces)
    pos, uv, faces = _tube(
        (0.0, 0.0, 1470.0), (0.0, 0.0, 1720.0),
        [(0.0, 48.0), (0.25, 55.0), (0.6, 92.0), (1.0, 55.0)],
        56, 32, SKIN_UV_RECTS["skin-head"], radius_scale=jitter(),
    )
    skin.add("skin-head", pos, uv, faces)
    skin_mesh = skin.build()

    labels = np.zeros((ATLAS_SIZE, ATLAS_SIZE), np.uint8)
    _paint_dermatomes(labels)

    meshes: dict[str, Mesh] = {"skin": skin_mesh}
    structures: dict[str, Structure] = {}
    for part in SKIN_UV_RECTS:
        region = part.removeprefix("skin-")
        structures[part] = Structure(
            id=part, name=part.replace("-", " "), kind="skin",
            body_region_id=region if region != "torso" else "torso", mesh_id="skin",
        )
    for root_label, label in DERMATOME_LABELS.items():
        side = root_label.rsplit("-", 1)[1]
        root = root_label.split("-")[1]
        structures[root_label] = Structure(
            id=root_label, name=f"{root} dermatome ({side})", kind="dermatome",
            body_region_id=f"leg-{side}", host_mesh_id="skin", label=label,
        )

    def interior(sid, name, kind, region, bottom, top, r_lo, r_hi, segments=24, rings=18):
        pos, uv, faces = _tube(
            bottom, top, [(0.0, r_lo), (0.5, r_hi), (1.0, r_lo * 0.9)],
            segments, rings, (0.0, 1.0), radius_scale=jitter(),
        )
        mesh = Mesh(
            positions=pos, normals=_vertex_normals(pos, faces), uvs=uv,
            faces=faces, face_group=[sid] * len(faces),
        )
        meshes[sid] = mesh
        structures[sid] = Structure(
            id=sid, name=name, kind=kind, body_region_id=region, mesh_id=sid,
        )

    for side, x, lat in (("left", 100.0, 1.0), ("right", -100.0, -1.0)):
        leg = f"leg-{side}"
        interior(
            f"muscle-quadriceps-{side}", f"quadriceps ({side})", "muscle", leg,
            (x, 36.0, 500.0), (x, 28.0, 840.0), 24.0, 34.0, 28, 22,
        )
        interior(
            f"muscle-tibialisAnterior-{side}", f"tibialis anterior ({side})", "muscle", leg,
            (x + lat * 12.0, 22.0, 130.0), (x + lat * 16.0, 28.0, 420.0), 12.0, 17.0, 24, 18,
        )
        interior(
            f"muscle-extensorHallucisLongus-{side}", f"extensor hallucis longus ({side})", "muscle", leg,
            (x + lat * 28.0, 8.0, 100.0), (x + lat * 24.0, 14.0, 330.0), 6.5, 9.0, 20, 16,
        )
        interior(
            f"muscle-gastrocnemius-{side}", f"gastrocnemius ({side})", "muscle", leg,
            (x, -28.0, 260.0), (x, -34.0, 520.0), 19.0, 29.0, 28, 20,
        )
        interior(
            f"tendon-patellar-{side}", f"patellar tendon ({side})", "tendon", leg,
            (x, 50.0, 424.0), (x, 52.0, 478.0), 5.5, 6.5, 16, 10,
        )
        arm_x = x * 2.21
        interior(
            f"tendon-triceps-{side}", f"triceps tendon ({side})", "tendon", f"arm-{side}",
            (arm_x, -30.0, 1140.0), (arm_x, -33.0, 1186.0), 4.5, 5.5, 16, 10,
        )
    interior("organ-urethra", "urethra", "organ", "torso", (0.0, 40.0, 840.0), (0.0, 48.0, 892.0), 6.0, 7.5, 16, 10)
    interior("organ-anus", "anus", "organ", "torso", (0.0, -55.0, 845.0), (0.0, -62.0, 882.0), 5.0, 6.5, 14, 8)

    regions = {
        "body": None,
        "head": "body",
        "torso": "body",
        "arm-left": "body",
        "arm-right": "body",
        "leg-left": "body",
        "leg-right": "body",
    }
    proxy_configs = {
        "tendon-patellar-left": ProxyConfig(direction=(0.0, -1.0, 0.0)),
        "tendon-patellar-right": ProxyConfig(direction=(0.0, -1.0, 0.0)),
        "tendon-triceps-left": ProxyConfig(direction=(0.0, 1.0, 0.0), lookat_shift=(15.0, 0.0, 0.0)),
        "tendon-triceps-right": ProxyConfig(direction=(0.0, 1.0, 0.0), lookat_shift=(15.0, 0.0, 0.0)),
        "organ-urethra": ProxyConfig(direction=(0.0, -1.0, 0.0)),
        "organ-anus": ProxyConfig(direction=(0.0, 1.0, 0.0)),
    }
    return Avatar(
        meshes=meshes,
        structures=structures,
        regions=regions,
        index_textures={"skin": labels},
        proxy_configs=proxy_configs,
    )
