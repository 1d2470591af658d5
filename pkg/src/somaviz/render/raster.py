"""Deterministic software rasterizer producing per-pixel fragment lists.

Triangles are near-plane clipped, projected and filled by edge functions at
pixel centers.  All fragments are kept (an A-buffer), so one geometry pass
feeds the footprint reduction, depth peeling and picking.  Fragment order is
reproducible: faces in submission order, pixels row-major inside each face.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import Camera

_MIN_AREA = 1e-12


@dataclass
class FragmentBuffer:
    """Flat fragment arrays; ``pix`` is the linear pixel index y * width + x."""

    width: int
    height: int
    pix: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    depth: np.ndarray = field(default_factory=lambda: np.empty(0, np.float64))
    world: np.ndarray = field(default_factory=lambda: np.empty((0, 3), np.float32))
    normal: np.ndarray = field(default_factory=lambda: np.empty((0, 3), np.float32))
    uv: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.float32))
    face_attr: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    seq: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __len__(self) -> int:
        return len(self.pix)


def _clip_triangle(corners: list[tuple[np.ndarray, ...]], near: float):
    """Sutherland-Hodgman clip of one triangle against the near plane.

    ``corners`` holds per-vertex tuples of attribute vectors whose first
    element is the view-space position.  Returns a list of clipped triangles.
    """
    out: list[tuple[np.ndarray, ...]] = []
    count = len(corners)
    for i in range(count):
        cur, nxt = corners[i], corners[(i + 1) % count]
        cur_in = cur[0][2] <= -near
        nxt_in = nxt[0][2] <= -near
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (-near - cur[0][2]) / (nxt[0][2] - cur[0][2])
            out.append(tuple(a + t * (b - a) for a, b in zip(cur, nxt)))
    if len(out) < 3:
        return []
    return [(out[0], out[i], out[i + 1]) for i in range(1, len(out) - 1)]


def rasterize(
    positions: np.ndarray,
    normals: np.ndarray,
    uvs: np.ndarray | None,
    faces: np.ndarray,
    face_attr: np.ndarray,
    camera: Camera,
    chunk_budget: int = 2_000_000,
) -> FragmentBuffer:
    """Emit every covered fragment of the given indexed triangles."""
    width, height = camera.viewport
    buf = FragmentBuffer(width=width, height=height)
    if len(faces) == 0:
        return buf

    positions = np.asarray(positions, np.float64)
    normals = np.asarray(normals, np.float64)
    faces = np.asarray(faces, np.int64)
    face_attr = np.asarray(face_attr, np.int64)
    if uvs is None:
        uvs = np.zeros((len(positions), 2), np.float64)
    else:
        uvs = np.asarray(uvs, np.float64)

    view = camera.view_matrix()
    view_pos = positions @ view[:3, :3].T + view[:3, 3]
    visible = view_pos[:, 2] <= -camera.near
    n_vis = visible[faces].sum(axis=1)

    # Triangle soup with per-corner attributes; fully visible faces go in
    # directly, partially visible ones are clipped in a small loop.
    keep = n_vis == 3
    tri_view = [view_pos[faces[keep]]]
    tri_world = [positions[faces[keep]]]
    tri_normal = [normals[faces[keep]]]
    tri_uv = [uvs[faces[keep]]]
    tri_attr = [face_attr[keep]]

    partial = np.nonzero((n_vis > 0) & (n_vis < 3))[0]
    extra_view, extra_world, extra_normal, extra_uv, extra_attr = [], [], [], [], []
    for fi in partial:
        idx = faces[fi]
        corners = [
            (view_pos[j], positions[j], normals[j], uvs[j]) for j in idx
        ]
        for tri in _clip_triangle(corners, camera.near):
            extra_view.append([c[0] for c in tri])
            extra_world.append([c[1] for c in tri])
            extra_normal.append([c[2] for c in tri])
            extra_uv.append([c[3] for c in tri])
            extra_attr.append(face_attr[fi])
    if extra_view:
        tri_view.append(np.asarray(extra_view))
        tri_world.append(np.asarray(extra_world))
        tri_normal.append(np.asarray(extra_normal))
        tri_uv.append(np.asarray(extra_uv))
        tri_attr.append(np.asarray(extra_attr, np.int64))

    tv = np.concatenate(tri_view)
    tw = np.concatenate(tri_world)
    tn = np.concatenate(tri_normal)
    tuv = np.concatenate(tri_uv)
    tattr = np.concatenate(tri_attr)
    if len(tv) == 0:
        return buf

    proj = camera.projection_matrix()
    w_clip = -tv[..., 2]
    ndc_x = proj[0, 0] * tv[..., 0] / w_clip
    ndc_y = proj[1, 1] * tv[..., 1] / w_clip
    ndc_z = (proj[2, 2] * tv[..., 2] + proj[2, 3]) / w_clip
    sx = (ndc_x + 1.0) * 0.5 * width
    sy = (1.0 - ndc_y) * 0.5 * height
    z01 = (ndc_z + 1.0) * 0.5
    inv_w = 1.0 / w_clip

    # Integer pixel-center bounds per triangle, clamped to the viewport.
    x0 = np.clip(np.ceil(sx.min(axis=1) - 0.5).astype(np.int64), 0, width - 1)
    x1 = np.clip(np.floor(sx.max(axis=1) - 0.5).astype(np.int64), 0, width - 1)
    y0 = np.clip(np.ceil(sy.min(axis=1) - 0.5).astype(np.int64), 0, height - 1)
    y1 = np.clip(np.floor(sy.max(axis=1) - 0.5).astype(np.int64), 0, height - 1)
    bw = x1 - x0 + 1
    bh = y1 - y0 + 1
    counts = np.maximum(bw, 0) * np.maximum(bh, 0)
    inside_view = (sx.min(axis=1) < width) & (sx.max(axis=1) > 0) & (sy.min(axis=1) < height) & (sy.max(axis=1) > 0)
    counts = np.where(inside_view, counts, 0)

    order = np.nonzero(counts > 0)[0]
    pieces: list[dict[str, np.ndarray]] = []

    start = 0
    while start < len(order):
        # Grow the chunk until the candidate budget is hit.
        total = 0
        stop = start
        while stop < len(order) and (total == 0 or total + counts[order[stop]] <= chunk_budget):
            total += counts[order[stop]]
            stop += 1
        sel = order[start:stop]
        start = stop

        c = counts[sel]
        face_of = np.repeat(np.arange(len(sel)), c)
        offsets = np.concatenate([[0], np.cumsum(c)[:-1]])
        k = np.arange(int(c.sum()), dtype=np.int64) - np.repeat(offsets, c)
        lw = bw[sel][face_of]
        px = x0[sel][face_of] + k % lw
        py = y0[sel][face_of] + k // lw

        g = sel[face_of]
        ax, ay = sx[g, 0], sy[g, 0]
        bx, by = sx[g, 1], sy[g, 1]
        cx, cy = sx[g, 2], sy[g, 2]
        qx = px + 0.5
        qy = py + 0.5
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        ok = np.abs(area) > _MIN_AREA
        e0 = (cx - bx) * (qy - by) - (cy - by) * (qx - bx)
        e1 = (ax - cx) * (qy - cy) - (ay - cy) * (qx - cx)
        e2 = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        with np.errstate(divide="ignore", invalid="ignore"):
            l0 = e0 / area
            l1 = e1 / area
            l2 = e2 / area
        hit = ok & (l0 >= 0.0) & (l1 >= 0.0) & (l2 >= 0.0)
        if not hit.any():
            continue

        g = g[hit]
        l0, l1, l2 = l0[hit], l1[hit], l2[hit]
        depth = l0 * z01[g, 0] + l1 * z01[g, 1] + l2 * z01[g, 2]
        w0 = l0 * inv_w[g, 0]
        w1 = l1 * inv_w[g, 1]
        w2 = l2 * inv_w[g, 2]
        norm = w0 + w1 + w2
        w0, w1, w2 = w0 / norm, w1 / norm, w2 / norm
        world = w0[:, None] * tw[g, 0] + w1[:, None] * tw[g, 1] + w2[:, None] * tw[g, 2]
        nrm = w0[:, None] * tn[g, 0] + w1[:, None] * tn[g, 1] + w2[:, None] * tn[g, 2]
        uv = w0[:, None] * tuv[g, 0] + w1[:, None] * tuv[g, 1] + w2[:, None] * tuv[g, 2]

        pieces.append(
            {
                "pix": (py[hit] * width + px[hit]).astype(np.int64),
                "depth": depth,
                "world": world.astype(np.float32),
                "normal": nrm.astype(np.float32),
                "uv": uv.astype(np.float32),
                "face_attr": tattr[g],
            }
        )

    if not pieces:
        return buf
    buf.pix = np.concatenate([p["pix"] for p in pieces])
    buf.depth = np.concatenate([p["depth"] for p in pieces])
    buf.world = np.concatenate([p["world"] for p in pieces])
    buf.normal = np.concatenate([p["normal"] for p in pieces])
    buf.uv = np.concatenate([p["uv"] for p in pieces])
    buf.face_attr = np.concatenate([p["face_attr"] for p in pieces])
    buf.seq = np.arange(len(buf.pix), dtype=np.int64)
    return buf


def nearest_per_pixel(buf: FragmentBuffer) -> np.ndarray:
    """Indices of the nearest fragment per covered pixel (depth, then seq)."""
    if len(buf) == 0:
        return np.empty(0, np.int64)
    order = np.lexsort((buf.seq, buf.depth, buf.pix))
    pix_sorted = buf.pix[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    return order[first]


def covered_pixel_count(buf: FragmentBuffer) -> int:
    if len(buf) == 0:
        return 0
    return int(len(np.unique(buf.pix)))
