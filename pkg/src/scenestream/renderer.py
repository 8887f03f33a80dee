"""Deterministic software rasterizer for the five annotation views.

Pinhole projection, z-buffered triangles, flat per-face Lambert shading
under one fixed directional light. Output is bit-identical for identical
inputs: triangles are rasterized in ascending instance order and depth
ties keep the earlier (lower-id) writer.

The per-pixel fill loop is JIT-compiled with numba when available; the
fallback is the same function interpreted, so results do not depend on
which path ran.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

from .config import (DEFAULT_FAR, DEFAULT_HEIGHT, DEFAULT_NEAR, DEFAULT_VFOV_DEG,
                     DEFAULT_WIDTH, LIGHT_AMBIENT, LIGHT_DIRECTION)
from .geometry import rotation_matrix
from .scene_model import Pose

VIEW_RGB = 1
VIEW_FLOW = 2
VIEW_SEMANTIC = 4
VIEW_INSTANCE = 8
VIEW_DEPTH = 16
ALL_VIEWS = VIEW_RGB | VIEW_FLOW | VIEW_SEMANTIC | VIEW_INSTANCE | VIEW_DEPTH


@dataclass(frozen=True)
class Camera:
    pose: Pose
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    vfov_deg: float = DEFAULT_VFOV_DEG
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("camera resolution must be at least 16x16")
        if not (0.0 < self.near < self.far):
            raise ValueError("need 0 < near < far")

    @property
    def focal_px(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.vfov_deg) / 2.0)

    @property
    def aspect(self) -> float:
        return self.width / self.height

    def world_to_cam(self) -> tuple[np.ndarray, np.ndarray]:
        r = rotation_matrix(self.pose.rotation)
        t = np.asarray(self.pose.position, dtype=np.float64)
        return r, t


@dataclass
class FrameViews:
    """Dense per-pixel annotations for one frame. Buffers share dimensions;
    a background pixel has semantic == instance == 0, depth == far and zero
    flow."""

    rgb: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float32, camera-space meters, far at background
    semantic: np.ndarray  # (H, W) uint16 category ids
    instance: np.ndarray  # (H, W) uint32 instance ids
    flow: np.ndarray  # (H, W, 2) float32 (vx, vy) px/frame

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]


def project(point, cam: Camera):
    """Pinhole projection to (x_px, y_px, view_depth); None if Z <= near."""
    r, t = cam.world_to_cam()
    p = (np.asarray(point, dtype=np.float64) - t) @ r
    z = float(p[2])
    if z <= cam.near:
        return None
    f = cam.focal_px
    x = cam.width / 2.0 + f * float(p[0]) / z
    y = cam.height / 2.0 - f * float(p[1]) / z
    return (x, y, z)


@njit(cache=True)
def _fill_triangles(xy, z, shade, cats, insts, zbuf, rgb, sem, inst):
    height, width = zbuf.shape
    for t in range(xy.shape[0]):
        x0, y0 = xy[t, 0, 0], xy[t, 0, 1]
        x1, y1 = xy[t, 1, 0], xy[t, 1, 1]
        x2, y2 = xy[t, 2, 0], xy[t, 2, 1]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area <= 0.0:  # backface or degenerate
            continue
        minx = min(x0, min(x1, x2))
        maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2))
        maxy = max(y0, max(y1, y2))
        px0 = max(0, int(math.ceil(minx - 0.5)))
        px1 = min(width - 1, int(math.floor(maxx - 0.5)))
        py0 = max(0, int(math.ceil(miny - 0.5)))
        py1 = min(height - 1, int(math.floor(maxy - 0.5)))
        if px1 < px0 or py1 < py0:
            continue
        inv0 = 1.0 / z[t, 0]
        inv1 = 1.0 / z[t, 1]
        inv2 = 1.0 / z[t, 2]
        # edge tie rule: a boundary pixel belongs to the triangle whose edge
        # is "top" (dy == 0, dx > 0) or "left" (dy < 0)
        e0x, e0y = x2 - x1, y2 - y1  # edge opposite vertex 0
        e1x, e1y = x0 - x2, y0 - y2
        e2x, e2y = x1 - x0, y1 - y0
        tl0 = (e0y < 0.0) or (e0y == 0.0 and e0x > 0.0)
        tl1 = (e1y < 0.0) or (e1y == 0.0 and e1x > 0.0)
        tl2 = (e2y < 0.0) or (e2y == 0.0 and e2x > 0.0)
        for py in range(py0, py1 + 1):
            cy = py + 0.5
            for px in range(px0, px1 + 1):
                cx = px + 0.5
                w0 = e0x * (cy - y1) - e0y * (cx - x1)
                w1 = e1x * (cy - y2) - e1y * (cx - x2)
                w2 = e2x * (cy - y0) - e2y * (cx - x0)
                if (w0 > 0.0 or (w0 == 0.0 and tl0)) and \
                   (w1 > 0.0 or (w1 == 0.0 and tl1)) and \
                   (w2 > 0.0 or (w2 == 0.0 and tl2)):
                    l0 = w0 / area
                    l1 = w1 / area
                    l2 = w2 / area
                    invz = l0 * inv0 + l1 * inv1 + l2 * inv2
                    depth = 1.0 / invz
                    if depth < zbuf[py, px]:
                        zbuf[py, px] = depth
                        rgb[py, px, 0] = shade[t, 0]
                        rgb[py, px, 1] = shade[t, 1]
                        rgb[py, px, 2] = shade[t, 2]
                        sem[py, px] = cats[t]
                        inst[py, px] = insts[t]


def _clip_near(tri_cam: np.ndarray, near: float) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of one camera-space triangle against z=near."""
    inside = [v for v in tri_cam if v[2] > near]
    if len(inside) == 3:
        return [tri_cam]
    out: list[np.ndarray] = []
    poly: list[np.ndarray] = []
    for i in range(3):
        a = tri_cam[i]
        b = tri_cam[(i + 1) % 3]
        a_in = a[2] > near
        b_in = b[2] > near
        if a_in:
            poly.append(a)
        if a_in != b_in:
            u = (near - a[2]) / (b[2] - a[2])
            poly.append(a + (b - a) * u)
    for k in range(1, len(poly) - 1):
        out.append(np.stack([poly[0], poly[k], poly[k + 1]]))
    return out


_LIGHT = np.asarray(LIGHT_DIRECTION, dtype=np.float64)
_LIGHT = _LIGHT / np.linalg.norm(_LIGHT)


def _shade_faces(world_tris: np.ndarray, base_color) -> np.ndarray:
    """Per-face Lambert RGB bytes for (T, 3, 3) world-space triangles."""
    e1 = world_tris[:, 1] - world_tris[:, 0]
    e2 = world_tris[:, 2] - world_tris[:, 0]
    n = np.cross(e1, e2)
    lengths = np.linalg.norm(n, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    n = n / lengths
    lit = np.maximum(0.0, n @ (-_LIGHT))
    intensity = LIGHT_AMBIENT + (1.0 - LIGHT_AMBIENT) * lit
    color = np.clip(np.asarray(base_color, dtype=np.float64)[None, :] * intensity[:, None], 0.0, 1.0)
    return np.round(color * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class RenderObject:
    """One placed mesh instance, ready for rasterization."""

    instance_id: int
    category_id: int
    mesh_vertices: np.ndarray  # template-local (V, 3)
    mesh_triangles: np.ndarray  # (T, 3)
    base_color: tuple[float, float, float]
    pose: Pose


def rasterize(objects: list[RenderObject], cam: Camera, background_color,
              requested: int = ALL_VIEWS) -> FrameViews:
    """Render the given instances (sorted by instance id internally) into a
    fresh FrameViews. The flow buffer is left zeroed; see the flow module.

    One z-buffer pass fills rgb/depth/semantic/instance together, so the
    ``requested`` mask only matters to downstream encoders.
    """
    height, width = cam.height, cam.width
    bg = np.round(np.clip(np.asarray(background_color, float), 0, 1) * 255).astype(np.uint8)
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:, :] = bg
    zbuf = np.full((height, width), cam.far, dtype=np.float64)
    sem = np.zeros((height, width), dtype=np.uint16)
    inst = np.zeros((height, width), dtype=np.uint32)
    flow = np.zeros((height, width, 2), dtype=np.float32)

    cam_r, cam_t = cam.world_to_cam()
    f = cam.focal_px
    cx, cy = width / 2.0, height / 2.0

    for obj in sorted(objects, key=lambda o: o.instance_id):
        rot = rotation_matrix(obj.pose.rotation)
        world_v = obj.mesh_vertices @ rot.T + np.asarray(obj.pose.position)
        cam_v = (world_v - cam_t) @ cam_r
        tri_idx = obj.mesh_triangles
        world_tris = world_v[tri_idx]  # (T, 3, 3)

        # backface cull in world space (outward normals): keep faces whose
        # plane sees the eye point
        fn = np.cross(world_tris[:, 1] - world_tris[:, 0], world_tris[:, 2] - world_tris[:, 0])
        facing = ((cam_t[None, :] - world_tris[:, 0]) * fn).sum(axis=1) > 0.0
        world_tris = world_tris[facing]
        if world_tris.shape[0] == 0:
            continue
        cam_tris = cam_v[tri_idx[facing]]
        shades = _shade_faces(world_tris, obj.base_color)

        z = cam_tris[:, :, 2]
        all_front = (z > cam.near).all(axis=1)
        any_front = (z > cam.near).any(axis=1)

        keep = cam_tris[all_front]
        keep_shades = shades[all_front]
        clipped: list[np.ndarray] = []
        clipped_shades: list[np.ndarray] = []
        for t_i in np.nonzero(any_front & ~all_front)[0]:
            for piece in _clip_near(cam_tris[t_i], cam.near):
                clipped.append(piece)
                clipped_shades.append(shades[t_i])
        if clipped:
            keep = np.concatenate([keep, np.stack(clipped)]) if keep.size else np.stack(clipped)
            keep_shades = (np.concatenate([keep_shades, np.stack(clipped_shades)])
                           if keep_shades.size else np.stack(clipped_shades))
        if keep.shape[0] == 0:
            continue

        zs = keep[:, :, 2]
        xy = np.empty((keep.shape[0], 3, 2), dtype=np.float64)
        xy[:, :, 0] = cx + f * keep[:, :, 0] / zs
        xy[:, :, 1] = cy - f * keep[:, :, 1] / zs

        cats = np.full(keep.shape[0], obj.category_id, dtype=np.uint16)
        ids = np.full(keep.shape[0], obj.instance_id, dtype=np.uint32)
        _fill_triangles(np.ascontiguousarray(xy), np.ascontiguousarray(zs),
                        np.ascontiguousarray(keep_shades), cats, ids,
                        zbuf, rgb, sem, inst)

    return FrameViews(rgb=rgb, depth=zbuf.astype(np.float32), semantic=sem,
                      instance=inst, flow=flow)


def _build_palette() -> np.ndarray:
    """255 visually distinct colors; ids 1..64 are guaranteed pairwise
    distinct after 8-bit quantization (hues 1/64 apart in permuted order)."""
    palette = np.zeros((256, 3), dtype=np.uint8)
    sats = (0.85, 0.55, 0.9, 0.65)
    vals = (0.95, 0.95, 0.55, 0.7)
    for idx in range(1, 256):
        band, slot = divmod(idx - 1, 64)
        hue = ((slot * 37) % 64) / 64.0
        r, g, b = colorsys.hsv_to_rgb(hue, sats[band], vals[band])
        palette[idx] = (round(r * 255), round(g * 255), round(b * 255))
    return palette


_PALETTE = _build_palette()
_UNKNOWN_COLOR = np.array([255, 0, 255], dtype=np.uint8)  # debug magenta


def color_map_semantic(semantic: np.ndarray) -> np.ndarray:
    """Fixed-palette visualization of a semantic buffer; id 0 is black."""
    out = np.empty(semantic.shape + (3,), dtype=np.uint8)
    known = semantic < _PALETTE.shape[0]
    out[known] = _PALETTE[semantic[known].astype(np.int64)]
    out[~known] = _UNKNOWN_COLOR
    return out
