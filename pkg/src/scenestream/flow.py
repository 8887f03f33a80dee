"""Analytic ground-truth optical flow and its HSV visualization.

Flow at frame k is the screen-space displacement since frame k-1, measured
at frame-k pixels: each annotated pixel is back-projected through its depth,
mapped into the owning object's local frame with the current transform,
re-mapped to world with the previous transform, and re-projected. The
camera is fixed, so only object motion contributes; instances whose
transform did not change get exactly zero flow (no epsilon noise).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .geometry import pose_transform
from .renderer import Camera, FrameViews
from .scene_model import Pose

FLO_MAGIC = 202021.25  # Middlebury sanity-check tag


@dataclass(frozen=True)
class InstanceMotion:
    instance_id: int
    pose: Pose
    prev_pose: Pose


def compute_flow(views: FrameViews, motions: list[InstanceMotion], cam: Camera,
                 stats: dict | None = None) -> np.ndarray:
    """(H, W, 2) float32 px/frame. Pixels whose previous projection fell
    behind the camera get (0, 0); their count is reported through ``stats``
    under ``"behind_camera"`` when a dict is passed."""
    height, width = views.depth.shape
    flow = np.zeros((height, width, 2), dtype=np.float32)
    dropped = 0

    cam_r, cam_t = cam.world_to_cam()
    f = cam.focal_px
    cx, cy = width / 2.0, height / 2.0

    for m in motions:
        if m.pose == m.prev_pose:
            continue  # exact zero contribution by contract
        mask = views.instance == m.instance_id
        if not mask.any():
            continue
        ys, xs = np.nonzero(mask)
        x_px = xs + 0.5
        y_px = ys + 0.5
        z = views.depth[ys, xs].astype(np.float64)
        # back-project through depth into camera space, then to world
        pc = np.stack([(x_px - cx) * z / f, (cy - y_px) * z / f, z], axis=1)
        pw = pc @ cam_r.T + cam_t
        r_cur, t_cur = pose_transform(m.pose.position, m.pose.rotation)
        r_prev, t_prev = pose_transform(m.prev_pose.position, m.prev_pose.rotation)
        local = (pw - t_cur) @ r_cur
        pw_prev = local @ r_prev.T + t_prev
        pc_prev = (pw_prev - cam_t) @ cam_r
        zp = pc_prev[:, 2]
        ok = zp > cam.near
        dropped += int((~ok).sum())
        x_prev = cx + f * pc_prev[ok, 0] / zp[ok]
        y_prev = cy - f * pc_prev[ok, 1] / zp[ok]
        flow[ys[ok], xs[ok], 0] = (x_px[ok] - x_prev).astype(np.float32)
        flow[ys[ok], xs[ok], 1] = (y_px[ok] - y_prev).astype(np.float32)

    if stats is not None:
        stats["behind_camera"] = dropped
    return flow


def hsv_to_rgb_image(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV (h in [0,1)) to uint8 RGB."""
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(np.int32) % 6
    frac = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * frac)
    t = v * (1.0 - s * (1.0 - frac))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.round(np.stack([r, g, b], axis=-1) * 255.0).astype(np.uint8)


def flow_to_hsv(flow: np.ndarray, rho_max: float) -> np.ndarray:
    """HSV color-coding of a flow field: hue from direction, brightness from
    magnitude (saturating at rho_max). Leftward motion is red (hue 0),
    downward green, rightward cyan, upward violet; zero flow is black."""
    if not rho_max > 0:
        raise ValueError("rho_max must be > 0")
    vx = flow[..., 0].astype(np.float64)
    vy = flow[..., 1].astype(np.float64)
    rho = np.hypot(vx, vy)
    hue = (np.arctan2(-vy, vx) + np.pi) / (2.0 * np.pi)  # [0, 1), 0 == leftward
    value = np.minimum(rho / rho_max, 1.0)
    return hsv_to_rgb_image(hue, np.ones_like(hue), value)


def write_flo(path, flow: np.ndarray) -> None:
    """Write Middlebury .flo: magic, width, height, row-major float32 pairs."""
    height, width = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLO_MAGIC, width, height))
        fh.write(np.ascontiguousarray(flow, dtype="<f4").tobytes())


def read_flo(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, width, height = struct.unpack("<fii", fh.read(12))
        if abs(magic - FLO_MAGIC) > 1e-3:
            raise ValueError(f"{path}: not a .flo file (magic {magic})")
        data = np.frombuffer(fh.read(width * height * 8), dtype="<f4")
    return data.reshape(height, width, 2).copy()
