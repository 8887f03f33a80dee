"""Shared vector and rotation helpers.

Coordinate convention (used everywhere in this package): left-handed,
+X right, +Y up, +Z forward. Euler angles are degrees; the rotation of a
pose (rx, ry, rz) is applied Z first, then X, then Y as seen on the world
axes, i.e. the combined matrix is

    R = Ry(ry) @ Rx(rx) @ Rz(rz)

with the elementary matrices

    Rx = [[1, 0, 0], [0, c, -s], [0, s, c]]
    Ry = [[c, 0, s], [0, 1, 0], [-s, 0, c]]
    Rz = [[c, -s, 0], [s, c, 0], [0, 0, 1]]

Under this convention a yaw of +90 turns the +Z forward axis onto +X, and
a pitch of +90 turns it onto -Y (downward).
"""

from __future__ import annotations

import math

import numpy as np

Vec3 = tuple[float, float, float]


def rotation_matrix(rotation_deg) -> np.ndarray:
    """World-space rotation matrix for Euler angles in degrees."""
    rx, ry, rz = (math.radians(float(a)) for a in rotation_deg)
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=np.float64)
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=np.float64)
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=np.float64)
    return my @ mx @ mz


def pose_transform(position, rotation_deg) -> tuple[np.ndarray, np.ndarray]:
    """(R, t) mapping object-local points to world: world = R @ local + t."""
    return rotation_matrix(rotation_deg), np.asarray(position, dtype=np.float64)


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def camera_basis(position, rotation_deg) -> tuple[np.ndarray, np.ndarray]:
    """(R, t) of the camera pose; columns of R are right/up/forward in world."""
    return rotation_matrix(rotation_deg), np.asarray(position, dtype=np.float64)


def world_to_camera(points: np.ndarray, cam_r: np.ndarray, cam_t: np.ndarray) -> np.ndarray:
    """Transform world points (N,3) into the camera frame (+Z forward)."""
    return (np.asarray(points, dtype=np.float64) - cam_t) @ cam_r


def camera_to_world(points: np.ndarray, cam_r: np.ndarray, cam_t: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) @ cam_r.T + cam_t
