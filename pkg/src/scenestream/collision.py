"""Frustum construction and sphere-proxy contact tests.

Dynamic objects are collision-tested as spheres; static scene objects
become axis-aligned boxes (or balls, for sphere-like meshes) in world
space. Frustum planes face inward: a point p is inside a plane when
``dot(normal, p) >= offset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import rotation_matrix
from .scene_model import Pose, Template

PLANE_NAMES = ("near", "far", "left", "right", "top", "bottom")


@dataclass(frozen=True)
class Plane:
    normal: tuple[float, float, float]  # unit, points toward the allowed side
    offset: float  # plane is {x : dot(normal, x) == offset}

    def signed_distance(self, point) -> float:
        n = self.normal
        return n[0] * point[0] + n[1] * point[1] + n[2] * point[2] - self.offset


@dataclass(frozen=True)
class Frustum:
    planes: tuple[Plane, ...]  # exactly 6: near, far, left, right, top, bottom

    def contains(self, point, margin: float = 0.0) -> bool:
        return all(p.signed_distance(point) >= margin for p in self.planes)


@dataclass(frozen=True)
class Contact:
    normal: tuple[float, float, float]  # unit, points away from the obstacle
    penetration_depth: float
    surface_id: str


@dataclass(frozen=True)
class BoxCollider:
    minimum: tuple[float, float, float]
    maximum: tuple[float, float, float]
    surface_id: str


@dataclass(frozen=True)
class BallCollider:
    center: tuple[float, float, float]
    radius: float
    surface_id: str


StaticCollider = BoxCollider | BallCollider


def build_frustum(camera_pose: Pose, vfov_deg: float, aspect: float,
                  near: float, far: float) -> Frustum:
    """Six inward-facing world-space planes matching the renderer projection."""
    if not camera_pose.is_finite():
        raise ValueError("camera pose must be finite")
    if not (0.0 < near < far):
        raise ValueError("need 0 < near < far")
    if not (0.0 < vfov_deg < 180.0):
        raise ValueError("vfov must be in (0, 180) degrees")

    half_h = math.tan(math.radians(vfov_deg) / 2.0)
    half_w = half_h * aspect
    # camera-space planes (+Z forward)
    local = [
        ((0.0, 0.0, 1.0), near),  # near
        ((0.0, 0.0, -1.0), -far),  # far
        (_unit((1.0, 0.0, half_w)), 0.0),  # left
        (_unit((-1.0, 0.0, half_w)), 0.0),  # right
        (_unit((0.0, -1.0, half_h)), 0.0),  # top
        (_unit((0.0, 1.0, half_h)), 0.0),  # bottom
    ]
    rot = rotation_matrix(camera_pose.rotation)
    pos = np.asarray(camera_pose.position, dtype=np.float64)
    planes = []
    for n_local, off_local in local:
        n_world = rot @ np.asarray(n_local, dtype=np.float64)
        off_world = off_local + float(n_world @ pos)
        planes.append(Plane(normal=tuple(float(v) for v in n_world), offset=off_world))
    return Frustum(planes=tuple(planes))


def _unit(v) -> tuple[float, float, float]:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / n, v[1] / n, v[2] / n)


def static_collider(template: Template, pose: Pose, surface_id: str) -> StaticCollider:
    """World-space proxy for a placed static object."""
    if template.mesh.is_sphere_like():
        return BallCollider(center=pose.position,
                            radius=template.mesh.max_vertex_radius(),
                            surface_id=surface_id)
    rot = rotation_matrix(pose.rotation)
    verts = template.mesh.vertices @ rot.T + np.asarray(pose.position)
    return BoxCollider(minimum=tuple(float(v) for v in verts.min(axis=0)),
                       maximum=tuple(float(v) for v in verts.max(axis=0)),
                       surface_id=surface_id)


def sphere_contacts(center, radius: float, frustum: Frustum | None,
                    statics: tuple[StaticCollider, ...] = ()) -> list[Contact]:
    """All surfaces the proxy sphere penetrates, deepest first."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    c = np.asarray(center, dtype=np.float64)
    contacts: list[Contact] = []

    if frustum is not None:
        for name, plane in zip(PLANE_NAMES, frustum.planes):
            sd = plane.signed_distance(c)
            if sd < radius:
                contacts.append(Contact(normal=plane.normal,
                                        penetration_depth=radius - sd,
                                        surface_id=f"frustum:{name}"))

    for s in statics:
        if isinstance(s, BoxCollider):
            q = np.minimum(np.maximum(c, np.asarray(s.minimum)), np.asarray(s.maximum))
            d = c - q
            dist = float(np.linalg.norm(d))
            if dist > 0.0:
                if dist < radius:
                    contacts.append(Contact(normal=tuple(float(v) for v in d / dist),
                                            penetration_depth=radius - dist,
                                            surface_id=s.surface_id))
            else:
                # center inside the box: exit through the nearest face
                mn, mx = np.asarray(s.minimum), np.asarray(s.maximum)
                gaps = np.concatenate([c - mn, mx - c])
                k = int(np.argmin(gaps))
                axis = k % 3
                sign = -1.0 if k < 3 else 1.0
                normal = [0.0, 0.0, 0.0]
                normal[axis] = sign
                contacts.append(Contact(normal=tuple(normal),
                                        penetration_depth=radius + float(gaps[k]),
                                        surface_id=s.surface_id))
        else:
            v = c - np.asarray(s.center)
            dist = float(np.linalg.norm(v))
            if dist < radius + s.radius:
                normal = tuple(float(x) for x in (v / dist)) if dist > 0 else (0.0, 1.0, 0.0)
                contacts.append(Contact(normal=normal,
                                        penetration_depth=radius + s.radius - dist,
                                        surface_id=s.surface_id))

    contacts.sort(key=lambda k: -k.penetration_depth)
    return contacts


def reflect(v, n):
    """Mirror v across the plane with unit normal n; norm-preserving."""
    v = np.asarray(v, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return v - 2.0 * float(v @ n) * n


@dataclass(frozen=True)
class ColliderSet:
    """The surfaces one dynamic object can hit, with its proxy radius bound."""

    radius: float
    frustum: Frustum | None = None
    statics: tuple[StaticCollider, ...] = ()

    def contacts_at(self, center) -> list[Contact]:
        return sphere_contacts(center, self.radius, self.frustum, self.statics)
