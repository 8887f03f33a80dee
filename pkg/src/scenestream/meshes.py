"""Procedural triangle meshes for object templates.

All template geometry is generated at import time from primitives (no binary
assets). Meshes are flat-shaded: every face gets its own vertices, and the
per-vertex normal equals the face normal. Winding is consistent: for every
triangle (v0, v1, v2), cross(v1 - v0, v2 - v0) points outward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3) float64, object-local meters
    normals: np.ndarray  # (V, 3) float64, unit, one per vertex
    triangles: np.ndarray  # (T, 3) int32 indices into vertices

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    def max_vertex_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def is_sphere_like(self, tolerance: float = 0.02) -> bool:
        """True when the surface closely wraps a sphere around the origin.

        Requires both equidistant vertices and face centroids near the same
        radius; the centroid test rejects boxes, whose corners are also
        equidistant. Used to pick a ball collision proxy instead of an AABB.
        """
        r = np.linalg.norm(self.vertices, axis=1)
        mean = float(r.mean())
        if mean == 0.0:
            return False
        if not np.all(np.abs(r - mean) <= tolerance * mean):
            return False
        centroids = self.vertices[self.triangles].mean(axis=1)
        return bool(np.linalg.norm(centroids, axis=1).min() >= 0.9 * mean)


def _mesh_from_faces(faces: list[np.ndarray]) -> Mesh:
    """Build a flat-shaded mesh from triangle corner triples (each (3, 3))."""
    tri = np.asarray(faces, dtype=np.float64)  # (T, 3, 3)
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    n = np.cross(e1, e2)
    lengths = np.linalg.norm(n, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    n = n / lengths
    vertices = tri.reshape(-1, 3)
    normals = np.repeat(n, 3, axis=0)
    triangles = np.arange(vertices.shape[0], dtype=np.int32).reshape(-1, 3)
    return Mesh(vertices=vertices, normals=normals, triangles=triangles)


def _quad(a, b, c, d) -> list[np.ndarray]:
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    return [np.stack([a, b, c]), np.stack([a, c, d])]


def box(size_x: float, size_y: float, size_z: float, center=(0.0, 0.0, 0.0)) -> Mesh:
    hx, hy, hz = size_x / 2.0, size_y / 2.0, size_z / 2.0
    cx, cy, cz = center
    faces: list[np.ndarray] = []
    # (normal axis, u axis, v axis) chosen so cross(u, v) == outward normal
    for n_ax, u_ax, v_ax in (
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
        ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
        ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
        ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
        ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
        ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
    ):
        n = np.array(n_ax, float)
        u = np.array(u_ax, float)
        v = np.array(v_ax, float)
        half = np.array([hx, hy, hz])
        c = np.array([cx, cy, cz]) + n * np.abs(n @ half)
        hu = float(np.abs(u) @ half)
        hv = float(np.abs(v) @ half)
        faces += _quad(c - u * hu - v * hv, c + u * hu - v * hv,
                       c + u * hu + v * hv, c - u * hu + v * hv)
    return _mesh_from_faces(faces)


def cylinder(radius: float, height: float, segments: int = 24) -> Mesh:
    h = height / 2.0
    theta = np.linspace(0.0, 2.0 * np.pi, segments + 1)
    ring = np.stack([radius * np.cos(theta), np.zeros_like(theta), radius * np.sin(theta)], axis=1)
    faces: list[np.ndarray] = []
    top_c = np.array([0.0, h, 0.0])
    bot_c = np.array([0.0, -h, 0.0])
    for i in range(segments):
        b0 = ring[i] + bot_c
        b1 = ring[i + 1] + bot_c
        t0 = ring[i] + top_c
        t1 = ring[i + 1] + top_c
        faces += _quad(b0, t0, t1, b1)
        faces.append(np.stack([top_c, t1, t0]))
        faces.append(np.stack([bot_c, b0, b1]))
    return _mesh_from_faces(faces)


def sphere(radius: float, rings: int = 10, segments: int = 16) -> Mesh:
    phi = np.linspace(-np.pi / 2.0, np.pi / 2.0, rings + 1)
    theta = np.linspace(0.0, 2.0 * np.pi, segments + 1)

    def pt(i_phi: int, i_theta: int) -> np.ndarray:
        p, t = phi[i_phi], theta[i_theta]
        return radius * np.array([np.cos(p) * np.cos(t), np.sin(p), np.cos(p) * np.sin(t)])

    faces: list[np.ndarray] = []
    for i in range(rings):
        for j in range(segments):
            p00 = pt(i, j)
            p01 = pt(i, j + 1)
            p10 = pt(i + 1, j)
            p11 = pt(i + 1, j + 1)
            if i == 0:  # south pole fan
                faces.append(np.stack([p00, p10, p11]))
            elif i == rings - 1:  # north pole fan
                faces.append(np.stack([p00, p10, p01]))
            else:
                faces += _quad(p00, p10, p11, p01)
    return _mesh_from_faces(faces)


def transform(mesh: Mesh, offset=(0.0, 0.0, 0.0), rotation: np.ndarray | None = None,
              scale=(1.0, 1.0, 1.0)) -> Mesh:
    v = mesh.vertices * np.asarray(scale, dtype=np.float64)
    n = mesh.normals / np.asarray(scale, dtype=np.float64)  # inverse-transpose for axis scaling
    if rotation is not None:
        v = v @ rotation.T
        n = n @ rotation.T
    lengths = np.linalg.norm(n, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return Mesh(vertices=v + np.asarray(offset, dtype=np.float64),
                normals=n / lengths, triangles=mesh.triangles.copy())


def merge(*meshes: Mesh) -> Mesh:
    vertices = np.concatenate([m.vertices for m in meshes])
    normals = np.concatenate([m.normals for m in meshes])
    offsets = np.cumsum([0] + [m.vertices.shape[0] for m in meshes[:-1]])
    triangles = np.concatenate([m.triangles + off for m, off in zip(meshes, offsets)])
    return Mesh(vertices=vertices, normals=normals, triangles=triangles.astype(np.int32))


def load_obj(path) -> Mesh:
    """Minimal Wavefront OBJ loader (v/f records, fan triangulation).

    Normals in the file are ignored; faces are re-split for flat shading so
    loaded templates behave like the procedural ones.
    """
    positions: list[list[float]] = []
    faces: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                positions.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                idx = [i - 1 if i > 0 else len(positions) + i for i in idx]
                for k in range(1, len(idx) - 1):
                    faces.append(np.array([positions[idx[0]],
                                           positions[idx[k]],
                                           positions[idx[k + 1]]], dtype=np.float64))
    if len(faces) < 4:
        raise ValueError(f"mesh in {path!r} has fewer than 4 triangles")
    return _mesh_from_faces(faces)
