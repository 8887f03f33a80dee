"""Built-in scenes and the template registry.

Four scenes ship: ``object_view`` (empty, monochrome background) and three
furnished rooms (bedroom, living room, bathroom) assembled from colored
primitives. Category ids come from the frozen registry in
``data/categories.json`` so segmentation output is stable across versions.

Scene names are resolved leniently: ``room_02/scene`` and ``room02`` refer
to the same scene.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

import numpy as np

from . import meshes
from .meshes import Mesh
from .scene_model import Pose, SceneDefinition, Template

SCENE_NAMES = ("object_view", "room01", "room02", "room03")


@lru_cache(maxsize=1)
def category_registry() -> dict[str, int]:
    text = resources.files("scenestream").joinpath("data/categories.json").read_text("utf-8")
    doc = json.loads(text)
    return {name: int(cid) for name, cid in doc.items() if not name.startswith("_")}


def _rot_y(degrees: float) -> np.ndarray:
    r = math.radians(degrees)
    c, s = math.cos(r), math.sin(r)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)


def _template(name: str, mesh: Mesh, color: tuple[float, float, float]) -> Template:
    return Template(
        name=name,
        category_id=category_registry()[name],
        mesh=mesh,
        collision_radius=mesh.max_vertex_radius(),
        base_color=color,
    )


def _chair_mesh() -> Mesh:
    # Centered vertically so the proxy sphere hugs the geometry.
    seat = meshes.box(0.45, 0.05, 0.45, center=(0, -0.05, 0))
    back = meshes.box(0.45, 0.45, 0.05, center=(0, 0.25, -0.2))
    legs = [meshes.box(0.05, 0.4, 0.05, center=(sx * 0.19, -0.28, sz * 0.19))
            for sx in (-1, 1) for sz in (-1, 1)]
    return meshes.merge(seat, back, *legs)


def _racket_mesh() -> Mesh:
    head = meshes.transform(
        meshes.cylinder(0.22, 0.04, segments=16),
        offset=(0, 0.18, 0),
        rotation=np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=np.float64),  # disc facing +-Z
    )
    handle = meshes.box(0.05, 0.36, 0.05, center=(0, -0.2, 0))
    return meshes.merge(head, handle)


def _lamp_mesh() -> Mesh:
    pole = meshes.cylinder(0.03, 0.5, segments=10)
    shade = meshes.cylinder(0.15, 0.2, segments=12)
    return meshes.merge(meshes.transform(pole, offset=(0, 0.25, 0)),
                        meshes.transform(shade, offset=(0, 0.58, 0)))


def _sofa_mesh() -> Mesh:
    seat = meshes.box(1.8, 0.45, 0.8, center=(0, 0.225, 0))
    back = meshes.box(1.8, 0.55, 0.2, center=(0, 0.7, -0.3))
    arms = [meshes.box(0.2, 0.62, 0.8, center=(sx * 0.85, 0.31, 0)) for sx in (-1, 1)]
    return meshes.merge(seat, back, *arms)


def _table_mesh() -> Mesh:
    top = meshes.box(1.2, 0.06, 0.7, center=(0, 0.72, 0))
    legs = [meshes.box(0.06, 0.72, 0.06, center=(sx * 0.55, 0.36, sz * 0.3))
            for sx in (-1, 1) for sz in (-1, 1)]
    return meshes.merge(top, *legs)


def _sink_mesh() -> Mesh:
    pedestal = meshes.cylinder(0.08, 0.7, segments=10)
    basin = meshes.cylinder(0.25, 0.15, segments=14)
    return meshes.merge(meshes.transform(pedestal, offset=(0, 0.35, 0)),
                        meshes.transform(basin, offset=(0, 0.77, 0)))


def _toilet_mesh() -> Mesh:
    base = meshes.box(0.4, 0.4, 0.5, center=(0, 0.2, 0))
    tank = meshes.box(0.4, 0.4, 0.15, center=(0, 0.6, -0.175))
    return meshes.merge(base, tank)


def _bed_mesh() -> Mesh:
    base = meshes.box(1.6, 0.4, 2.0, center=(0, 0.2, 0))
    headboard = meshes.box(1.6, 0.6, 0.12, center=(0, 0.6, -0.94))
    pillow = meshes.box(0.6, 0.12, 0.35, center=(-0.35, 0.46, -0.7))
    return meshes.merge(base, headboard, pillow)


@lru_cache(maxsize=1)
def all_templates() -> dict[str, Template]:
    spawnable = {
        "Cylinder": _template("Cylinder", meshes.cylinder(0.25, 1.0), (0.85, 0.45, 0.15)),
        "Cube": _template("Cube", meshes.box(0.5, 0.5, 0.5), (0.8, 0.2, 0.2)),
        "Sphere": _template("Sphere", meshes.sphere(0.35), (0.2, 0.4, 0.8)),
        "Tennis Racket 01": _template("Tennis Racket 01", _racket_mesh(), (0.75, 0.2, 0.25)),
        "Chair 01": _template("Chair 01", _chair_mesh(), (0.55, 0.35, 0.18)),
        "Pillow 01": _template("Pillow 01", meshes.box(0.5, 0.15, 0.35), (0.9, 0.85, 0.75)),
        "Dish 01": _template("Dish 01", meshes.cylinder(0.18, 0.04, segments=16), (0.92, 0.92, 0.95)),
    }
    furniture = {
        "Floor": _template("Floor", meshes.box(6.0, 0.1, 6.0), (0.45, 0.38, 0.30)),
        "Wall": _template("Wall", meshes.box(6.0, 2.6, 0.1), (0.82, 0.80, 0.75)),
        "Bed 01": _template("Bed 01", _bed_mesh(), (0.35, 0.5, 0.7)),
        "Nightstand 01": _template("Nightstand 01", meshes.box(0.5, 0.5, 0.4, center=(0, 0.25, 0)),
                                   (0.5, 0.33, 0.2)),
        "Lamp 01": _template("Lamp 01", _lamp_mesh(), (0.95, 0.9, 0.6)),
        "Rug 01": _template("Rug 01", meshes.box(2.0, 0.02, 1.4, center=(0, 0.01, 0)), (0.55, 0.15, 0.2)),
        "Sofa 01": _template("Sofa 01", _sofa_mesh(), (0.3, 0.45, 0.4)),
        "Table 01": _template("Table 01", _table_mesh(), (0.5, 0.35, 0.22)),
        "TV 01": _template("TV 01", meshes.box(1.2, 0.7, 0.06, center=(0, 0.35, 0)), (0.12, 0.12, 0.14)),
        "Bathtub 01": _template("Bathtub 01", meshes.box(1.7, 0.55, 0.8, center=(0, 0.275, 0)),
                                (0.9, 0.92, 0.95)),
        "Sink 01": _template("Sink 01", _sink_mesh(), (0.88, 0.9, 0.93)),
        "Toilet 01": _template("Toilet 01", _toilet_mesh(), (0.9, 0.9, 0.92)),
        "Cabinet 01": _template("Cabinet 01", meshes.box(0.8, 1.6, 0.4, center=(0, 0.8, 0)),
                                (0.75, 0.78, 0.8)),
        "Mirror 01": _template("Mirror 01", meshes.box(0.6, 0.8, 0.03, center=(0, 0.4, 0)),
                               (0.7, 0.8, 0.9)),
        "Ceiling": _template("Ceiling", meshes.box(6.0, 0.1, 6.0), (0.9, 0.9, 0.88)),
    }
    return {**spawnable, **furniture}


def _room_shell() -> list[tuple[str, Pose]]:
    return [
        ("Floor", Pose.of((0, -0.05, 0))),
        ("Ceiling", Pose.of((0, 2.65, 0))),
        ("Wall", Pose.of((0, 1.3, 3))),
        ("Wall", Pose.of((0, 1.3, -3))),
        ("Wall", Pose.of((-3, 1.3, 0), (0, 90, 0))),
        ("Wall", Pose.of((3, 1.3, 0), (0, 90, 0))),
    ]


@lru_cache(maxsize=1)
def builtin_scenes() -> list[SceneDefinition]:
    """The four scenes available to agents, in canonical order."""
    reg = all_templates()
    core = ["Cylinder", "Cube", "Sphere"]

    def build(name, statics, template_names, background, agent_pose):
        return SceneDefinition(
            name=name,
            static_objects=tuple((reg[t], pose) for t, pose in statics),
            templates=tuple(reg[t] for t in template_names),
            background_color=background,
            default_agent_pose=agent_pose,
        )

    object_view = build(
        "object_view",
        statics=[],
        template_names=core + ["Tennis Racket 01", "Chair 01", "Pillow 01", "Dish 01"],
        background=(0.35, 0.45, 0.55),
        agent_pose=Pose.of((0, 0.5, 0)),
    )

    room01 = build(
        "room01",
        statics=_room_shell() + [
            ("Bed 01", Pose.of((-1.5, 0, -1.8))),
            ("Nightstand 01", Pose.of((-2.6, 0, -0.6))),
            ("Lamp 01", Pose.of((-2.6, 0.5, -0.6))),
            ("Rug 01", Pose.of((0.5, 0, 0.5))),
            ("Cabinet 01", Pose.of((2.5, 0, -2.2))),
        ],
        template_names=core + ["Tennis Racket 01", "Floor", "Wall", "Ceiling", "Bed 01",
                               "Nightstand 01", "Lamp 01", "Rug 01", "Cabinet 01"],
        background=(0.55, 0.65, 0.75),
        agent_pose=Pose.of((0, 1.7, 2.4), (10, 180, 0)),
    )

    room02 = build(
        "room02",
        statics=_room_shell() + [
            ("Sofa 01", Pose.of((1.8, 0, 1.8), (0, 180, 0))),
            ("Table 01", Pose.of((0.8, 0, -1.4))),
            ("TV 01", Pose.of((2.94, 1.0, -0.8), (0, 90, 0))),
            ("Rug 01", Pose.of((0.5, 0, 0.3))),
        ],
        template_names=core + ["Chair 01", "Pillow 01", "Dish 01", "Floor", "Wall", "Ceiling",
                               "Sofa 01", "Table 01", "TV 01", "Rug 01"],
        background=(0.55, 0.65, 0.75),
        agent_pose=Pose.of((-2.6, 1.6, 0), (0, 90, 0)),
    )

    room03 = build(
        "room03",
        statics=_room_shell() + [
            ("Bathtub 01", Pose.of((-2.0, 0, 1.5), (0, 90, 0))),
            ("Sink 01", Pose.of((2.5, 0, 2.0))),
            ("Toilet 01", Pose.of((2.5, 0, 0.5), (0, -90, 0))),
            ("Mirror 01", Pose.of((2.5, 1.2, 2.94))),
            ("Cabinet 01", Pose.of((-2.5, 0, -1.5))),
        ],
        template_names=core + ["Floor", "Wall", "Ceiling", "Bathtub 01", "Sink 01", "Toilet 01",
                               "Mirror 01", "Cabinet 01"],
        background=(0.6, 0.7, 0.78),
        agent_pose=Pose.of((0, 1.6, -2.3)),
    )

    return [object_view, room01, room02, room03]


def canonical_scene_name(name: str) -> str:
    """Normalize user-facing scene ids: ``room_02/scene`` -> ``room02``."""
    base = name.strip()
    if base.endswith("/scene"):
        base = base[: -len("/scene")]
    if base in SCENE_NAMES:
        return base
    squeezed = base.replace("_", "")
    for known in SCENE_NAMES:
        if squeezed == known.replace("_", ""):
            return known
    raise KeyError(f"unknown scene {name!r}; known scenes: {', '.join(SCENE_NAMES)}")


def lookup_scene(name: str) -> SceneDefinition:
    canon = canonical_scene_name(name)
    for scene in builtin_scenes():
        if scene.name == canon:
            return scene
    raise KeyError(name)
