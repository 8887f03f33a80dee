"""Parametric scene description: poses, templates, scenes and scenarios.

A scenario document is JSON (see ``data/scenario.schema``). Parsing applies
defaults, builds the typed model and then runs the semantic validator; a
document may set ``allow_invalid`` to skip the validator (the schema check
still applies).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .config import DEFAULT_NEAR
from .meshes import Mesh


class ScenarioError(ValueError):
    """Raised for scenario documents that cannot be turned into a Scenario."""


def _vec3(value, name: str) -> tuple[float, float, float]:
    x, y, z = (float(v) for v in value)
    return (x, y, z)


@dataclass(frozen=True)
class Pose:
    """Position in meters plus orientation as Euler degrees.

    Rotation components are stored exactly as given (no modular reduction);
    see ``geometry`` for the axis conventions.
    """

    position: tuple[float, float, float]
    rotation: tuple[float, float, float]

    @classmethod
    def of(cls, position, rotation=(0.0, 0.0, 0.0)) -> "Pose":
        return cls(_vec3(position, "position"), _vec3(rotation, "rotation"))

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.position + self.rotation)


ORIGIN_POSE = Pose((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class Waypoint:
    pose: Pose

    @classmethod
    def of(cls, position, rotation=(0.0, 0.0, 0.0)) -> "Waypoint":
        return cls(Pose.of(position, rotation))


@dataclass(frozen=True)
class Template:
    """A named, spawnable object definition.

    ``category_id`` keys the semantic segmentation view and is frozen in
    ``data/categories.json``; 0 is reserved for background.
    """

    name: str
    category_id: int
    mesh: Mesh
    collision_radius: float
    base_color: tuple[float, float, float]

    def __post_init__(self):
        if self.category_id < 1:
            raise ValueError(f"template {self.name!r}: category_id must be >= 1")
        if self.mesh.triangle_count < 4:
            raise ValueError(f"template {self.name!r}: mesh needs >= 4 triangles")
        if not np_all_finite(self.mesh.vertices):
            raise ValueError(f"template {self.name!r}: non-finite mesh vertices")
        max_r = self.mesh.max_vertex_radius()
        if not (self.collision_radius > 0.0 and self.collision_radius >= 0.5 * max_r):
            raise ValueError(
                f"template {self.name!r}: collision_radius {self.collision_radius} "
                f"not representative of mesh extent {max_r}")


def np_all_finite(arr) -> bool:
    import numpy as np

    return bool(np.isfinite(arr).all())


@dataclass(frozen=True)
class SceneDefinition:
    name: str
    static_objects: tuple[tuple[Template, Pose], ...]
    templates: tuple[Template, ...]
    background_color: tuple[float, float, float]
    default_agent_pose: Pose

    def template(self, name: str) -> Template | None:
        for t in self.templates:
            if t.name == name:
                return t
        return None


# --- trajectory parameter bundles (evaluated in the trajectory module) ---


@dataclass(frozen=True)
class LinearWaypoints:
    """Closed waypoint loop traversed at constant positional speed."""

    waypoints: tuple[Waypoint, ...]
    total_time: float


@dataclass(frozen=True)
class CatmullWaypoints:
    """Closed-loop uniform Catmull-Rom spline through the waypoints."""

    waypoints: tuple[Waypoint, ...]
    total_time: float


@dataclass(frozen=True)
class UniformRandomBounce:
    """Inertial motion with seeded random rebound direction and torque."""

    speed: float
    angular_speed: float
    start_direction: tuple[float, float, float]
    seed: int | None = None  # None: derive from master seed and object id


TrajectoryKind = LinearWaypoints | CatmullWaypoints | UniformRandomBounce


@dataclass(frozen=True)
class ObjectSpec:
    id: str
    template_name: str
    initial_pose: Pose
    trajectory: TrajectoryKind | None = None
    limited_to_view: bool = False
    spawn_frame: int = 0  # "immediate" parses to 0
    despawn_frame: int | None = None  # None: never


@dataclass(frozen=True)
class AllTogether:
    """Every trajectory becomes active once sim time reaches wait_time."""

    wait_time: float = 0.0


@dataclass(frozen=True)
class WaitUntilComplete:
    """Trajectories run one at a time, each next one starting when the
    previous finishes a full loop. Only loop-based dynamics can complete,
    so a random-bounce entry is terminal."""


@dataclass(frozen=True)
class DictTimings:
    """Explicit schedule: each listed object runs for its duration, in list
    order, one at a time."""

    durations: tuple[tuple[str, float], ...]


TimingsSpec = AllTogether | WaitUntilComplete | DictTimings


@dataclass(frozen=True)
class FrustumSpec:
    enabled: bool = False
    far_distance: float = 10.0


@dataclass(frozen=True)
class Scenario:
    scene_name: str
    objects: tuple[ObjectSpec, ...] = ()
    timings: TimingsSpec = field(default_factory=AllTogether)
    frustum: FrustumSpec = field(default_factory=FrustumSpec)
    agent_pose: Pose | None = None  # None: scene default
    seed: int = 0


# --- document parsing ---


_SCHEMA = None


def scenario_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        text = resources.files("scenestream").joinpath("data/scenario.schema").read_text("utf-8")
        _SCHEMA = json.loads(text)
    return _SCHEMA


def parse_trajectory_doc(doc: dict) -> TrajectoryKind:
    kind = doc["kind"]
    if kind in ("linear_waypoints", "catmull_waypoints"):
        wps = tuple(Waypoint.of(w["position"], w["rotation"]) for w in doc["waypoints"])
        cls = LinearWaypoints if kind == "linear_waypoints" else CatmullWaypoints
        return cls(waypoints=wps, total_time=float(doc["total_time"]))
    if kind == "uniform_random_bounce":
        seed = doc.get("seed")
        return UniformRandomBounce(
            speed=float(doc["speed"]),
            angular_speed=float(doc["angular_speed"]),
            start_direction=_vec3(doc["start_direction"], "start_direction"),
            seed=None if seed is None else int(seed),
        )
    raise ScenarioError(f"unknown trajectory kind {kind!r}")


def _parse_timings(doc: dict | None) -> TimingsSpec:
    if doc is None:
        return AllTogether(0.0)
    kind = doc["kind"]
    if kind == "all_together":
        return AllTogether(wait_time=float(doc.get("wait_time", 0.0)))
    if kind == "wait_until_complete":
        return WaitUntilComplete()
    if kind == "dict":
        return DictTimings(durations=tuple((str(i), float(d)) for i, d in doc["durations"]))
    raise ScenarioError(f"unknown timings kind {kind!r}")


def parse_scenario(document: str) -> Scenario:
    """Parse a JSON scenario document into a validated Scenario.

    Raises ScenarioError with a position for malformed JSON, a schema path
    for structural problems, and the first validator findings for semantic
    ones (unless the document sets ``allow_invalid``).
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc

    try:
        jsonschema.validate(doc, scenario_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"invalid document at {path}: {exc.message}") from exc

    objects = []
    for obj in doc.get("objects", []):
        spawn = obj.get("spawn_frame", "immediate")
        despawn = obj.get("despawn_frame", "never")
        traj_doc = obj.get("trajectory")
        objects.append(ObjectSpec(
            id=str(obj["id"]),
            template_name=str(obj["template"]),
            initial_pose=Pose.of(obj["position"], obj["rotation"]),
            trajectory=None if traj_doc is None else parse_trajectory_doc(traj_doc),
            limited_to_view=bool(obj.get("limited_to_view", False)),
            spawn_frame=0 if spawn == "immediate" else int(spawn),
            despawn_frame=None if despawn == "never" else int(despawn),
        ))

    frustum_doc = doc.get("frustum")
    frustum = FrustumSpec() if frustum_doc is None else FrustumSpec(
        enabled=bool(frustum_doc["enabled"]),
        far_distance=float(frustum_doc.get("far_distance", 10.0)),
    )

    agent_doc = doc.get("agent_pose")
    scenario = Scenario(
        scene_name=str(doc["scene"]),
        objects=tuple(objects),
        timings=_parse_timings(doc.get("timings")),
        frustum=frustum,
        agent_pose=None if agent_doc is None else Pose.of(agent_doc["position"], agent_doc["rotation"]),
        seed=int(doc.get("seed", 0)),
    )

    if not doc.get("allow_invalid", False):
        violations = validate_scenario(scenario)
        if violations:
            raise ScenarioError("; ".join(violations))
    return scenario


def _serialize_trajectory(traj: TrajectoryKind) -> dict:
    if isinstance(traj, (LinearWaypoints, CatmullWaypoints)):
        return {
            "kind": "linear_waypoints" if isinstance(traj, LinearWaypoints) else "catmull_waypoints",
            "waypoints": [{"position": list(w.pose.position), "rotation": list(w.pose.rotation)}
                          for w in traj.waypoints],
            "total_time": traj.total_time,
        }
    out = {
        "kind": "uniform_random_bounce",
        "speed": traj.speed,
        "angular_speed": traj.angular_speed,
        "start_direction": list(traj.start_direction),
    }
    if traj.seed is not None:
        out["seed"] = traj.seed
    return out


def serialize_scenario(s: Scenario) -> str:
    """Inverse of parse_scenario; parse(serialize(parse(d))) == parse(d)."""
    doc: dict = {"scene": s.scene_name, "seed": s.seed}
    if s.agent_pose is not None:
        doc["agent_pose"] = {"position": list(s.agent_pose.position),
                             "rotation": list(s.agent_pose.rotation)}
    doc["objects"] = []
    for o in s.objects:
        entry: dict = {
            "id": o.id,
            "template": o.template_name,
            "position": list(o.initial_pose.position),
            "rotation": list(o.initial_pose.rotation),
        }
        if o.trajectory is not None:
            entry["trajectory"] = _serialize_trajectory(o.trajectory)
        if o.limited_to_view:
            entry["limited_to_view"] = True
        if o.spawn_frame != 0:
            entry["spawn_frame"] = o.spawn_frame
        if o.despawn_frame is not None:
            entry["despawn_frame"] = o.despawn_frame
        doc["objects"].append(entry)
    if isinstance(s.timings, AllTogether):
        doc["timings"] = {"kind": "all_together", "wait_time": s.timings.wait_time}
    elif isinstance(s.timings, WaitUntilComplete):
        doc["timings"] = {"kind": "wait_until_complete"}
    else:
        doc["timings"] = {"kind": "dict", "durations": [[i, d] for i, d in s.timings.durations]}
    doc["frustum"] = {"enabled": s.frustum.enabled, "far_distance": s.frustum.far_distance}
    return json.dumps(doc, indent=2)


def validate_scenario(s: Scenario) -> list[str]:
    """Check every scenario invariant; returns human-readable violations.

    An empty list means the scenario is loadable. Violations are data, not
    exceptions, so tooling can report all of them at once.
    """
    from . import trajectory as _traj
    from .scenes import lookup_scene

    violations: list[str] = []
    scene = None
    try:
        scene = lookup_scene(s.scene_name)
    except KeyError:
        violations.append(f"scene {s.scene_name!r}: unknown scene")

    seen_ids: set[str] = set()
    for o in s.objects:
        if o.id in seen_ids:
            violations.append(f"object {o.id!r}: duplicate id")
        seen_ids.add(o.id)
        if scene is not None and scene.template(o.template_name) is None:
            violations.append(f"object {o.id!r}: unknown template {o.template_name!r}")
        if not o.initial_pose.is_finite():
            violations.append(f"object {o.id!r}: non-finite initial pose")
        if o.spawn_frame < 0:
            violations.append(f"object {o.id!r}: negative spawn_frame")
        if o.despawn_frame is not None and o.despawn_frame <= o.spawn_frame:
            violations.append(f"object {o.id!r}: despawn_frame must exceed spawn_frame")
        if o.trajectory is not None:
            violations.extend(f"object {o.id!r}: {v}" for v in validate_trajectory(o.trajectory))

    if isinstance(s.timings, AllTogether):
        if s.timings.wait_time < 0:
            violations.append("timings: wait_time must be >= 0")
    elif isinstance(s.timings, WaitUntilComplete):
        moving = [o for o in s.objects if o.trajectory is not None]
        for i, o in enumerate(moving[:-1]):
            if _traj.trajectory_duration(o.trajectory) == math.inf:
                violations.append(
                    f"object {o.id!r}: wait_until_complete cannot schedule objects after "
                    "a random-bounce trajectory (it never completes)")
    else:
        listed: set[str] = set()
        for obj_id, duration in s.timings.durations:
            if obj_id not in seen_ids:
                violations.append(f"timings: unknown object id {obj_id!r}")
            if obj_id in listed:
                violations.append(f"timings: object {obj_id!r} listed more than once")
            listed.add(obj_id)
            if not duration > 0:
                violations.append(f"timings: object {obj_id!r} duration must be > 0")

    if s.frustum.enabled and not (s.frustum.far_distance > DEFAULT_NEAR):
        violations.append(f"frustum: far_distance must exceed the camera near plane ({DEFAULT_NEAR})")
    if s.agent_pose is not None and not s.agent_pose.is_finite():
        violations.append("agent_pose: non-finite")
    if s.seed < 0 or s.seed > 0xFFFFFFFFFFFFFFFF:
        violations.append("seed: must fit in 64 bits unsigned")
    return violations


def validate_trajectory(traj: TrajectoryKind) -> list[str]:
    out: list[str] = []
    if isinstance(traj, (LinearWaypoints, CatmullWaypoints)):
        if len(traj.waypoints) < 2:
            out.append("waypoint trajectory needs at least 2 waypoints")
        if not all(w.pose.is_finite() for w in traj.waypoints):
            out.append("waypoint with a non-finite coordinate")
        if not traj.total_time > 0:
            out.append("total_time must be > 0")
    else:
        if not traj.speed > 0:
            out.append("bounce speed must be > 0")
        if traj.angular_speed < 0:
            out.append("bounce angular_speed must be >= 0")
        d = traj.start_direction
        if not all(math.isfinite(v) for v in d) or d == (0.0, 0.0, 0.0):
            out.append("bounce start_direction must be finite and non-zero")
        if traj.seed is not None and not (0 <= traj.seed <= 0xFFFFFFFFFFFFFFFF):
            out.append("bounce seed must fit in 64 bits unsigned")
    return out
