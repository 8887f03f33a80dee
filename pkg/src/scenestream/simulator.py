"""Deterministic fixed-timestep world loop.

The world advances one frame per ``step()``; sim time is always computed
as ``frame / fps`` rather than accumulated. Trajectory activation windows
are resolved analytically (in wall-clock seconds) at load, so waypoint
poses are pure functions of the frame index and replaying a scenario is
bit-exact. All mutating calls are expected to be serialized by the owner
(the server funnels them through one lock); snapshots are immutable and
safe to render concurrently with later steps.

Spawn/despawn semantics: an object spawned by a call at frame k first
appears at frame k+1 and shows its initial pose there; a despawn at frame
k leaves the object visible through frame k and absent from k+1 on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import trajectory as traj_mod
from .collision import ColliderSet, Frustum, StaticCollider, build_frustum, static_collider
from .config import DEFAULT_FPS
from .flow import InstanceMotion, compute_flow
from .geometry import rotation_matrix
from .renderer import ALL_VIEWS, VIEW_FLOW, Camera, FrameViews, RenderObject, rasterize
from .rng import Xoshiro256, derive_stream_seed
from .scene_model import (AllTogether, CatmullWaypoints, DictTimings, LinearWaypoints,
                          ObjectSpec, Pose, Scenario, SceneDefinition, Template,
                          TimingsSpec, TrajectoryKind, UniformRandomBounce,
                          WaitUntilComplete, validate_scenario)
from .scenes import lookup_scene
from .trajectory import BounceState, bounce_step, initial_bounce_state, trajectory_duration

log = logging.getLogger(__name__)


class SimulationError(ValueError):
    """Raised for invalid runtime commands (unknown ids, templates, ...)."""


@dataclass
class ObjectInstance:
    runtime_id: int
    spec: ObjectSpec
    template: Template
    current_pose: Pose
    prev_pose: Pose
    spawn_frame: int
    despawn_frame: int | None  # exclusive; None = never
    window_start: float  # activation window in sim seconds
    window_end: float
    bounce: BounceState | None = None
    gate_active: bool = False
    move_offset: np.ndarray | None = None  # 6-vector pose offset from move_object
    move_elapsed: float = 0.0

    def visible_at(self, frame: int) -> bool:
        return self.spawn_frame <= frame and (self.despawn_frame is None or frame < self.despawn_frame)


@dataclass(frozen=True)
class StaticInstance:
    runtime_id: int
    template: Template
    pose: Pose


@dataclass(frozen=True)
class RenderItem:
    instance_id: int
    template: Template
    pose: Pose
    prev_pose: Pose


@dataclass(frozen=True)
class Snapshot:
    """Immutable per-frame view of the world: everything the renderer and
    flow computation need, nothing else."""

    frame: int
    camera_pose: Pose
    background_color: tuple[float, float, float]
    items: tuple[RenderItem, ...]


@dataclass
class WorldState:
    scene: SceneDefinition
    fps: int
    camera: Camera
    frame: int = 0
    statics: tuple[StaticInstance, ...] = ()
    static_colliders: tuple[StaticCollider, ...] = ()
    objects: list[ObjectInstance] = field(default_factory=list)
    frustum: Frustum | None = None
    frustum_far: float | None = None
    master_seed: int = 0
    master_rng: Xoshiro256 = field(default_factory=lambda: Xoshiro256(0))
    next_runtime_id: int = 1
    warnings: list[str] = field(default_factory=list)
    pending_camera_pose: Pose | None = None

    @property
    def sim_time(self) -> float:
        return self.frame / self.fps

    # -- commands ---------------------------------------------------------

    def spawn_object(self, template_name: str, pose: Pose,
                     trajectory: TrajectoryKind | None = None,
                     limited_to_view: bool = False) -> int:
        """Create an instance that first appears at frame ``frame + 1``."""
        template = self.scene.template(template_name)
        if template is None:
            raise SimulationError(f"unknown template {template_name!r} in scene {self.scene.name!r}")
        runtime_id = self._take_id()
        spawn_frame = self.frame + 1
        spec = ObjectSpec(id=f"_rt{runtime_id}", template_name=template_name,
                          initial_pose=pose, trajectory=trajectory,
                          limited_to_view=limited_to_view, spawn_frame=spawn_frame)
        obj = ObjectInstance(
            runtime_id=runtime_id,
            spec=spec,
            template=template,
            current_pose=pose,
            prev_pose=pose,
            spawn_frame=spawn_frame,
            despawn_frame=None,
            window_start=spawn_frame / self.fps,
            window_end=math.inf,
        )
        if isinstance(trajectory, UniformRandomBounce):
            stream = derive_stream_seed(self.master_seed, spec.id)
            obj.bounce = initial_bounce_state(trajectory, pose, stream)
        if limited_to_view and self.frustum is None:
            message = (f"object {spec.id}: limited_to_view has no effect until "
                       "frustum barriers exist")
            self.warnings.append(message)
            log.warning(message)
        self.objects.append(obj)
        return runtime_id

    def despawn_object(self, runtime_id: int) -> None:
        """Make the object's last appearance be the current frame."""
        obj = self._live_object(runtime_id)
        obj.despawn_frame = self.frame + 1

    def move_object(self, runtime_id: int, pose: Pose) -> None:
        """Teleport an object. Waypoint trajectories keep their parameter and
        glide back to the parametric pose within one segment duration; bounce
        dynamics keep their velocity."""
        obj = self._live_object(runtime_id)
        traj = obj.spec.trajectory
        if isinstance(traj, (LinearWaypoints, CatmullWaypoints)):
            t = self.sim_time
            if t >= obj.window_start:
                elapsed = min(t, obj.window_end) - obj.window_start
                base = self._waypoint_pose(traj, elapsed)
                obj.move_offset = _pose6(pose) - _pose6(base)
                obj.move_elapsed = elapsed
        elif isinstance(traj, UniformRandomBounce) and obj.bounce is not None:
            obj.bounce = replace(obj.bounce, pose=pose)
        obj.current_pose = pose

    def set_agent_pose(self, pose: Pose) -> None:
        """Camera moves take effect at the next frame (and rebuild barriers)."""
        self.pending_camera_pose = pose

    # -- stepping ---------------------------------------------------------

    def step(self) -> None:
        if self.pending_camera_pose is not None:
            self.camera = replace(self.camera, pose=self.pending_camera_pose)
            self.pending_camera_pose = None
            if self.frustum is not None:
                self._build_barriers(self.frustum_far)

        self.frame += 1
        t = self.sim_time
        dt = 1.0 / self.fps

        for obj in self.objects:
            obj.prev_pose = obj.current_pose
            obj.gate_active = (obj.spec.trajectory is not None
                               and obj.window_start <= t < obj.window_end
                               and obj.visible_at(self.frame))
            if not obj.visible_at(self.frame) or self.frame == obj.spawn_frame:
                continue
            traj = obj.spec.trajectory
            if traj is None:
                continue
            if isinstance(traj, UniformRandomBounce):
                if obj.gate_active:
                    colliders = self._colliders_for(obj)
                    obj.bounce = bounce_step(obj.bounce, traj, dt, colliders)
                    obj.current_pose = obj.bounce.pose
                continue
            if t < obj.window_start:
                continue  # holds its pose until the gate opens
            elapsed = min(t, obj.window_end) - obj.window_start
            pose6 = _pose6(self._waypoint_pose(traj, elapsed))
            if obj.move_offset is not None:
                seg = traj.total_time / len(traj.waypoints)
                decay = 1.0 - (elapsed - obj.move_elapsed) / seg
                if decay <= 0.0:
                    obj.move_offset = None
                else:
                    pose6 = pose6 + obj.move_offset * decay
            pose6 = self._resolve_penetration(pose6, obj)
            obj.current_pose = _pose_from6(pose6)

    def snapshot(self) -> Snapshot:
        items = [RenderItem(s.runtime_id, s.template, s.pose, s.pose) for s in self.statics]
        for obj in self.objects:
            if obj.visible_at(self.frame):
                prev = obj.prev_pose if obj.spawn_frame < self.frame else obj.current_pose
                items.append(RenderItem(obj.runtime_id, obj.template, obj.current_pose, prev))
        return Snapshot(frame=self.frame, camera_pose=self.camera.pose,
                        background_color=self.scene.background_color, items=tuple(items))

    # -- internals --------------------------------------------------------

    def _live_object(self, runtime_id: int) -> ObjectInstance:
        for obj in self.objects:
            if obj.runtime_id == runtime_id:
                if obj.despawn_frame is not None and obj.despawn_frame <= self.frame + 1:
                    break
                return obj
        raise SimulationError(f"unknown object id {runtime_id}")

    def _colliders_for(self, obj: ObjectInstance) -> ColliderSet:
        return ColliderSet(
            radius=obj.template.collision_radius,
            frustum=self.frustum if obj.spec.limited_to_view else None,
            statics=self.static_colliders,
        )

    def _resolve_penetration(self, pose6: np.ndarray, obj: ObjectInstance) -> np.ndarray:
        colliders = self._colliders_for(obj)
        for _ in range(traj_mod.MAX_RESOLUTION_ITERATIONS):
            contacts = colliders.contacts_at(pose6[:3])
            if not contacts:
                break
            c = contacts[0]
            pose6 = pose6.copy()
            pose6[:3] += np.asarray(c.normal) * (c.penetration_depth + traj_mod.RESOLUTION_MARGIN)
        return pose6

    @staticmethod
    def _waypoint_pose(traj, elapsed: float) -> Pose:
        if isinstance(traj, LinearWaypoints):
            return traj_mod.linear_pose(traj, elapsed)
        return traj_mod.catmull_pose(traj, elapsed)

    def _take_id(self) -> int:
        rid = self.next_runtime_id
        self.next_runtime_id += 1
        return rid

    def spawn_collidable_view_frustum(self, far_distance: float) -> None:
        """Build invisible bounce barriers on the camera frustum borders."""
        self._build_barriers(far_distance)

    def _build_barriers(self, far_distance: float) -> None:
        cam = self.camera
        self.frustum = build_frustum(cam.pose, cam.vfov_deg, cam.aspect, cam.near, far_distance)
        self.frustum_far = far_distance


def _pose6(p: Pose) -> np.ndarray:
    return np.array(p.position + p.rotation, dtype=np.float64)


def _pose_from6(a: np.ndarray) -> Pose:
    return Pose(tuple(float(v) for v in a[:3]), tuple(float(v) for v in a[3:]))


def _activation_windows(scenario: Scenario, fps: int) -> dict[str, tuple[float, float]]:
    """Per-object activation window in sim seconds, from the timing spec."""
    windows: dict[str, tuple[float, float]] = {}
    moving = [o for o in scenario.objects if o.trajectory is not None]
    timings = scenario.timings
    if isinstance(timings, AllTogether):
        for o in moving:
            windows[o.id] = (timings.wait_time, math.inf)
    elif isinstance(timings, WaitUntilComplete):
        cursor = 0.0
        for o in moving:
            duration = trajectory_duration(o.trajectory)
            windows[o.id] = (cursor, cursor + duration)
            cursor += duration
    else:
        assert isinstance(timings, DictTimings)
        cursor = 0.0
        scheduled = {}
        for obj_id, duration in timings.durations:
            scheduled[obj_id] = (cursor, cursor + duration)
            cursor += duration
        for o in moving:
            windows[o.id] = scheduled.get(o.id, (math.inf, math.inf))
    # an object can never be active before it spawns
    by_id = {o.id: o for o in scenario.objects}
    for obj_id, (start, end) in windows.items():
        spawn_time = by_id[obj_id].spawn_frame / fps
        windows[obj_id] = (max(start, spawn_time), end)
    return windows


def load_scenario(scenario: Scenario, fps: int = DEFAULT_FPS,
                  camera: Camera | None = None,
                  agent_pose_override: Pose | None = None) -> WorldState:
    """World at frame 0: statics placed, immediate objects spawned at their
    initial poses, frustum barriers built when enabled, gates initialized.

    ``agent_pose_override`` substitutes for the scene default when the
    scenario itself does not pin the agent pose (the server uses it to keep
    a pose set before loading).
    """
    violations = validate_scenario(scenario)
    if violations:
        raise SimulationError("; ".join(violations))
    scene = lookup_scene(scenario.scene_name)

    pose = scenario.agent_pose or agent_pose_override or scene.default_agent_pose
    base_cam = camera or Camera(pose=pose)
    world = WorldState(
        scene=scene,
        fps=fps,
        camera=replace(base_cam, pose=pose),
        master_seed=scenario.seed,
        master_rng=Xoshiro256(scenario.seed),
    )

    statics = []
    colliders = []
    for template, s_pose in scene.static_objects:
        rid = world._take_id()
        statics.append(StaticInstance(rid, template, s_pose))
        colliders.append(static_collider(template, s_pose, f"static:{rid}"))
    world.statics = tuple(statics)
    world.static_colliders = tuple(colliders)

    if scenario.frustum.enabled:
        world.spawn_collidable_view_frustum(scenario.frustum.far_distance)

    windows = _activation_windows(scenario, fps)
    for spec in scenario.objects:
        template = scene.template(spec.template_name)
        obj = ObjectInstance(
            runtime_id=world._take_id(),
            spec=spec,
            template=template,
            current_pose=spec.initial_pose,
            prev_pose=spec.initial_pose,
            spawn_frame=spec.spawn_frame,
            despawn_frame=spec.despawn_frame,
            window_start=windows.get(spec.id, (math.inf, math.inf))[0],
            window_end=windows.get(spec.id, (math.inf, math.inf))[1],
        )
        if isinstance(spec.trajectory, UniformRandomBounce):
            stream = derive_stream_seed(scenario.seed, spec.id)
            obj.bounce = initial_bounce_state(spec.trajectory, spec.initial_pose, stream)
        if spec.limited_to_view and world.frustum is None:
            message = f"object {spec.id!r}: limited_to_view has no effect (frustum disabled)"
            world.warnings.append(message)
            log.warning(message)
        world.objects.append(obj)

    return world


def render_snapshot(snap: Snapshot, camera: Camera, requested: int = ALL_VIEWS) -> FrameViews:
    """Rasterize a snapshot and fill in analytic flow (when requested)."""
    cam = replace(camera, pose=snap.camera_pose)
    objects = [RenderObject(instance_id=i.instance_id,
                            category_id=i.template.category_id,
                            mesh_vertices=i.template.mesh.vertices,
                            mesh_triangles=i.template.mesh.triangles,
                            base_color=i.template.base_color,
                            pose=i.pose)
               for i in snap.items]
    views = rasterize(objects, cam, snap.background_color, requested)
    if requested & VIEW_FLOW:
        motions = [InstanceMotion(i.instance_id, i.pose, i.prev_pose) for i in snap.items]
        views.flow = compute_flow(views, motions, cam)
    return views
