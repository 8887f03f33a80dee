"""Trajectory dynamics: waypoint loops, Catmull-Rom splines, random bounce.

Waypoint trajectories are closed loops evaluated as pure functions of
elapsed active time, so replays and fps changes cannot accumulate error.
The random bounce advances stepwise and owns an explicit PRNG state; every
draw order is fixed (rebound direction first, then torque axis, then torque
magnitude) to keep streams reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collision import ColliderSet
from .rng import Xoshiro256
from .scene_model import (CatmullWaypoints, LinearWaypoints, Pose, TrajectoryKind,
                          UniformRandomBounce)


def _pose_array(p: Pose) -> np.ndarray:
    return np.array(p.position + p.rotation, dtype=np.float64)


def _array_pose(a: np.ndarray) -> Pose:
    return Pose(tuple(float(v) for v in a[:3]), tuple(float(v) for v in a[3:]))


def linear_pose(params: LinearWaypoints, t: float) -> Pose:
    """Pose on the closed loop w1 -> ... -> wL -> w1 at constant positional
    speed; per-segment time share is proportional to segment arc length."""
    poses = [_pose_array(w.pose) for w in params.waypoints]
    n = len(poses)
    segs = [(poses[i], poses[(i + 1) % n]) for i in range(n)]
    lengths = [float(np.linalg.norm(b[:3] - a[:3])) for a, b in segs]
    total_len = sum(lengths)
    if total_len == 0.0:
        return params.waypoints[0].pose

    t = math.fmod(t, params.total_time)
    if t < 0:
        t += params.total_time
    target = t / params.total_time * total_len
    acc = 0.0
    last = None
    for (a, b), seg_len in zip(segs, lengths):
        if seg_len == 0.0:
            continue
        if target <= acc + seg_len:
            u = (target - acc) / seg_len
            return _array_pose(a + (b - a) * u)
        acc += seg_len
        last = (a, b)
    return _array_pose(last[1])  # numeric spill past the final segment


def catmull_pose(params: CatmullWaypoints, t: float) -> Pose:
    """Closed-loop uniform Catmull-Rom spline with cyclic control points and
    equal time per segment; all six pose components share the basis."""
    poses = [_pose_array(w.pose) for w in params.waypoints]
    n = len(poses)
    seg_time = params.total_time / n

    t = math.fmod(t, params.total_time)
    if t < 0:
        t += params.total_time
    i = min(int(t / seg_time), n - 1)
    u = t / seg_time - i

    p0 = poses[(i - 1) % n]
    p1 = poses[i]
    p2 = poses[(i + 1) % n]
    p3 = poses[(i + 2) % n]
    return _array_pose(catmull_point(p0, p1, p2, p3, u))


def catmull_point(p0, p1, p2, p3, u: float) -> np.ndarray:
    """Cubic Catmull-Rom basis:
    0.5 * (2*P1 + (-P0+P2)*u + (2*P0-5*P1+4*P2-P3)*u^2 + (-P0+3*P1-3*P2+P3)*u^3)."""
    u2 = u * u
    u3 = u2 * u
    return 0.5 * (2.0 * p1
                  + (p2 - p0) * u
                  + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2
                  + (3.0 * p1 - p0 - 3.0 * p2 + p3) * u3)


def trajectory_duration(kind: TrajectoryKind) -> float:
    """Loop length in seconds; math.inf for dynamics that never complete."""
    if isinstance(kind, (LinearWaypoints, CatmullWaypoints)):
        return kind.total_time
    return math.inf


@dataclass(frozen=True)
class BounceState:
    """Integration state of one random-bounce object. Everything needed for
    bit-exact replay is here, including the four PRNG state words."""

    pose: Pose
    velocity: tuple[float, float, float]
    angular_velocity: tuple[float, float, float]
    rng_state: tuple[int, int, int, int]


def initial_bounce_state(params: UniformRandomBounce, pose: Pose, stream_seed: int) -> BounceState:
    seed = params.seed if params.seed is not None else stream_seed
    direction = np.asarray(params.start_direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    velocity = direction * params.speed
    return BounceState(pose=pose,
                       velocity=tuple(float(v) for v in velocity),
                       angular_velocity=(0.0, 0.0, 0.0),
                       rng_state=Xoshiro256(seed).state)


# Contact resolution: deepest-first projection converges for the convex
# frustum interior; the cap only guards against degenerate collider input.
MAX_RESOLUTION_ITERATIONS = 64
RESOLUTION_MARGIN = 1e-9  # debounce: land strictly outside the contact


def _hemisphere_direction(rng: Xoshiro256, normal: np.ndarray) -> np.ndarray:
    """Uniform unit vector with dot(d, normal) > 0, by rejection sampling."""
    while True:
        d = np.asarray(rng.unit_vector(), dtype=np.float64)
        if float(d @ normal) > 0.0:
            return d


def bounce_step(state: BounceState, params: UniformRandomBounce, dt: float,
                colliders: ColliderSet) -> BounceState:
    """One fixed-dt step: inertial flight, then contact resolution.

    On contact the velocity direction is redrawn in the hemisphere around
    the contact normal at magnitude ``speed``, a random torque increment is
    applied (clamped to ``angular_speed``), and the object is pushed out of
    penetration. The deepest contact is resolved first, then re-tested once.
    The PRNG only advances when a contact occurs.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    pos = np.asarray(state.pose.position, dtype=np.float64)
    rot = np.asarray(state.pose.rotation, dtype=np.float64)
    vel = np.asarray(state.velocity, dtype=np.float64)
    ang = np.asarray(state.angular_velocity, dtype=np.float64)

    pos = pos + vel * dt
    rot = rot + ang * dt

    # Deepest-first resolution, iterated until clear: a single re-test is not
    # enough where several frustum planes converge, and residual penetration
    # would let confined objects creep out of the view volume.
    rng: Xoshiro256 | None = None
    for _ in range(MAX_RESOLUTION_ITERATIONS):
        contacts = colliders.contacts_at(pos)
        if not contacts:
            break
        contact = contacts[0]
        n = np.asarray(contact.normal, dtype=np.float64)
        if rng is None:
            rng = Xoshiro256.from_state(state.rng_state)
        vel = _hemisphere_direction(rng, n) * params.speed
        axis = np.asarray(rng.unit_vector(), dtype=np.float64)
        magnitude = rng.uniform() * params.angular_speed
        ang = ang + axis * magnitude
        ang_norm = float(np.linalg.norm(ang))
        if ang_norm > params.angular_speed and ang_norm > 0.0:
            ang = ang * (params.angular_speed / ang_norm)
        pos = pos + n * (contact.penetration_depth + RESOLUTION_MARGIN)

    return BounceState(
        pose=Pose(tuple(float(v) for v in pos), tuple(float(v) for v in rot)),
        velocity=tuple(float(v) for v in vel),
        angular_velocity=tuple(float(v) for v in ang),
        rng_state=state.rng_state if rng is None else rng.state,
    )
