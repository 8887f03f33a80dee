"""scenestream: deterministic 3D dynamic-scene generation and streaming.

Scenarios describe objects, trajectories and timing on top of built-in
scenes; the simulator replays them bit-exactly, the renderer produces five
dense annotation views per frame (RGB, depth, semantic, instance, optical
flow), and the server streams them over a binary protocol.
"""

from .renderer import (ALL_VIEWS, VIEW_DEPTH, VIEW_FLOW, VIEW_INSTANCE, VIEW_RGB,
                       VIEW_SEMANTIC, Camera, FrameViews)
from .scene_model import (AllTogether, CatmullWaypoints, DictTimings, FrustumSpec,
                          LinearWaypoints, ObjectSpec, Pose, Scenario, ScenarioError,
                          TimingsSpec, TrajectoryKind, UniformRandomBounce,
                          WaitUntilComplete, Waypoint, parse_scenario,
                          serialize_scenario, validate_scenario)
from .scenes import builtin_scenes, lookup_scene
from .simulator import (SimulationError, Snapshot, WorldState, load_scenario,
                        render_snapshot)

__version__ = "0.1.0"

__all__ = [
    "ALL_VIEWS", "VIEW_DEPTH", "VIEW_FLOW", "VIEW_INSTANCE", "VIEW_RGB", "VIEW_SEMANTIC",
    "AllTogether", "Camera", "CatmullWaypoints", "DictTimings", "FrameViews",
    "FrustumSpec", "LinearWaypoints", "ObjectSpec", "Pose", "Scenario", "ScenarioError",
    "SimulationError", "Snapshot", "TimingsSpec", "TrajectoryKind", "UniformRandomBounce",
    "WaitUntilComplete", "Waypoint", "WorldState", "builtin_scenes", "load_scenario",
    "lookup_scene", "parse_scenario", "render_snapshot", "serialize_scenario",
    "validate_scenario", "__version__",
]
