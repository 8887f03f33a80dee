"""Frozen defaults shared across the simulator, renderer and server.

Lighting is intentionally not configurable: annotation correctness, not
photo-realism, is the product, and a fixed light keeps renders reproducible.
"""

DEFAULT_WIDTH = 256
DEFAULT_HEIGHT = 192
DEFAULT_VFOV_DEG = 60.0
DEFAULT_NEAR = 0.1
DEFAULT_FAR = 1000.0

DEFAULT_FPS = 25

# Single directional light, world space, plus ambient floor.
LIGHT_DIRECTION = (-1.0, -2.0, -1.0)
LIGHT_AMBIENT = 0.25

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8085

# Visualization clamp for flow magnitude (raw data is never clamped).
FLOW_RHO_MAX = 16.0
