"""Binary wire protocol: framing, payload codecs, frame encoding.

Every message is ``magic 'SL' | version u8 | type u8 | payload_len u32 LE``
followed by the payload. All integers are little-endian; floats are
IEEE-754 LE. The full layout is documented bit-exactly in PROTOCOL.md at
the repository root; this module is the single source of truth for the
constants.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .renderer import (VIEW_DEPTH, VIEW_FLOW, VIEW_INSTANCE, VIEW_RGB, VIEW_SEMANTIC,
                       FrameViews)

MAGIC = b"SL"  # 0x53 0x4C
VERSION = 1
HEADER = struct.Struct("<2sBBI")

# request opcodes
OP_REGISTER = 0x01
OP_CHANGE_SCENE = 0x02
OP_LIST_SCENES = 0x03
OP_SPAWN = 0x04
OP_DESPAWN = 0x05
OP_MOVE = 0x06
OP_SET_AGENT_POSE = 0x07
OP_LOAD_SCENARIO = 0x08
OP_SPAWN_FRUSTUM = 0x09
OP_GET_FRAME = 0x0A
OP_DELETE = 0x0F
OP_ERROR = 0x7F  # reply-only

REQUEST_OPCODES = (OP_REGISTER, OP_CHANGE_SCENE, OP_LIST_SCENES, OP_SPAWN, OP_DESPAWN,
                   OP_MOVE, OP_SET_AGENT_POSE, OP_LOAD_SCENARIO, OP_SPAWN_FRUSTUM,
                   OP_GET_FRAME, OP_DELETE)

# error codes
ERR_PROTOCOL = 1
ERR_INVALID_REQUEST = 2
ERR_UNKNOWN_OBJECT = 3
ERR_NOT_REGISTERED = 4
ERR_INTERNAL = 5

ENCODING_RAW = 0
ENCODING_DEFLATE = 1

VIEW_TAGS = (VIEW_RGB, VIEW_FLOW, VIEW_SEMANTIC, VIEW_INSTANCE, VIEW_DEPTH)


class ProtocolError(ValueError):
    def __init__(self, message: str, code: int = ERR_PROTOCOL):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Message:
    type: int
    payload: bytes


def encode_message(msg_type: int, payload: bytes = b"") -> bytes:
    return HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def decode_header(data: bytes) -> tuple[int, int]:
    """Returns (type, payload_length); raises ProtocolError on bad framing."""
    magic, version, msg_type, length = HEADER.unpack(data)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    return msg_type, length


# --- string and pose helpers ---

def pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def unpack_string(buf: bytes, offset: int) -> tuple[str, int]:
    (length,) = struct.unpack_from("<H", buf, offset)
    start = offset + 2
    return buf[start:start + length].decode("utf-8"), start + length


def pack_pose(position, rotation) -> bytes:
    return struct.pack("<6f", *position, *rotation)


def unpack_pose(buf: bytes, offset: int):
    values = struct.unpack_from("<6f", buf, offset)
    return (values[0], values[1], values[2]), (values[3], values[4], values[5]), offset + 24


# --- request payloads ---

def pack_register(width: int, height: int, view_mask: int) -> bytes:
    return struct.pack("<HHB", width, height, view_mask)


def unpack_register(payload: bytes) -> tuple[int, int, int]:
    if len(payload) != 5:
        raise ProtocolError("REGISTER payload must be 5 bytes")
    return struct.unpack("<HHB", payload)


def pack_spawn(template: str, position, rotation, trajectory: dict | None,
               limited_to_view: bool) -> bytes:
    traj_blob = b"" if trajectory is None else json.dumps(trajectory).encode("utf-8")
    return (pack_string(template) + pack_pose(position, rotation)
            + struct.pack("<I", len(traj_blob)) + traj_blob
            + struct.pack("<B", 1 if limited_to_view else 0))


def unpack_spawn(payload: bytes):
    template, offset = unpack_string(payload, 0)
    position, rotation, offset = unpack_pose(payload, offset)
    (traj_len,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    blob = payload[offset:offset + traj_len]
    offset += traj_len
    trajectory = json.loads(blob.decode("utf-8")) if traj_len else None
    (flags,) = struct.unpack_from("<B", payload, offset)
    return template, position, rotation, trajectory, bool(flags & 1)


def pack_object_id(runtime_id: int) -> bytes:
    return struct.pack("<I", runtime_id)


def unpack_object_id(payload: bytes) -> int:
    if len(payload) != 4:
        raise ProtocolError("object id payload must be 4 bytes")
    return struct.unpack("<I", payload)[0]


def pack_move(runtime_id: int, position, rotation) -> bytes:
    return struct.pack("<I", runtime_id) + pack_pose(position, rotation)


def unpack_move(payload: bytes):
    (runtime_id,) = struct.unpack_from("<I", payload, 0)
    position, rotation, _ = unpack_pose(payload, 4)
    return runtime_id, position, rotation


# --- reply payloads ---

def pack_register_reply(agent_id: int, scene_names: list[str]) -> bytes:
    out = struct.pack("<IB", agent_id, len(scene_names))
    for name in scene_names:
        out += pack_string(name)
    return out


def unpack_register_reply(payload: bytes) -> tuple[int, list[str]]:
    agent_id, count = struct.unpack_from("<IB", payload, 0)
    names = []
    offset = 5
    for _ in range(count):
        name, offset = unpack_string(payload, offset)
        names.append(name)
    return agent_id, names


def pack_scene_list(scene_names: list[str]) -> bytes:
    out = struct.pack("<B", len(scene_names))
    for name in scene_names:
        out += pack_string(name)
    return out


def unpack_scene_list(payload: bytes) -> list[str]:
    (count,) = struct.unpack_from("<B", payload, 0)
    names = []
    offset = 1
    for _ in range(count):
        name, offset = unpack_string(payload, offset)
        names.append(name)
    return names


def pack_error(opcode: int, code: int, message: str) -> bytes:
    return struct.pack("<BB", opcode, code) + message.encode("utf-8")


def unpack_error(payload: bytes) -> tuple[int, int, str]:
    opcode, code = struct.unpack_from("<BB", payload, 0)
    return opcode, code, payload[2:].decode("utf-8")


# --- frame encoding ---

_VIEW_ARRAYS = {
    VIEW_RGB: lambda v: v.rgb,
    VIEW_FLOW: lambda v: v.flow,
    VIEW_SEMANTIC: lambda v: v.semantic,
    VIEW_INSTANCE: lambda v: v.instance,
    VIEW_DEPTH: lambda v: v.depth,
}

_VIEW_DTYPES = {
    VIEW_RGB: np.dtype("u1"),
    VIEW_FLOW: np.dtype("<f4"),
    VIEW_SEMANTIC: np.dtype("<u2"),
    VIEW_INSTANCE: np.dtype("<u4"),
    VIEW_DEPTH: np.dtype("<f4"),
}

_VIEW_CHANNELS = {VIEW_RGB: 3, VIEW_FLOW: 2, VIEW_SEMANTIC: 1, VIEW_INSTANCE: 1, VIEW_DEPTH: 1}


def view_bytes(views: FrameViews, tag: int) -> bytes:
    arr = _VIEW_ARRAYS[tag](views)
    return np.ascontiguousarray(arr, dtype=_VIEW_DTYPES[tag]).tobytes()


def encode_frame(views: FrameViews, frame_index: int, mask: int,
                 encoding: int = ENCODING_RAW) -> bytes:
    """Frame reply payload: frame u64, view count u8, then per view
    tag u8 | width u16 | height u16 | encoding u8 | length u32 | data."""
    blocks = []
    for tag in VIEW_TAGS:
        if not (mask & tag):
            continue
        data = view_bytes(views, tag)
        if encoding == ENCODING_DEFLATE:
            data = zlib.compress(data, level=6)
        blocks.append(struct.pack("<BHHBI", tag, views.width, views.height, encoding, len(data))
                      + data)
    return struct.pack("<QB", frame_index, len(blocks)) + b"".join(blocks)


def decode_frame(payload: bytes) -> tuple[int, dict[int, np.ndarray]]:
    """Inverse of encode_frame; returns (frame_index, {tag: array})."""
    frame_index, count = struct.unpack_from("<QB", payload, 0)
    offset = 9
    out: dict[int, np.ndarray] = {}
    for _ in range(count):
        tag, width, height, encoding, length = struct.unpack_from("<BHHBI", payload, offset)
        offset += 10
        data = payload[offset:offset + length]
        offset += length
        if encoding == ENCODING_DEFLATE:
            data = zlib.decompress(data)
        elif encoding != ENCODING_RAW:
            raise ProtocolError(f"unknown view encoding {encoding}")
        channels = _VIEW_CHANNELS[tag]
        arr = np.frombuffer(data, dtype=_VIEW_DTYPES[tag])
        shape = (height, width) if channels == 1 else (height, width, channels)
        out[tag] = arr.reshape(shape).copy()
    return frame_index, out
