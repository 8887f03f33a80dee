"""Codec round-trips for every payload, including fuzzed inputs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenestream import protocol as wire
from scenestream.renderer import ALL_VIEWS, FrameViews


def make_views(width=32, height=24, seed=0) -> FrameViews:
    rng = np.random.default_rng(seed)
    return FrameViews(
        rgb=rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8),
        depth=rng.random((height, width)).astype(np.float32) * 10,
        semantic=rng.integers(0, 30, size=(height, width), dtype=np.uint16),
        instance=rng.integers(0, 1000, size=(height, width), dtype=np.uint32),
        flow=rng.normal(size=(height, width, 2)).astype(np.float32),
    )


class TestFraming:
    def test_header_round_trip(self):
        msg = wire.encode_message(wire.OP_GET_FRAME, b"abc")
        assert len(msg) == 8 + 3
        t, length = wire.decode_header(msg[:8])
        assert t == wire.OP_GET_FRAME
        assert length == 3

    def test_bad_magic_rejected(self):
        with pytest.raises(wire.ProtocolError):
            wire.decode_header(b"XY\x01\x0a\x00\x00\x00\x00")

    def test_bad_version_rejected(self):
        with pytest.raises(wire.ProtocolError):
            wire.decode_header(b"SL\x02\x0a\x00\x00\x00\x00")

    @given(st.integers(0, 255), st.binary(max_size=200))
    @settings(max_examples=100, deadline=None)
    def test_any_message_frames_cleanly(self, opcode, payload):
        msg = wire.encode_message(opcode, payload)
        t, length = wire.decode_header(msg[:8])
        assert t == opcode
        assert msg[8:8 + length] == payload


class TestPayloadCodecs:
    @given(st.integers(16, 4096), st.integers(16, 4096), st.integers(0, 31))
    @settings(max_examples=100, deadline=None)
    def test_register_round_trip(self, w, h, mask):
        assert wire.unpack_register(wire.pack_register(w, h, mask)) == (w, h, mask)

    @given(st.lists(st.text(max_size=30), max_size=6))
    @settings(max_examples=50, deadline=None)
    def test_scene_list_round_trip(self, names):
        assert wire.unpack_scene_list(wire.pack_scene_list(names)) == names

    def test_register_reply_round_trip(self):
        payload = wire.pack_register_reply(7, ["object_view", "room01"])
        assert wire.unpack_register_reply(payload) == (7, ["object_view", "room01"])

    @given(st.text(min_size=1, max_size=40),
           st.lists(st.floats(-50, 50, width=32), min_size=6, max_size=6),
           st.booleans())
    @settings(max_examples=100, deadline=None)
    def test_spawn_round_trip(self, template, pose, limited):
        traj = {"kind": "uniform_random_bounce", "speed": 0.8,
                "angular_speed": 45.0, "start_direction": [0, 5, 2], "seed": 32}
        payload = wire.pack_spawn(template, pose[:3], pose[3:], traj, limited)
        t2, pos2, rot2, traj2, lim2 = wire.unpack_spawn(payload)
        assert t2 == template
        assert list(pos2) == pytest.approx(pose[:3])
        assert list(rot2) == pytest.approx(pose[3:])
        assert traj2 == traj
        assert lim2 == limited

    def test_spawn_without_trajectory(self):
        payload = wire.pack_spawn("Cube", (0, 0, 5), (0, 0, 0), None, False)
        _, _, _, traj, _ = wire.unpack_spawn(payload)
        assert traj is None

    def test_move_round_trip(self):
        payload = wire.pack_move(42, (1, 2, 3), (4, 5, 6))
        rid, pos, rot = wire.unpack_move(payload)
        assert rid == 42
        assert pos == (1.0, 2.0, 3.0)
        assert rot == (4.0, 5.0, 6.0)

    def test_error_round_trip(self):
        payload = wire.pack_error(wire.OP_SPAWN, wire.ERR_UNKNOWN_OBJECT, "nope  x")
        assert wire.unpack_error(payload) == (wire.OP_SPAWN, wire.ERR_UNKNOWN_OBJECT, "nope  x")

    def test_object_id_requires_exact_size(self):
        with pytest.raises(wire.ProtocolError):
            wire.unpack_object_id(b"\x01\x02")


class TestFrameCodec:
    def test_raw_round_trip_all_views(self):
        views = make_views()
        payload = wire.encode_frame(views, 1234, ALL_VIEWS, wire.ENCODING_RAW)
        frame, decoded = wire.decode_frame(payload)
        assert frame == 1234
        assert set(decoded) == {1, 2, 4, 8, 16}
        assert (decoded[wire.VIEW_RGB] == views.rgb).all()
        assert (decoded[wire.VIEW_FLOW] == views.flow).all()
        assert (decoded[wire.VIEW_SEMANTIC] == views.semantic).all()
        assert (decoded[wire.VIEW_INSTANCE] == views.instance).all()
        assert (decoded[wire.VIEW_DEPTH] == views.depth).all()

    def test_deflate_round_trip(self):
        views = make_views(seed=5)
        payload = wire.encode_frame(views, 7, ALL_VIEWS, wire.ENCODING_DEFLATE)
        frame, decoded = wire.decode_frame(payload)
        assert frame == 7
        assert (decoded[wire.VIEW_RGB] == views.rgb).all()
        assert (decoded[wire.VIEW_DEPTH] == views.depth).all()

    def test_mask_selects_single_view(self):
        views = make_views()
        payload = wire.encode_frame(views, 0, wire.VIEW_RGB)
        _, decoded = wire.decode_frame(payload)
        assert list(decoded) == [wire.VIEW_RGB]

    def test_raw_rgb_block_length(self):
        views = make_views(width=256, height=192)
        payload = wire.encode_frame(views, 0, wire.VIEW_RGB)
        _, decoded = wire.decode_frame(payload)
        assert decoded[wire.VIEW_RGB].nbytes == 256 * 192 * 3 == 147456

    def test_deflate_smaller_for_constant_rgb(self):
        views = make_views()
        views.rgb[:] = 77
        raw = wire.encode_frame(views, 0, wire.VIEW_RGB, wire.ENCODING_RAW)
        packed = wire.encode_frame(views, 0, wire.VIEW_RGB, wire.ENCODING_DEFLATE)
        assert len(packed) < len(raw)

    def test_determinism(self):
        views = make_views(seed=9)
        a = wire.encode_frame(views, 3, ALL_VIEWS, wire.ENCODING_DEFLATE)
        b = wire.encode_frame(views, 3, ALL_VIEWS, wire.ENCODING_DEFLATE)
        assert a == b

    @given(st.integers(0, 2**64 - 1), st.integers(1, 31))
    @settings(max_examples=50, deadline=None)
    def test_fuzzed_frame_indices_and_masks(self, frame_index, mask):
        views = make_views(width=17, height=16, seed=frame_index % 97)
        payload = wire.encode_frame(views, frame_index, mask)
        got_index, decoded = wire.decode_frame(payload)
        assert got_index == frame_index
        assert set(decoded) == {tag for tag in wire.VIEW_TAGS if mask & tag}
