import json
import socket
from pathlib import Path

import pytest

from scenestream import protocol as wire

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

EXAMPLE1 = SCENARIOS / "example1_object_view_catmull.json"
EXAMPLE2 = SCENARIOS / "example2_room02_bounce.json"
EXAMPLE3 = SCENARIOS / "example3_room01_racket.json"


@pytest.fixture(scope="session")
def example_paths():
    return {1: EXAMPLE1, 2: EXAMPLE2, 3: EXAMPLE3}


@pytest.fixture(scope="session")
def example_scenarios():
    from scenestream import parse_scenario

    return {k: parse_scenario(p.read_text("utf-8")) for k, p in
            {1: EXAMPLE1, 2: EXAMPLE2, 3: EXAMPLE3}.items()}


def make_scenario_doc(**overrides) -> str:
    """A small valid single-object document, mutated by keyword."""
    doc = {
        "scene": "object_view",
        "seed": 7,
        "objects": [
            {
                "id": "c1",
                "template": "Cylinder",
                "position": [0.0, 0.0, 4.0],
                "rotation": [0.0, 0.0, 0.0],
            }
        ],
    }
    doc.update(overrides)
    return json.dumps(doc)


class WireClient:
    """Minimal blocking protocol client for server tests."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send_raw(self, data: bytes) -> None:
        self.sock.sendall(data)

    def recv_message(self):
        header = self._recv_exact(wire.HEADER.size)
        msg_type, length = wire.decode_header(header)
        payload = self._recv_exact(length)
        return msg_type, payload

    def call(self, opcode: int, payload: bytes = b""):
        self.sock.sendall(wire.encode_message(opcode, payload))
        return self.recv_message()

    def call_ok(self, opcode: int, payload: bytes = b""):
        msg_type, reply = self.call(opcode, payload)
        if msg_type == wire.OP_ERROR:
            echoed, code, message = wire.unpack_error(reply)
            raise AssertionError(f"server error {code} for opcode {echoed:#x}: {message}")
        assert msg_type == opcode
        return reply

    def close(self):
        self.sock.close()

    def _recv_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionError("server closed connection")
            buf += chunk
        return buf


@pytest.fixture
def server_factory():
    """Start throwaway servers on ephemeral ports; stop them afterwards."""
    from scenestream.server import Server

    servers = []

    def make(**kwargs) -> "Server":
        kwargs.setdefault("host", "127.0.0.1")
        kwargs.setdefault("port", 0)
        srv = Server(**kwargs)
        srv.start()
        servers.append(srv)
        return srv

    yield make
    for srv in servers:
        srv.stop()
