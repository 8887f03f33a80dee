"""TCP streaming server exposing the simulator.

One acceptor thread, one handler thread per connection. All world mutations
are serialized through a single lock (the command-queue contract); frame
rendering runs outside it on immutable snapshots.

By default the server is in lockstep mode: the simulation advances exactly
one frame per GET_FRAME from the stepping session (the oldest registered
agent), which makes full sessions byte-reproducible. ``realtime=True``
switches to a wall-clock stepper thread instead.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
import time
from dataclasses import dataclass, replace

from . import protocol as wire
from .config import DEFAULT_FPS, DEFAULT_HOST, DEFAULT_PORT
from .renderer import ALL_VIEWS, Camera
from .scene_model import (Pose, Scenario, ScenarioError, parse_scenario,
                          parse_trajectory_doc, validate_trajectory)
from .scenes import SCENE_NAMES
from .simulator import SimulationError, load_scenario, render_snapshot

log = logging.getLogger(__name__)


@dataclass
class AgentSession:
    agent_id: int
    camera: Camera
    subscribed_views: int
    received_first_frame: bool = False


class Server:
    """Lifecycle wrapper usable from tests (start/stop) and the CLI (serve)."""

    def __init__(self, host: str = DEFAULT_HOST, port: int = DEFAULT_PORT,
                 fps: int = DEFAULT_FPS, realtime: bool = False,
                 scenario_path: str | None = None, seed: int = 0,
                 encoding: int = wire.ENCODING_RAW):
        self.host = host
        self.port = port
        self.fps = fps
        self.realtime = realtime
        self.seed = seed
        self.encoding = encoding
        self._lock = threading.Lock()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._sessions: dict[int, AgentSession] = {}
        self._next_agent_id = 1
        self._explicit_agent_pose: Pose | None = None

        if scenario_path is not None:
            with open(scenario_path, "r", encoding="utf-8") as fh:
                scenario = parse_scenario(fh.read())
            scenario = replace(scenario, seed=seed if seed else scenario.seed)
        else:
            scenario = Scenario(scene_name="object_view", seed=seed)
        self._world = load_scenario(scenario, fps=fps)

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind((self.host, self.port))
        except OSError as exc:
            raise SystemExit(f"cannot bind {self.host}:{self.port}: {exc}")
        if self.port == 0:
            self.port = self._listener.getsockname()[1]
        self._listener.listen()
        acceptor = threading.Thread(target=self._accept_loop, daemon=True, name="acceptor")
        acceptor.start()
        self._threads.append(acceptor)
        if self.realtime:
            stepper = threading.Thread(target=self._realtime_loop, daemon=True, name="stepper")
            stepper.start()
            self._threads.append(stepper)
        log.info("listening on %s:%d (fps=%d, %s)", self.host, self.port, self.fps,
                 "realtime" if self.realtime else "lockstep")

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- internals ----------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._listener.accept()
            except OSError:
                return
            handler = threading.Thread(target=self._handle_connection, args=(conn, addr),
                                       daemon=True)
            handler.start()
            self._threads.append(handler)

    def _realtime_loop(self) -> None:
        period = 1.0 / self.fps
        while not self._stop.is_set():
            start = time.monotonic()
            with self._lock:
                self._world.step()
            delay = period - (time.monotonic() - start)
            if delay > 0:
                time.sleep(delay)

    def _handle_connection(self, conn: socket.socket, addr) -> None:
        session: AgentSession | None = None
        try:
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            while not self._stop.is_set():
                header = _recv_exact(conn, wire.HEADER.size)
                if header is None:
                    return
                try:
                    msg_type, length = wire.decode_header(header)
                except wire.ProtocolError as exc:
                    # bad framing: report, drop only these 8 bytes, keep going
                    conn.sendall(wire.encode_message(
                        wire.OP_ERROR, wire.pack_error(0, wire.ERR_PROTOCOL, str(exc))))
                    continue
                payload = _recv_exact(conn, length) if length else b""
                if payload is None:
                    return
                reply, session, closing = self._dispatch(session, msg_type, payload)
                conn.sendall(reply)
                if closing:
                    return
        except (ConnectionError, OSError):
            pass
        finally:
            if session is not None:
                self._sessions.pop(session.agent_id, None)
            try:
                conn.close()
            except OSError:
                pass

    def _dispatch(self, session: AgentSession | None, msg_type: int,
                  payload: bytes) -> tuple[bytes, AgentSession | None, bool]:
        def error(code: int, message: str) -> bytes:
            return wire.encode_message(wire.OP_ERROR,
                                       wire.pack_error(msg_type, code, message))

        if msg_type not in wire.REQUEST_OPCODES:
            return error(wire.ERR_PROTOCOL, f"unknown opcode 0x{msg_type:02X}"), session, False

        if msg_type == wire.OP_REGISTER:
            try:
                width, height, mask = wire.unpack_register(payload)
                camera = Camera(pose=self._world.camera.pose, width=width, height=height)
            except (wire.ProtocolError, ValueError) as exc:
                return error(wire.ERR_INVALID_REQUEST, str(exc)), session, False
            with self._lock:
                agent_id = self._next_agent_id
                self._next_agent_id += 1
                session = AgentSession(agent_id=agent_id, camera=camera,
                                       subscribed_views=mask or ALL_VIEWS)
                self._sessions[agent_id] = session
            reply = wire.encode_message(
                wire.OP_REGISTER, wire.pack_register_reply(agent_id, list(SCENE_NAMES)))
            return reply, session, False

        if session is None:
            return error(wire.ERR_NOT_REGISTERED, "register first"), session, False

        try:
            if msg_type == wire.OP_LIST_SCENES:
                return (wire.encode_message(wire.OP_LIST_SCENES,
                                            wire.pack_scene_list(list(SCENE_NAMES))),
                        session, False)

            if msg_type == wire.OP_CHANGE_SCENE:
                name, _ = wire.unpack_string(payload, 0)
                with self._lock:
                    self._explicit_agent_pose = None
                    self._world = load_scenario(
                        Scenario(scene_name=name, seed=self.seed), fps=self.fps)
                    pose = self._world.camera.pose
                return (wire.encode_message(wire.OP_CHANGE_SCENE,
                                            wire.pack_pose(pose.position, pose.rotation)),
                        session, False)

            if msg_type == wire.OP_LOAD_SCENARIO:
                scenario = parse_scenario(payload.decode("utf-8"))
                with self._lock:
                    self._world = load_scenario(
                        scenario, fps=self.fps,
                        agent_pose_override=self._explicit_agent_pose)
                    pose = self._world.camera.pose
                    for other in self._sessions.values():
                        other.camera = replace(other.camera, pose=pose)
                return (wire.encode_message(wire.OP_LOAD_SCENARIO,
                                            wire.pack_pose(pose.position, pose.rotation)),
                        session, False)

            if msg_type == wire.OP_SPAWN:
                template, position, rotation, traj_doc, limited = wire.unpack_spawn(payload)
                trajectory = None
                if traj_doc is not None:
                    trajectory = parse_trajectory_doc(traj_doc)
                    problems = validate_trajectory(trajectory)
                    if problems:
                        raise ScenarioError("; ".join(problems))
                with self._lock:
                    runtime_id = self._world.spawn_object(
                        template, Pose.of(position, rotation), trajectory, limited)
                return (wire.encode_message(wire.OP_SPAWN, wire.pack_object_id(runtime_id)),
                        session, False)

            if msg_type == wire.OP_DESPAWN:
                runtime_id = wire.unpack_object_id(payload)
                with self._lock:
                    self._world.despawn_object(runtime_id)
                return wire.encode_message(wire.OP_DESPAWN), session, False

            if msg_type == wire.OP_MOVE:
                runtime_id, position, rotation = wire.unpack_move(payload)
                with self._lock:
                    self._world.move_object(runtime_id, Pose.of(position, rotation))
                return wire.encode_message(wire.OP_MOVE), session, False

            if msg_type == wire.OP_SET_AGENT_POSE:
                position, rotation, _ = wire.unpack_pose(payload, 0)
                pose = Pose.of(position, rotation)
                with self._lock:
                    self._explicit_agent_pose = pose
                    self._world.set_agent_pose(pose)
                    session.camera = replace(session.camera, pose=pose)
                return wire.encode_message(wire.OP_SET_AGENT_POSE), session, False

            if msg_type == wire.OP_SPAWN_FRUSTUM:
                (far,) = struct.unpack("<f", payload)
                with self._lock:
                    self._world.spawn_collidable_view_frustum(float(far))
                return wire.encode_message(wire.OP_SPAWN_FRUSTUM), session, False

            if msg_type == wire.OP_GET_FRAME:
                with self._lock:
                    if not self.realtime and session.agent_id == self._stepping_agent_id():
                        if session.received_first_frame:
                            self._world.step()
                        session.received_first_frame = True
                    snap = self._world.snapshot()
                camera = replace(session.camera, pose=snap.camera_pose)
                views = render_snapshot(snap, camera, session.subscribed_views)
                payload_out = wire.encode_frame(views, snap.frame, session.subscribed_views,
                                                self.encoding)
                return wire.encode_message(wire.OP_GET_FRAME, payload_out), session, False

            if msg_type == wire.OP_DELETE:
                with self._lock:
                    self._sessions.pop(session.agent_id, None)
                return wire.encode_message(wire.OP_DELETE), None, True

        except (ScenarioError, SimulationError, KeyError) as exc:
            message = str(exc)
            code = (wire.ERR_UNKNOWN_OBJECT if "unknown object" in message
                    else wire.ERR_INVALID_REQUEST)
            return error(code, message), session, False
        except wire.ProtocolError as exc:
            return error(exc.code, str(exc)), session, False
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("internal error handling opcode 0x%02X", msg_type)
            return error(wire.ERR_INTERNAL, str(exc)), session, False

        return error(wire.ERR_PROTOCOL, "unhandled opcode"), session, False

    def _stepping_agent_id(self) -> int | None:
        return min(self._sessions) if self._sessions else None


def _recv_exact(conn: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def serve(host: str = DEFAULT_HOST, port: int = DEFAULT_PORT, fps: int = DEFAULT_FPS,
          realtime: bool = False, scenario_path: str | None = None, seed: int = 0) -> None:
    """Run the server until interrupted (CLI entry)."""
    Server(host=host, port=port, fps=fps, realtime=realtime,
           scenario_path=scenario_path, seed=seed).serve_forever()
