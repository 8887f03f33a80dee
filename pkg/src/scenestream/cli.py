"""Command-line interface: dataset generation, run diffing, and the server."""

from __future__ import annotations

import argparse
import sys

from .config import DEFAULT_FPS, DEFAULT_HOST, DEFAULT_PORT
from .export import diff_runs, generate, parse_views_arg
from .renderer import ALL_VIEWS
from .scene_model import ScenarioError
from .simulator import SimulationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenestream",
                                     description="Deterministic dynamic-scene generator")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="simulate a scenario and write a dataset")
    gen.add_argument("--scenario", required=True, help="scenario JSON path")
    gen.add_argument("--frames", type=int, required=True, help="number of frames to render")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--views", default="rgb,flow,sem,inst,depth",
                     help="comma list of rgb,flow,sem,inst,depth")
    gen.add_argument("--fps", type=int, default=DEFAULT_FPS)
    gen.add_argument("--seed", type=int, default=None, help="override the scenario master seed")

    diff = sub.add_parser("diff", help="compare two generated datasets")
    diff.add_argument("dir_a")
    diff.add_argument("dir_b")

    srv = sub.add_parser("serve", help="run the streaming server")
    srv.add_argument("--host", default=DEFAULT_HOST)
    srv.add_argument("--port", type=int, default=DEFAULT_PORT)
    srv.add_argument("--fps", type=int, default=DEFAULT_FPS)
    srv.add_argument("--realtime", action="store_true",
                     help="advance on a wall-clock timer instead of lockstep")
    srv.add_argument("--scenario", default=None, help="scenario JSON to preload")
    srv.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "generate":
        try:
            views = parse_views_arg(args.views) if args.views else ALL_VIEWS
            result = generate(args.scenario, args.frames, args.out,
                              views_mask=views, fps=args.fps, seed=args.seed)
        except (ScenarioError, SimulationError) as exc:
            print(f"invalid scenario: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {result.frames} frames ({len(result.files)} files) to {result.out_dir}")
        return 0

    if args.command == "diff":
        try:
            report = diff_runs(args.dir_a, args.dir_b)
        except FileNotFoundError as exc:
            print(str(exc), file=sys.stderr)
            return 2
        for line in report.lines():
            print(line)
        if report.identical:
            print("identical")
            return 0
        return 1

    if args.command == "serve":
        from .server import serve

        serve(host=args.host, port=args.port, fps=args.fps, realtime=args.realtime,
              scenario_path=args.scenario, seed=args.seed)
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
