"""Headless dataset generation and run comparison.

``generate`` simulates a scenario for N frames and writes, per frame:
RGB and colorized views as PNG, depth as PFM, semantic ids as 16-bit
gray PNG, instance ids as RGB-packed PNG (little-endian, low byte in R),
and raw flow as Middlebury .flo. A manifest records everything that
determines the output bytes, so two runs with equal manifests must produce
equal datasets (``diff_runs`` enforces this).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .config import DEFAULT_FPS, FLOW_RHO_MAX
from .flow import flow_to_hsv, write_flo
from .renderer import (ALL_VIEWS, VIEW_DEPTH, VIEW_FLOW, VIEW_INSTANCE, VIEW_RGB,
                       VIEW_SEMANTIC, Camera, color_map_semantic)
from .scene_model import parse_scenario
from .simulator import load_scenario, render_snapshot

VIEW_NAMES = {"rgb": VIEW_RGB, "flow": VIEW_FLOW, "sem": VIEW_SEMANTIC,
              "inst": VIEW_INSTANCE, "depth": VIEW_DEPTH}

MANIFEST_NAME = "manifest.json"
FORMAT_VERSIONS = {"dataset": 1, "png": 1, "pfm": 1, "flo": 1}


def parse_views_arg(text: str) -> int:
    mask = 0
    for name in text.split(","):
        name = name.strip().lower()
        if name not in VIEW_NAMES:
            raise ValueError(f"unknown view {name!r}; choose from {sorted(VIEW_NAMES)}")
        mask |= VIEW_NAMES[name]
    return mask


def write_pfm(path, data: np.ndarray) -> None:
    """Grayscale PFM, little-endian (negative scale), bottom-to-top rows."""
    height, width = data.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(data[::-1], dtype="<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM")
        width, height = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(width * height * 4), dtype=dtype)
    return data.reshape(height, width)[::-1].copy()


def encode_instance_png(instance: np.ndarray) -> np.ndarray:
    """Pack u32 ids into RGB bytes, id = R + (G << 8) + (B << 16)."""
    rgb = np.zeros(instance.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = instance & 0xFF
    rgb[..., 1] = (instance >> 8) & 0xFF
    rgb[..., 2] = (instance >> 16) & 0xFF
    return rgb


def decode_instance_png(rgb: np.ndarray) -> np.ndarray:
    r = rgb[..., 0].astype(np.uint32)
    g = rgb[..., 1].astype(np.uint32)
    b = rgb[..., 2].astype(np.uint32)
    return r | (g << 8) | (b << 16)


def _save_png(path, array: np.ndarray) -> None:
    Image.fromarray(array).save(path)  # uint16 maps to 16-bit gray ("I;16")


@dataclass
class GenerateResult:
    out_dir: Path
    frames: int
    manifest: dict
    files: list[str] = field(default_factory=list)


def generate(scenario_path, frames: int, out_dir, views_mask: int = ALL_VIEWS,
             fps: int = DEFAULT_FPS, seed: int | None = None,
             camera: Camera | None = None) -> GenerateResult:
    """Simulate and write a dataset; deterministic given (scenario, seed, fps)."""
    scenario_bytes = Path(scenario_path).read_bytes()
    scenario = parse_scenario(scenario_bytes.decode("utf-8"))
    if seed is not None:
        scenario = replace(scenario, seed=seed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    world = load_scenario(scenario, fps=fps, camera=camera)
    cam = world.camera
    files: list[str] = []

    for k in range(frames):
        if k > 0:
            world.step()
        snap = world.snapshot()
        fv = render_snapshot(snap, cam, views_mask)
        prefix = out / f"{snap.frame:06d}"
        if views_mask & VIEW_RGB:
            _save_png(f"{prefix}_rgb.png", fv.rgb)
            files.append(f"{prefix.name}_rgb.png")
        if views_mask & VIEW_DEPTH:
            write_pfm(f"{prefix}_depth.pfm", fv.depth)
            files.append(f"{prefix.name}_depth.pfm")
        if views_mask & VIEW_SEMANTIC:
            _save_png(f"{prefix}_sem.png", fv.semantic)
            _save_png(f"{prefix}_sem_color.png", color_map_semantic(fv.semantic))
            files.append(f"{prefix.name}_sem.png")
            files.append(f"{prefix.name}_sem_color.png")
        if views_mask & VIEW_INSTANCE:
            _save_png(f"{prefix}_inst.png", encode_instance_png(fv.instance))
            files.append(f"{prefix.name}_inst.png")
        if views_mask & VIEW_FLOW:
            write_flo(f"{prefix}_flow.flo", fv.flow)
            _save_png(f"{prefix}_flow_color.png", flow_to_hsv(fv.flow, FLOW_RHO_MAX))
            files.append(f"{prefix.name}_flow.flo")
            files.append(f"{prefix.name}_flow_color.png")

    manifest = {
        "format_versions": FORMAT_VERSIONS,
        "scenario_sha256": hashlib.sha256(scenario_bytes).hexdigest(),
        "seed": scenario.seed,
        "fps": fps,
        "frames": frames,
        "views": sorted(name for name, tag in VIEW_NAMES.items() if views_mask & tag),
        "camera": {"width": cam.width, "height": cam.height, "vfov_deg": cam.vfov_deg,
                   "near": cam.near, "far": cam.far},
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True), "utf-8")
    return GenerateResult(out_dir=out, frames=frames, manifest=manifest, files=files)


@dataclass
class DiffReport:
    manifest_mismatches: list[str] = field(default_factory=list)
    differing_files: list[str] = field(default_factory=list)
    missing_files: list[str] = field(default_factory=list)

    @property
    def identical(self) -> bool:
        return not (self.manifest_mismatches or self.differing_files or self.missing_files)

    def lines(self) -> list[str]:
        out = [f"manifest: {m}" for m in self.manifest_mismatches]
        out += [f"differs: {f}" for f in self.differing_files]
        out += [f"missing: {f}" for f in self.missing_files]
        return out


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def diff_runs(dir_a, dir_b) -> DiffReport:
    """Content comparison of two generated datasets; manifest first."""
    a, b = Path(dir_a), Path(dir_b)
    report = DiffReport()
    try:
        man_a = json.loads((a / MANIFEST_NAME).read_text("utf-8"))
        man_b = json.loads((b / MANIFEST_NAME).read_text("utf-8"))
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"missing manifest: {exc.filename}") from exc

    for key in sorted(set(man_a) | set(man_b)):
        if man_a.get(key) != man_b.get(key):
            report.manifest_mismatches.append(
                f"{key}: {man_a.get(key)!r} != {man_b.get(key)!r}")
    if report.manifest_mismatches:
        return report  # parameters differ; file diff would only echo that

    names_a = {p.name for p in a.iterdir() if p.name != MANIFEST_NAME}
    names_b = {p.name for p in b.iterdir() if p.name != MANIFEST_NAME}
    report.missing_files = sorted(names_a ^ names_b)
    for name in sorted(names_a & names_b):
        if _file_sha256(a / name) != _file_sha256(b / name):
            report.differing_files.append(name)
    return report
