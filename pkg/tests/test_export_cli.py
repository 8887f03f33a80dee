"""Dataset writer, diff tool and the command-line entry points."""

import json

import numpy as np
import pytest
from PIL import Image

from scenestream.cli import main
from scenestream.export import (decode_instance_png, diff_runs, encode_instance_png,
                                generate, parse_views_arg, read_pfm, write_pfm)
from scenestream.flow import read_flo
from scenestream.renderer import ALL_VIEWS, VIEW_RGB, VIEW_SEMANTIC

from conftest import EXAMPLE1, EXAMPLE2


class TestFormats:
    def test_pfm_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        depth = (rng.random((24, 32)) * 50).astype(np.float32)
        path = tmp_path / "d.pfm"
        write_pfm(path, depth)
        assert (read_pfm(path) == depth).all()

    def test_instance_png_encoding_round_trip(self):
        ids = np.array([[0, 1], [255, 70000]], dtype=np.uint32)
        assert (decode_instance_png(encode_instance_png(ids)) == ids).all()

    def test_views_arg_parsing(self):
        assert parse_views_arg("rgb") == VIEW_RGB
        assert parse_views_arg("rgb,sem") == VIEW_RGB | VIEW_SEMANTIC
        assert parse_views_arg("rgb,flow,sem,inst,depth") == ALL_VIEWS
        with pytest.raises(ValueError):
            parse_views_arg("rgb,holograms")


class TestGenerate:
    def test_zero_frames_manifest_only(self, tmp_path):
        result = generate(EXAMPLE1, 0, tmp_path / "run")
        files = sorted(p.name for p in (tmp_path / "run").iterdir())
        assert files == ["manifest.json"]
        assert result.manifest["frames"] == 0

    def test_dataset_is_complete_no_extras(self, tmp_path):
        n = 4
        generate(EXAMPLE1, n, tmp_path / "run")
        names = {p.name for p in (tmp_path / "run").iterdir()}
        expected = {"manifest.json"}
        for k in range(n):
            expected |= {f"{k:06d}_rgb.png", f"{k:06d}_depth.pfm", f"{k:06d}_sem.png",
                         f"{k:06d}_sem_color.png", f"{k:06d}_inst.png",
                         f"{k:06d}_flow.flo", f"{k:06d}_flow_color.png"}
        assert names == expected

    def test_view_subset(self, tmp_path):
        generate(EXAMPLE1, 2, tmp_path / "run", views_mask=VIEW_RGB)
        names = {p.name for p in (tmp_path / "run").iterdir()}
        assert names == {"manifest.json", "000000_rgb.png", "000001_rgb.png"}

    def test_outputs_well_formed(self, tmp_path):
        generate(EXAMPLE1, 2, tmp_path / "run")
        rgb = np.asarray(Image.open(tmp_path / "run" / "000001_rgb.png"))
        assert rgb.shape == (192, 256, 3)
        sem = np.asarray(Image.open(tmp_path / "run" / "000001_sem.png"))
        assert sem.dtype in (np.uint16, np.int32)
        depth = read_pfm(tmp_path / "run" / "000001_depth.pfm")
        assert depth.shape == (192, 256)
        flow = read_flo(tmp_path / "run" / "000001_flow.flo")
        assert flow.shape == (192, 256, 2)

    def test_rerun_same_seed_byte_identical(self, tmp_path):
        generate(EXAMPLE2, 6, tmp_path / "a")
        generate(EXAMPLE2, 6, tmp_path / "b")
        report = diff_runs(tmp_path / "a", tmp_path / "b")
        assert report.identical, report.lines()

    def test_seed_override_recorded(self, tmp_path):
        result = generate(EXAMPLE2, 1, tmp_path / "a", seed=99)
        assert result.manifest["seed"] == 99


class TestDiffRuns:
    def test_detects_content_difference(self, tmp_path):
        generate(EXAMPLE1, 2, tmp_path / "a")
        generate(EXAMPLE1, 2, tmp_path / "b")
        target = tmp_path / "b" / "000001_rgb.png"
        img = np.asarray(Image.open(target)).copy()
        img[0, 0] ^= 0xFF
        Image.fromarray(img).save(target)
        report = diff_runs(tmp_path / "a", tmp_path / "b")
        assert report.differing_files == ["000001_rgb.png"]

    def test_manifest_mismatch_reported_first(self, tmp_path):
        generate(EXAMPLE2, 1, tmp_path / "a", fps=25)
        generate(EXAMPLE2, 1, tmp_path / "b", fps=50)
        report = diff_runs(tmp_path / "a", tmp_path / "b")
        assert any("fps" in line for line in report.manifest_mismatches)
        assert report.differing_files == []  # short-circuits before file hashing

    def test_missing_manifest_raises(self, tmp_path):
        generate(EXAMPLE1, 0, tmp_path / "a")
        (tmp_path / "empty").mkdir()
        with pytest.raises(FileNotFoundError):
            diff_runs(tmp_path / "a", tmp_path / "empty")

    def test_missing_files_reported(self, tmp_path):
        generate(EXAMPLE1, 2, tmp_path / "a")
        generate(EXAMPLE1, 2, tmp_path / "b")
        (tmp_path / "b" / "000001_rgb.png").unlink()
        report = diff_runs(tmp_path / "a", tmp_path / "b")
        assert report.missing_files == ["000001_rgb.png"]


class TestCli:
    def test_generate_and_diff_commands(self, tmp_path, capsys):
        rc = main(["generate", "--scenario", str(EXAMPLE1), "--frames", "2",
                   "--out", str(tmp_path / "a"), "--views", "rgb,sem"])
        assert rc == 0
        rc = main(["generate", "--scenario", str(EXAMPLE1), "--frames", "2",
                   "--out", str(tmp_path / "b"), "--views", "rgb,sem"])
        assert rc == 0
        rc = main(["diff", str(tmp_path / "a"), str(tmp_path / "b")])
        assert rc == 0
        assert "identical" in capsys.readouterr().out

    def test_generate_rejects_bad_scenario(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"scene": "moon"}')
        rc = main(["generate", "--scenario", str(bad), "--frames", "1",
                   "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "invalid scenario" in capsys.readouterr().err

    def test_diff_missing_dir(self, tmp_path, capsys):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        rc = main(["diff", str(tmp_path / "a"), str(tmp_path / "b")])
        assert rc == 2
