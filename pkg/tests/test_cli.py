import json
import subprocess
import sys
from pathlib import Path

import pytest

BASE = [sys.executable, "-m", "lvreg"]


def run_cli(*args):
    return subprocess.run(BASE + list(args), capture_output=True, text=True)


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scene")
    proc = run_cli("synth", "--points", "200", "--corrs", "80", "--outlier-rate", "0.5",
                   "--noise", "0.003", "--seed", "11", "--out-dir", str(out))
    assert proc.returncode == 0, proc.stderr
    return out


class TestSynth:
    def test_writes_expected_files(self, scene_dir):
        for name in ("source.xyz", "target.xyz", "corr.txt", "gt.json"):
            assert (scene_dir / name).exists()
        gt = json.loads((scene_dir / "gt.json").read_text())
        assert len(gt["rotation"]) == 9
        assert len(gt["true_inlier_indices"]) == 40


class TestRegister:
    def test_register_with_ground_truth(self, scene_dir, tmp_path):
        out = tmp_path / "result.json"
        hist_dir = tmp_path / "hists"
        sus_dir = tmp_path / "sus"
        proc = run_cli(
            "register", "--source", str(scene_dir / "source.xyz"),
            "--target", str(scene_dir / "target.xyz"),
            "--corr", str(scene_dir / "corr.txt"),
            "--gt", str(scene_dir / "gt.json"),
            "--tr", "0.01", "--seed", "3", "--out", str(out),
            "--max-local-iters", "60",
            "--dump-histograms", str(hist_dir), "--dump-sus", str(sus_dir),
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["metrics"]["rotation_error_deg"] < 1.0
        assert payload["metrics"]["translation_error"] < 0.01
        assert (hist_dir / "angle_histogram.csv").exists()
        assert (hist_dir / "scale_ratio_histogram.csv").exists()
        if payload["rounds"] > 1:  # self-update ran between rounds
            assert any(sus_dir.glob("sus_round_*.csv"))

    def test_missing_input_exits_2(self, scene_dir, tmp_path):
        proc = run_cli("register", "--source", "nope.xyz",
                       "--target", str(scene_dir / "target.xyz"),
                       "--corr", str(scene_dir / "corr.txt"),
                       "--tr", "0.01", "--seed", "3", "--out", str(tmp_path / "r.json"))
        assert proc.returncode == 2

    def test_malformed_cloud_exits_2(self, scene_dir, tmp_path):
        bad = tmp_path / "bad.xyz"
        bad.write_text("1 2\n")
        proc = run_cli("register", "--source", str(bad),
                       "--target", str(scene_dir / "target.xyz"),
                       "--corr", str(scene_dir / "corr.txt"),
                       "--tr", "0.01", "--seed", "3", "--out", str(tmp_path / "r.json"))
        assert proc.returncode == 2

    def test_degenerate_geometry_exits_3(self, tmp_path):
        cloud = tmp_path / "line.xyz"
        cloud.write_text("".join(f"{x} 0 0\n" for x in range(30)))
        corr = tmp_path / "corr.txt"
        corr.write_text("".join(f"{i} {i}\n" for i in range(30)))
        proc = run_cli("register", "--source", str(cloud), "--target", str(cloud),
                       "--corr", str(corr), "--tr", "0.01", "--seed", "1",
                       "--max-local-iters", "20",
                       "--out", str(tmp_path / "r.json"))
        assert proc.returncode == 3, proc.stderr

    def test_usage_error_exits_1(self):
        proc = run_cli("register", "--tr", "0.01")
        assert proc.returncode == 1


class TestBench:
    def test_tiny_grid(self, tmp_path):
        csv = tmp_path / "bench.csv"
        summary = tmp_path / "summary.json"
        proc = run_cli("bench", "--outlier-rates", "0.5", "--trials", "2", "--seed", "9",
                       "--csv", str(csv), "--summary", str(summary),
                       "--points", "120", "--corrs", "60", "--max-local-iters", "40")
        assert proc.returncode == 0, proc.stderr
        lines = csv.read_text().strip().splitlines()
        assert len(lines) == 3  # header + 1 rate x 2 trials x 1 cell
        assert json.loads(summary.read_text())["cells"]

    def test_bad_rates_exit_1(self, tmp_path):
        proc = run_cli("bench", "--outlier-rates", "a,b", "--trials", "1", "--seed", "1",
                       "--csv", str(tmp_path / "x.csv"), "--summary", str(tmp_path / "y.json"))
        assert proc.returncode == 1
