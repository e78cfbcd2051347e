import json

import numpy as np
import pytest

from lvreg.engine import RansacConfig, run_registration
from lvreg.errors import IndexOutOfRange, ParseError, UnsupportedFormat
from lvreg.io import (
    emit_result,
    load_correspondences,
    load_point_cloud,
    load_transform,
    load_xyz,
    result_to_dict,
    transform_from_dict,
    transform_to_dict,
    write_transform,
    write_xyz,
)
from lvreg.metrics import MetricsReport
from lvreg.normals import PointCloud
from lvreg.synthetic import SyntheticSpec, synthesize_pair

from conftest import random_transform


class TestXyz:
    def test_three_line_file(self, tmp_path):
        path = tmp_path / "cloud.xyz"
        path.write_text("0 0 0\n1 0 0\n0 1 0\n")
        cloud = load_point_cloud(path)
        assert len(cloud) == 3
        assert np.array_equal(cloud.points[1], [1, 0, 0])

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "cloud.xyz"
        path.write_text("# header\n\n1 2 3   # trailing comment\n")
        assert len(load_point_cloud(path)) == 1

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "cloud.xyz"
        path.write_text("0 0 0\n1 2\n")
        with pytest.raises(ParseError, match="line 2"):
            load_point_cloud(path)

    def test_round_trip_bit_exact(self, tmp_path, rng):
        cloud = PointCloud(rng.normal(size=(20, 3)) * 1e3)
        path = tmp_path / "cloud.xyz"
        write_xyz(cloud, path)
        again = load_xyz(path)
        assert np.array_equal(cloud.points, again.points)


PLY_MINIMAL = """ply
format ascii 1.0
element vertex 2
property float x
property float y
property float z
end_header
0 0 0
1.5 2.5 3.5
"""

PLY_EXTRA_PROPS = """ply
format ascii 1.0
comment made by hand
element vertex 2
property float nx
property float x
property float y
property float z
property uchar red
end_header
9 0 0 0 255
9 1 2 3 255
"""


class TestPly:
    def test_minimal(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text(PLY_MINIMAL)
        cloud = load_point_cloud(path)
        assert len(cloud) == 2
        assert np.array_equal(cloud.points[1], [1.5, 2.5, 3.5])

    def test_extra_properties_skipped(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text(PLY_EXTRA_PROPS)
        cloud = load_point_cloud(path)
        assert np.array_equal(cloud.points, [[0, 0, 0], [1, 2, 3]])

    def test_binary_rejected(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text("ply\nformat binary_little_endian 1.0\nend_header\n")
        with pytest.raises(UnsupportedFormat):
            load_point_cloud(path)

    def test_missing_magic(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text("not a ply\n")
        with pytest.raises(ParseError):
            load_point_cloud(path)

    def test_truncated_vertices(self, tmp_path):
        path = tmp_path / "cloud.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 3\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "end_header\n0 0 0\n")
        with pytest.raises(ParseError):
            load_point_cloud(path)


class TestCorrespondences:
    def _clouds(self):
        src = PointCloud([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
        tgt = PointCloud([[5, 0, 0], [6, 0, 0], [5, 1, 0]])
        return src, tgt

    def test_index_mode(self, tmp_path):
        src, tgt = self._clouds()
        path = tmp_path / "corr.txt"
        path.write_text("0 0\n1 1\n")
        corrs = load_correspondences(path, src, tgt)
        assert len(corrs) == 2
        assert np.array_equal(corrs.target[1], [6, 0, 0])

    def test_coordinate_mode(self, tmp_path):
        src, tgt = self._clouds()
        path = tmp_path / "corr.txt"
        path.write_text("0 0 0 5 0 0\n1 0 0 6 0 0\n")
        corrs = load_correspondences(path, src, tgt)
        assert np.array_equal(corrs.source[1], [1, 0, 0])

    def test_index_out_of_range(self, tmp_path):
        src, tgt = self._clouds()
        path = tmp_path / "corr.txt"
        path.write_text("0 0\n9999 1\n")
        with pytest.raises(IndexOutOfRange):
            load_correspondences(path, src, tgt)

    def test_bad_token_count(self, tmp_path):
        src, tgt = self._clouds()
        path = tmp_path / "corr.txt"
        path.write_text("0 0 0 1\n")
        with pytest.raises(ParseError):
            load_correspondences(path, src, tgt)


class TestTransformJson:
    def test_round_trip(self, tmp_path, rng):
        t = random_transform(rng)
        path = tmp_path / "gt.json"
        write_transform(t, path)
        again = load_transform(path)
        assert np.array_equal(t.rotation, again.rotation)
        assert np.array_equal(t.translation, again.translation)

    def test_row_major_layout(self, rng):
        t = random_transform(rng)
        d = transform_to_dict(t)
        assert d["rotation"][1] == t.rotation[0, 1]
        assert transform_from_dict(d).rotation[0, 1] == t.rotation[0, 1]


class TestEmitResult:
    def _result(self):
        spec = SyntheticSpec(n_points=200, n_correspondences=80, outlier_rate=0.4,
                             noise_sigma=0.003, seed=5)
        source, target, corrs, gt, _ = synthesize_pair(spec)
        cfg = RansacConfig(rng_seed=5, max_local_iterations=80)
        return run_registration(corrs, source, target, cfg)

    def test_identity_layout(self):
        from lvreg.geometry import RigidTransform
        d = transform_to_dict(RigidTransform.identity())
        assert d["rotation"] == [1, 0, 0, 0, 1, 0, 0, 0, 1]
        assert d["translation"] == [0, 0, 0]

    def test_round_trip_and_key_presence(self, tmp_path):
        result = self._result()
        path = tmp_path / "result.json"
        report = MetricsReport(0.5, 0.01, 0.02, 0.01, 0.9, 0.8, 0.85, 0.1)
        emit_result(result, report, path)
        payload = json.loads(path.read_text())
        assert list(payload)[:2] == ["rotation", "translation"]
        assert payload["rounds"] == result.rounds
        assert payload["metrics"]["precision"] == 0.9
        assert len(payload["trace"]) == result.rounds
        again = transform_from_dict(payload)
        assert np.array_equal(again.rotation, result.transform.rotation)

    def test_metrics_absent_without_ground_truth(self, tmp_path):
        result = self._result()
        path = tmp_path / "result.json"
        emit_result(result, None, path)
        payload = json.loads(path.read_text())
        assert "metrics" not in payload
        assert payload["total_iterations"] == result.total_iterations

    def test_emitted_floats_round_trip(self, tmp_path):
        result = self._result()
        path = tmp_path / "result.json"
        emit_result(result, None, path)
        payload = json.loads(path.read_text())
        assert payload["rotation"] == [float(v) for v in result.transform.rotation.reshape(9)]
        assert result_to_dict(result) == json.loads(json.dumps(result_to_dict(result)))
