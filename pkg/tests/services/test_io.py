"""
Tests for the on-disk formats.
"""
import json
import os

import numpy as np
import pytest

from app.core.exceptions import InputValidationError
from app.schemas.metric_schema import CollapseScan
from app.schemas.optim_schema import Objective, OptimConfig
from app.services.descent import optimize, summarize_run
from app.services.mst_engine import compute_mst
from app.services.point_cloud import PointCloud
from app.services.utils.io import (
    read_json,
    read_jsonl,
    read_mst_edges,
    read_point_cloud,
    save_optim_run,
    write_collapse_scan,
    write_json,
    write_mst_edges,
    write_point_cloud,
)


class TestPointCloudCsv:
    """Point-cloud CSV files."""

    def test_round_trip(self, tmp_path, rng):
        """Coordinates survive a write and read unchanged."""
        cloud = PointCloud(rng.standard_normal((7, 3)))
        path = tmp_path / "cloud.csv"
        write_point_cloud(cloud, path)
        np.testing.assert_array_equal(read_point_cloud(path).points, cloud.points)

    def test_header_and_line_endings(self, tmp_path):
        """Header x0..x{d-1} and LF line endings."""
        path = tmp_path / "cloud.csv"
        write_point_cloud(PointCloud([[0.5, 1.0]]), path)
        raw = path.read_bytes()
        assert raw.startswith(b"x0,x1\n")
        assert b"\r\n" not in raw

    def test_reads_fixture(self, square_csv, unit_square):
        """A hand-written CSV parses to the unit square."""
        np.testing.assert_array_equal(read_point_cloud(square_csv).points, unit_square.points)

    @pytest.mark.parametrize("content", [
        "a,b\n0,0\n",
        "x1,x0\n0,0\n",
        "x0,x1\n",
        "x0,x1\n0,zero\n",
        "x0,x1\n0,nan\n",
        "",
    ])
    def test_malformed_files(self, tmp_path, content):
        """Wrong headers, empty data and bad cells are input errors."""
        path = tmp_path / "bad.csv"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(InputValidationError):
            read_point_cloud(path)

    def test_missing_file(self, tmp_path):
        """A missing file is an input error."""
        with pytest.raises(InputValidationError):
            read_point_cloud(tmp_path / "missing.csv")


class TestEdgeCsv:
    """MST edge CSV files."""

    def test_unit_square_edges(self, tmp_path, unit_square):
        """Three rows sorted by (length, i, j)."""
        path = tmp_path / "edges.csv"
        write_mst_edges(compute_mst(unit_square), path)
        frame = read_mst_edges(path)
        assert list(frame.columns) == ["i", "j", "length"]
        assert frame[["i", "j"]].values.tolist() == [[0, 1], [0, 3], [1, 2]]
        assert frame["length"].tolist() == [1.0, 1.0, 1.0]

    def test_empty_tree(self, tmp_path):
        """A single point writes only the header."""
        path = tmp_path / "edges.csv"
        write_mst_edges(compute_mst(PointCloud([[1.0, 2.0]])), path)
        assert path.read_text(encoding="utf-8") == "i,j,length\n"
        assert len(read_mst_edges(path)) == 0


class TestJsonFiles:
    """JSON and JSONL helpers."""

    def test_collapse_scan_csv(self, tmp_path):
        """Columns eta,neg_l_e."""
        scan = CollapseScan(etas=[0.0, 0.5], scores=[2.0, 1.0], zeroed_dims=[0, 2], n=10, d=4, seed=0)
        path = tmp_path / "scan.csv"
        write_collapse_scan(scan, path)
        assert path.read_text(encoding="utf-8").splitlines() == ["eta,neg_l_e", "0.0,2.0", "0.5,1.0"]

    def test_json_sorted_keys(self, tmp_path):
        """Pydantic models are dumped with sorted keys."""
        scan = CollapseScan(etas=[0.0], scores=[2.0], zeroed_dims=[0], n=10, d=4, seed=0)
        path = tmp_path / "scan.json"
        write_json(scan, path)
        loaded = read_json(path)
        assert list(loaded) == sorted(loaded)
        assert loaded["scores"] == [2.0]

    def test_malformed_json(self, tmp_path):
        """Unparseable JSON is an input error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(InputValidationError):
            read_json(path)


class TestSaveOptimRun:
    """Run artifacts."""

    def test_single_view_files(self, tmp_path, rng):
        """Points, history and summary files with the documented keys."""
        run = optimize(PointCloud(rng.standard_normal((6, 3))), OptimConfig(steps=10, record_every=5, lr=0.01))
        out_dir = tmp_path / "run"
        save_optim_run(run, summarize_run(run), out_dir)

        assert sorted(os.listdir(out_dir)) == [
            "history.jsonl", "points_final.csv", "points_initial.csv", "summary.json"
        ]
        history = read_jsonl(out_dir / "history.jsonl")
        assert [row["step"] for row in history] == [0, 5, 10]
        assert {"step", "l_e", "l_s", "total", "grad_max"} <= set(history[0])
        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["steps_run"] == 10
        np.testing.assert_array_equal(read_point_cloud(out_dir / "points_final.csv").points, run.final.points)

    def test_two_view_files(self, tmp_path, rng):
        """Two-view runs also write the second view and the MSE term."""
        cfg = OptimConfig(steps=4, record_every=2, lr=0.01, objective=Objective.TREGS_TWO_VIEW)
        run = optimize(PointCloud(rng.standard_normal((6, 3))), cfg)
        out_dir = tmp_path / "run"
        save_optim_run(run, summarize_run(run), out_dir)
        assert (out_dir / "points_final_b.csv").exists()
        assert "l_mse" in read_jsonl(out_dir / "history.jsonl")[0]
