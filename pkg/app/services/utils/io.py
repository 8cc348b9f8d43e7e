"""
File I/O

Readers and writers for the toolkit's on-disk formats: point-cloud CSV
(header x0..x{d-1}), MST edge CSV (i,j,length), collapse-scan CSV
(eta,neg_l_e), JSONL descent histories and pretty-printed JSON reports.
CSV files are UTF-8 with LF line endings; floats are written in their
shortest round-trip form.
"""
import json
import logging
import os
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.core.config import TREG_CONFIG
from app.core.exceptions import InputValidationError
from app.services.point_cloud import PointCloud

if TYPE_CHECKING:
    from app.schemas.metric_schema import CollapseScan
    from app.schemas.optim_schema import RunSummary
    from app.services.descent import OptimRun
    from app.services.mst_engine import Mst

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def point_cloud_columns(d: int) -> list:
    return [f"x{k}" for k in range(d)]


def write_point_cloud(cloud: PointCloud, path: PathLike) -> None:
    """Write a cloud as CSV with header x0,...,x{d-1}."""
    _write_frame(pd.DataFrame(cloud.points, columns=point_cloud_columns(cloud.d)), path)


def read_point_cloud(path: PathLike) -> PointCloud:
    """
    Read a point-cloud CSV.

    Args:
        path: CSV file with header x0,...,x{d-1} and one row per point

    Returns:
        The PointCloud

    Raises:
        InputValidationError: On a missing file, a wrong header, non-numeric cells or
            non-finite values
    """
    try:
        frame = pd.read_csv(path, encoding="utf-8", dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise InputValidationError(f"Point cloud file not found: {path}")
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputValidationError(f"Malformed point cloud CSV {path}: {e}")

    expected = point_cloud_columns(len(frame.columns))
    if list(frame.columns) != expected:
        raise InputValidationError(
            f"Point cloud CSV header must be {','.join(expected)}, got {','.join(map(str, frame.columns))}"
        )
    if frame.empty:
        raise InputValidationError(f"Point cloud CSV {path} has no data rows")
    try:
        points = frame.astype(np.float64).to_numpy()
    except (ValueError, TypeError) as e:
        raise InputValidationError(f"Non-numeric value in {path}: {e}")
    logger.debug(f"Read {points.shape[0]} points in R^{points.shape[1]} from {path}")
    return PointCloud(points)


def write_mst_edges(mst: "Mst", path: PathLike) -> None:
    """Write tree edges as CSV i,j,length sorted by (length, i, j)."""
    rows = sorted(mst.edges, key=lambda e: (e.length, e.i, e.j))
    frame = pd.DataFrame(
        {
            "i": pd.Series([e.i for e in rows], dtype="int64"),
            "j": pd.Series([e.j for e in rows], dtype="int64"),
            "length": pd.Series([e.length for e in rows], dtype="float64"),
        }
    )
    _write_frame(frame, path)


def read_mst_edges(path: PathLike) -> pd.DataFrame:
    """Read an edge CSV back as a frame with columns i, j, length."""
    frame = pd.read_csv(path, dtype={"i": "int64", "j": "int64", "length": "float64"})
    if list(frame.columns) != ["i", "j", "length"]:
        raise InputValidationError(f"Edge CSV header must be i,j,length, got {list(frame.columns)}")
    return frame


def write_collapse_scan(scan: "CollapseScan", path: PathLike) -> None:
    """Write a collapse scan as CSV eta,neg_l_e."""
    _write_frame(pd.DataFrame({"eta": scan.etas, "neg_l_e": scan.scores}), path)


def write_json(data: Any, path: PathLike) -> None:
    """Pretty-print a dict or pydantic model as JSON with sorted keys."""
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputValidationError(f"File not found: {path}")
    except json.JSONDecodeError as e:
        raise InputValidationError(f"Malformed JSON in {path}: {e}")


def write_jsonl(records: Iterable[dict], path: PathLike) -> None:
    """One JSON object per line."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")


def read_jsonl(path: PathLike) -> list:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def save_optim_run(run: "OptimRun", summary: "RunSummary", out_dir: PathLike) -> None:
    """
    Persist a descent run: points_initial.csv, points_final.csv, history.jsonl and
    summary.json. Two-view runs also get points_final_b.csv.
    """
    io_config = TREG_CONFIG["io"]
    write_point_cloud(run.initial, os.path.join(out_dir, "points_initial.csv"))
    write_point_cloud(run.final, os.path.join(out_dir, "points_final.csv"))
    if run.final_b is not None:
        write_point_cloud(run.final_b, os.path.join(out_dir, "points_final_b.csv"))
    write_jsonl((entry.to_record() for entry in run.history), os.path.join(out_dir, io_config["history_file"]))
    write_json(summary, os.path.join(out_dir, io_config["summary_file"]))
    logger.info(f"Saved run artifacts ({len(run.history)} history rows) to {out_dir}")
