import logging
import math
import os

import numpy as np
import pytest

from app.services.point_cloud import PointCloud


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    """Keep TREG_* settings from the developer's shell out of the tests."""
    monkeypatch.delenv("TREG_SEED", raising=False)
    monkeypatch.delenv("TREG_LOG_LEVEL", raising=False)
    monkeypatch.setenv("TREG_LOG_DIR", str(tmp_path / "logs"))
    yield
    # The CLI installs file handlers on the root logger; close them between tests
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        handler.close()
        root_logger.removeHandler(handler)


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square():
    """Corners of the unit square; MST length 3."""
    return PointCloud([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def three_four_five():
    """Two points at distance 5."""
    return PointCloud([[0.0, 0.0], [3.0, 4.0]])


@pytest.fixture
def regular_tetrahedron():
    """Regular tetrahedron inscribed in the unit sphere of R^3."""
    vertices = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return PointCloud(vertices / math.sqrt(3.0))


@pytest.fixture
def square_csv(tmp_path):
    """Unit-square corners written as a point-cloud CSV."""
    path = tmp_path / "square.csv"
    path.write_text("x0,x1\n0,0\n1,0\n1,1\n0,1\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    os.makedirs(path, exist_ok=True)
    return str(path)
