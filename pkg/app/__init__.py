"""MST-based regularization toolkit for point clouds."""

__version__ = "1.0.0"
