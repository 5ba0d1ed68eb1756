"""Watershed-constrained AHP flood risk mapping on raster grids."""

from .ahp import (
    CRITERIA,
    ConstraintSpec,
    JudgmentModel,
    RiskClassGrid,
    classify_risk,
    flood_risk_index,
    weights_from_judgment,
    zonal_statistic,
)
from .config import ConfigError, PipelineConfig, load_config
from .grid import GeoGrid, ZoneLabels, read_ascii_grid, write_ascii_grid
from .kernels import BACKEND
from .pipeline import StageError, run_matrix, run_pipeline
from .validation import ValidationMasks, correct_fit, validate
from .watershed import DelineationConfig, delineate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CRITERIA",
    "ConfigError",
    "ConstraintSpec",
    "DelineationConfig",
    "GeoGrid",
    "JudgmentModel",
    "PipelineConfig",
    "RiskClassGrid",
    "StageError",
    "ValidationMasks",
    "ZoneLabels",
    "classify_risk",
    "correct_fit",
    "delineate",
    "flood_risk_index",
    "load_config",
    "read_ascii_grid",
    "run_matrix",
    "run_pipeline",
    "validate",
    "weights_from_judgment",
    "write_ascii_grid",
    "zonal_statistic",
]
