"""Seedable generator of synthetic recommender-system datasets."""

from .config import GenerationSpec, load_config
from .errors import ConfigError, DataError, DomainError, FactorizationError, NoRuleFiredError, RecsynthError
from .pipeline import DatasetBundle, emit, run_pipeline
from .report import stats, validate

__all__ = [
    "ConfigError", "DataError", "DatasetBundle", "DomainError", "FactorizationError", "GenerationSpec",
    "NoRuleFiredError", "RecsynthError", "emit", "load_config", "run_pipeline", "stats", "validate",
]
__version__ = "0.1.0"
