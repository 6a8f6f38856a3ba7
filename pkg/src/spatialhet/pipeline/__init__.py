"""Configuration-driven end-to-end workflow and its command-line front end."""

from .config import RunConfig, load_config, parse_config, preflight
from .run import Pipeline, RunReport, run, stage_seed

__all__ = ["Pipeline", "RunConfig", "RunReport", "load_config", "parse_config", "preflight", "run", "stage_seed"]
