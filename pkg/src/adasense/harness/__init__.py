"""Experiment sweeps, verification batteries and the command line."""
from .checks import CheckResult, verify
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .curve import curve
from .run import ReportRow, derived_seeds, run
