"""Configuration, verification suites, reports and the command line."""

from .config import DEFAULT_TOLERANCES, SUITES, RunConfig, load_config
from .report import build_report, report_digest, validate_report, write_report

__all__ = ["DEFAULT_TOLERANCES", "RunConfig", "SUITES", "build_report", "load_config",
           "report_digest", "validate_report", "write_report"]
