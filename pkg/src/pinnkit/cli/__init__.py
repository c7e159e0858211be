"""Command-line interface: configs, the example registry and run orchestration."""

from pinnkit.cli.config import ConfigError, RunConfig, dump_config, parse_config, parse_config_text, to_dict
from pinnkit.cli.geometry_expr import ExpressionError, parse_geometry
from pinnkit.cli.registry import REGISTRY, build_problem
from pinnkit.cli.run import (
    DomainError,
    MissingCheckpointError,
    RunReport,
    l2_relative_error,
    main,
    run,
)

__all__ = [
    "ConfigError", "RunConfig", "dump_config", "parse_config", "parse_config_text", "to_dict",
    "ExpressionError", "parse_geometry", "REGISTRY", "build_problem",
    "DomainError", "MissingCheckpointError", "RunReport", "l2_relative_error", "main", "run",
]
