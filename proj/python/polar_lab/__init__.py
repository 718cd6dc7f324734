"""Adapter caching and routing simulator (Python bindings)."""

from ._core import (
    ConfigError,
    IngestionError,
    __version__,
    confidence_radius,
    generate_instance,
    known_policies,
    known_suites,
    oracle,
    parse_profiles,
    pseudo_regret,
    run_matrix,
    run_policy,
    solve_cache,
)

__all__ = [
    "ConfigError",
    "IngestionError",
    "__version__",
    "confidence_radius",
    "generate_instance",
    "known_policies",
    "known_suites",
    "oracle",
    "parse_profiles",
    "pseudo_regret",
    "run_matrix",
    "run_policy",
    "solve_cache",
]
