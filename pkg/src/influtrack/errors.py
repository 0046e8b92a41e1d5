"""Shared exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid scenario configuration (CLI exit code 2)."""


class RuntimeInconsistencyError(RuntimeError):
    """Internal inconsistency during a run, e.g. an observation with zero
    posterior probability (CLI exit code 3)."""
