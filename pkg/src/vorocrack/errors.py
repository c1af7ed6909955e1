"""Exception hierarchy. Every error carries the CLI exit code it maps to."""

from __future__ import annotations


class VoroCrackError(Exception):
    exit_code = 1


class ConfigError(VoroCrackError):
    exit_code = 2


class NonConvergence(VoroCrackError):
    exit_code = 3


class DegenerateInput(VoroCrackError):
    exit_code = 2


class InconsistentGeometry(VoroCrackError):
    exit_code = 3


class ZeroWeight(VoroCrackError):
    exit_code = 3


class Unreachable(VoroCrackError):
    exit_code = 3


class DegenerateCycle(VoroCrackError):
    exit_code = 3


class InvalidCycle(VoroCrackError):
    exit_code = 3


class Infeasible(VoroCrackError):
    exit_code = 3


class NodeLimit(VoroCrackError):
    exit_code = 3


class DimensionMismatch(VoroCrackError):
    exit_code = 2


class InsufficientSamples(VoroCrackError):
    exit_code = 2


class StageError(VoroCrackError):
    """Wraps an error raised inside a pipeline stage, tagging the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
