"""Exception hierarchy shared across the harness.

Every error carries a short machine-parsable ``category`` used by the CLI
to emit one-line failure reports.
"""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for all harness failures."""

    category = "error"


class DatasetStructureError(HarnessError):
    """Dataset directory tree does not match the expected layout."""

    category = "structural"


class TaskArityError(DatasetStructureError):
    """A split does not contain exactly two class directories."""

    category = "task-arity"


class SamplingError(HarnessError):
    """A stratified sample cannot be drawn (insufficient items)."""

    category = "sampling"


class CapacityError(HarnessError):
    """More images supplied than the grid layout can hold."""

    category = "capacity"


class CompositionError(HarnessError):
    """A source image could not be placed into a grid."""

    category = "composition"


class UnsupportedLayoutError(HarnessError):
    """No default grid layout exists for the requested image count."""

    category = "unsupported-layout"


class RenderError(HarnessError):
    """Prompt rendering failed (arity mismatch, missing reasoning text)."""

    category = "render"


class CredentialError(HarnessError):
    """Provider credentials missing or rejected; never retried."""

    category = "credential"


class PayloadError(HarnessError):
    """Request body rejected as oversized."""

    def __init__(self, message: str, size_bytes: int):
        super().__init__(message)
        self.size_bytes = size_bytes

    category = "payload"


class TransportError(HarnessError):
    """All retries exhausted; carries the last HTTP status observed."""

    def __init__(self, message: str, last_status: int | None = None):
        super().__init__(message)
        self.last_status = last_status

    category = "transport"


class ScriptExhaustedError(HarnessError):
    """Mock provider ran out of scripted entries."""

    category = "mock-script"


class ScoringError(HarnessError):
    """A prediction references an item with no ground-truth entry."""

    category = "scoring"


class DegenerateMatrixError(HarnessError):
    """Metrics requested for an all-zero confusion matrix."""

    category = "degenerate-input"


class PlanningError(HarnessError):
    """Request planning impossible (e.g. empty test split)."""

    category = "planning"


class ManifestIntegrityError(HarnessError):
    """A run manifest is truncated or contains an unreadable record."""

    category = "integrity"


class ConfigError(HarnessError):
    """Invalid run or provider configuration."""

    category = "config"
