"""Exception hierarchy shared across the package.

Each exception carries a short machine-readable ``category`` used by the CLI
to map failures onto exit codes.
"""

from __future__ import annotations


class CovertBeamError(Exception):
    """Base class for all package errors."""

    category = "internal"


class InvalidInputError(CovertBeamError):
    """A caller-supplied value violates a documented precondition."""

    category = "invalid-input"


class InfeasibleScenarioError(CovertBeamError):
    """The requested design has no feasible beamformer under the given budget.

    ``detail`` names the constraint (or LMI block) that could not be met.
    """

    category = "infeasible-scenario"

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message if detail is None else f"{message} ({detail})")
        self.detail = detail


class DegenerateGeometryError(CovertBeamError):
    """Channel vectors are (numerically) linearly dependent where independence is required."""

    category = "degenerate-geometry"


class OutputError(CovertBeamError):
    """Result files could not be written or parsed."""

    category = "io-error"


class RecoveryFailedError(CovertBeamError):
    """Rank-one recovery found no candidate meeting the residual tolerance.

    The best attempt and its violation are attached for diagnostics.
    """

    category = "recovery-failed"

    def __init__(self, message: str, best_candidate=None, best_violation: float | None = None):
        super().__init__(message)
        self.best_candidate = best_candidate
        self.best_violation = best_violation
