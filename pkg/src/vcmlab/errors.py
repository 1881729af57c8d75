"""Exception taxonomy shared across the package.

All argument-level failures derive from ValueError so callers that do not
care about the finer distinction can catch one base class.
"""

from __future__ import annotations


class DomainError(ValueError):
    """A value is outside its documented domain (negative tokens, sigma <= 0, ...)."""


class StructuralError(ValueError):
    """A composite input is malformed (bad partition, mixed configs, rank deficiency)."""


class ContractError(ValueError):
    """A precondition tying arguments together is violated (missing required feature)."""


class ConvergenceError(RuntimeError):
    """The optimizer exhausted its iteration budget.

    Carries the final gradient max-norm so the failure is diagnosable.
    """

    def __init__(self, message: str, gradient_norm: float) -> None:
        super().__init__(f"{message} (gradient max-norm {gradient_norm:.3e})")
        self.gradient_norm = gradient_norm


class SnapshotError(RuntimeError):
    """A persisted session snapshot is unreadable or inconsistent."""
