"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class DomainError(ValueError):
    """An argument lies outside the domain of a physical map."""


class DegenerateStateError(DomainError):
    """A Bell-diagonal state whose recurrence success probability is zero."""


@dataclass(frozen=True)
class Issue:
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.field}: {self.message}"


class ValidationError(ValueError):
    """Raised by request validation; carries every offending field."""

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def codes(self) -> set[str]:
        return {i.code for i in self.issues}
