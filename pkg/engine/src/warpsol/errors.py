from __future__ import annotations

"""Structured error types shared by the library and the CLI."""

from typing import Any


class WarpsolError(Exception):
    """Base error carrying a stable code, a message, an optional hint and context."""

    exit_code = 2

    def __init__(self, code: str, message: str, *, hint: str | None = None, **context: Any) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.hint = hint
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        """The machine-readable record printed by the CLI; ``None`` context values are dropped."""

        record: dict[str, Any] = {"code": self.code, "message": self.message, "type": type(self).__name__}
        if self.hint:
            record["hint"] = self.hint
        record.update({key: value for key, value in self.context.items() if value is not None})
        return record


class DomainError(WarpsolError, ValueError):
    """Evaluation outside the open interval of a warping profile or a flow window."""


class ConfigError(WarpsolError, ValueError):
    """Invalid or inconsistent run parameters."""


class UnsupportedProfileError(WarpsolError):
    """The requested quantity is only defined for a subset of warping profiles."""


class InfeasibleError(WarpsolError):
    """The problem has no solution for structural reasons."""


class NonConvergenceError(WarpsolError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    exit_code = 3
