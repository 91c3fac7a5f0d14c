"""Error types shared across the workbench.

Front-end errors (parse, scope, desugar, expand, type) carry a source
position when one is known.  Evaluation-time failures live in
``effws.runtime`` because they are control flow for the evaluators, not
user-facing diagnostics.
"""

from __future__ import annotations

from typing import Optional, Tuple

Pos = Optional[Tuple[int, int]]  # (line, col), 1-based


def pos_str(pos: Pos) -> str:
    if pos is None:
        return "?:?"
    return f"{pos[0]}:{pos[1]}"


class EffwsError(Exception):
    """Base class for all diagnosable workbench errors."""

    def __init__(self, message: str, pos: Pos = None):
        self.message = message
        self.pos = pos
        super().__init__(self.render())

    label = "error"

    def render(self) -> str:
        return f"{self.label} at {pos_str(self.pos)}: {self.message}"


class ParseError(EffwsError):
    label = "ParseError"


class ScopeError(EffwsError):
    label = "ScopeError"


class DesugarError(EffwsError):
    label = "DesugarError"


class ExpandError(EffwsError):
    label = "ExpandError"


class TypeCheckError(EffwsError):
    """Static typing failure; renders as "TypeError" for the CLI."""

    label = "TypeError"

    def __init__(self, message: str, pos: Pos = None, expected: object = None, found: object = None):
        self.expected = expected
        self.found = found
        if expected is not None or found is not None:
            message = f"{message} (expected {expected}, found {found})"
        super().__init__(message, pos)
