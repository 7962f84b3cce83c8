"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit status 1); violated
mathematical invariants raise :class:`InvariantViolation` (exit status 2).
"""
from __future__ import annotations


class TailrateError(Exception):
    pass


class InputError(TailrateError, ValueError):
    pass


class DomainError(InputError):
    pass


class WeightRangeError(InputError):
    pass


class NoRootError(InputError):
    pass


class DegenerateError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class PartitionError(InputError):
    pass


class PreconditionError(InputError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ClassificationError(TailrateError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvariantViolation(TailrateError, AssertionError):
    pass


class ParseError(InputError):
    """Raised by the expression parser; ``offset`` is a byte offset into the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EvalError(InputError):
    def __init__(self, message, subtree=""):
        super().__init__(f"{message}: {subtree}" if subtree else message)
        self.subtree = subtree
