"""Shared exception types.

Every error raised on purpose by this package derives from DecliftError, so
callers (and the command line driver) can separate our diagnostics from
genuine bugs.  Capacity problems get their own branch because they map to a
distinct process exit code.
"""

from __future__ import annotations


class DecliftError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class ParseError(DecliftError):
    """The input document is not syntactically well formed."""

    code = "parse"


class SchemaError(DecliftError):
    """The document parses but does not match the model schema."""

    code = "schema"


class ValidationError(DecliftError):
    """A structurally valid model violates a semantic invariant."""

    code = "validation"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class RangeMismatch(DecliftError):
    """A value lies outside the finite range it must be drawn from."""

    code = "range-mismatch"


class ZeroProbabilityObservation(DecliftError):
    """Belief update conditioned on an observation with zero prior mass."""

    code = "zero-probability-observation"


class NotLiftable(DecliftError):
    """Aggregation failed: two ground entries that must agree do not.

    Carries the witnesses so callers can report which transposition or
    which pair of keys broke interchangeability.
    """

    code = "not-liftable"

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class NonConvergent(DecliftError):
    """An iterative solver cannot guarantee termination for these inputs."""

    code = "non-convergent"


class InvalidParams(DecliftError):
    """Generator parameters outside their documented domain."""

    code = "invalid-params"


class CapacityExceeded(DecliftError):
    """An enumeration would exceed its configured cap.

    `measured` holds the size that was about to be materialized and `cap`
    the limit it broke, so the message in a report stays reproducible.
    """

    code = "capacity"

    def __init__(self, message, measured=None, cap=None):
        super().__init__(message)
        self.measured = measured
        self.cap = cap
