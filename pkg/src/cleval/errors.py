"""Exception types shared across the package.

Every failure mode that callers are expected to distinguish gets its own
class; all inherit from :class:`ClevalError` so a harness can catch the
whole family at once.
"""

from __future__ import annotations


class ClevalError(Exception):
    """Base class for all errors raised by this package."""


# --- embedding file format ------------------------------------------------

class BadMagic(ClevalError):
    """File does not start with the expected magic bytes."""


class VersionMismatch(ClevalError):
    """File declares a format version this reader does not understand."""


class TruncatedFile(ClevalError):
    """Payload is shorter than the header promises."""


class DimMismatch(ClevalError):
    """Declared shape disagrees with the payload or with another input."""


class InvariantViolation(ClevalError):
    """A data structure violates one of its documented invariants."""


class IoFailure(ClevalError):
    """Underlying filesystem write failed; the cause is chained."""


class ZeroNormRow(ClevalError):
    """A row with zero L2 norm cannot be normalized."""

    def __init__(self, row: int):
        super().__init__(f"row {row} has zero L2 norm")
        self.row = row


# --- scenario construction --------------------------------------------------

class IndivisibleSplit(ClevalError):
    """Class count cannot be partitioned into the requested step sizes."""


class TooFewClasses(ClevalError):
    """Fewer classes available than the scenario requires."""


class DuplicateDomain(ClevalError):
    """Domain ids for a domain-incremental scenario must be distinct."""


class EmptyLabels(ClevalError):
    """A label stream with no samples cannot be scheduled."""


class StepOutOfRange(ClevalError):
    """Step index outside the scenario's task sequence."""


# --- classifier -------------------------------------------------------------

class MissingPlaceholder(ClevalError):
    """Prompt template does not contain exactly one '{}' placeholder."""


class IncompleteGrid(ClevalError):
    """Text embeddings do not cover the full prompt x class grid."""


class EmptyPromptSubset(ClevalError):
    """Decision pooling needs at least one prompt index."""


class KOutOfRange(ClevalError):
    """Requested k outside 1..num_prompts."""


class EmptyTestSet(ClevalError):
    """No test rows remain after filtering to the seen classes."""


class UnseenLabelInHead(ClevalError):
    """Evaluation requested for class ids the head has no prototype for."""


# --- metrics ----------------------------------------------------------------

class MatrixTooSmall(ClevalError):
    """Transfer metrics need an accuracy matrix of size at least 2x2."""


# --- harness ----------------------------------------------------------------

class ConfigInvalid(ClevalError):
    """Run configuration is missing fields or internally inconsistent."""


class MissingClassEmbedding(ClevalError):
    """A class to be evaluated has no text prototype in the head."""
