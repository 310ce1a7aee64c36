"""Extraction failure modes."""

from __future__ import annotations


class ExtractorError(Exception):
    """Base class for all errors raised by this package."""


class DatasetMissing(ExtractorError):
    """The requested dataset/split is not present under the data root."""


class ModelLoadFailure(ExtractorError):
    """The encoder named by the model id cannot be constructed."""


class MissingPlaceholder(ExtractorError):
    """A prompt template does not contain exactly one '{}' placeholder."""


class EmptyClassList(ExtractorError):
    """The class-name file contains no names."""
