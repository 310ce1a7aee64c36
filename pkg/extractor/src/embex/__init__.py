"""Frozen dual-encoder embedding extraction.

Turns dataset images and prompt-rendered class names into embedding-table
files (``.cemb``/``.clbl`` plus a JSON manifest) for the evaluation
library.
"""

from .datasets import DatasetView, resolve_dataset
from .encoders import DualEncoder, HFClipEncoder, StubEncoder, load_encoder
from .errors import (
    DatasetMissing,
    EmptyClassList,
    ExtractorError,
    MissingPlaceholder,
    ModelLoadFailure,
)
from .jobs import ExtractJob, extract_images, extract_texts, read_class_names, read_templates
from .preprocess import preprocess, preprocess_batch

__version__ = "0.1.0"

__all__ = [
    "DatasetMissing",
    "DatasetView",
    "DualEncoder",
    "EmptyClassList",
    "ExtractJob",
    "ExtractorError",
    "HFClipEncoder",
    "MissingPlaceholder",
    "ModelLoadFailure",
    "StubEncoder",
    "extract_images",
    "extract_texts",
    "load_encoder",
    "preprocess",
    "preprocess_batch",
    "read_class_names",
    "read_templates",
    "resolve_dataset",
]
