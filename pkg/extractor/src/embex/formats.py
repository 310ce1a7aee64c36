"""Writers for the embedding-table interchange format.

This is an independent implementation of the binary layout the evaluation
library reads (magic "CEMB"/"CLBL", little-endian headers, float32/uint32
payloads); the cross-component tests load every emitted file with that
library to keep the two sides honest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

_EMB_HEADER = struct.Struct("<4sIQII")
_LBL_HEADER = struct.Struct("<4sIQI")


def write_embeddings(path: str | Path, rows: np.ndarray, normalized: bool) -> Path:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"embedding payload must be 2-D, got {rows.shape}")
    path = Path(path).with_suffix(".cemb")
    flags = 1 if normalized else 0
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(b"CEMB", FORMAT_VERSION, rows.shape[0], rows.shape[1], flags))
        fh.write(rows.tobytes())
    return path


def write_labels(
    path: str | Path, labels: np.ndarray, domain_ids: np.ndarray | None = None
) -> Path:
    labels = np.ascontiguousarray(labels, dtype="<u4")
    path = Path(path).with_suffix(".clbl")
    flags = 1 if domain_ids is not None else 0
    with open(path, "wb") as fh:
        fh.write(_LBL_HEADER.pack(b"CLBL", FORMAT_VERSION, labels.shape[0], flags))
        fh.write(labels.tobytes())
        if domain_ids is not None:
            if len(domain_ids) != len(labels):
                raise ValueError("domain ids must align with labels")
            fh.write(np.ascontiguousarray(domain_ids, dtype="<u4").tobytes())
    return path


def write_manifest(path: str | Path, doc: dict) -> Path:
    path = Path(path)
    if not path.name.endswith(".manifest.json"):
        path = path.with_name(path.stem + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
