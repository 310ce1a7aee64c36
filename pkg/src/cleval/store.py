"""Embedding tables and their on-disk binary format.

A table is a dense row-major float32 matrix plus per-row integer labels
and optional per-row domain ids.  Two sibling binary files hold the data:

``<stem>.cemb`` -- embedding payload::

    magic "CEMB" | version u32 LE | rows u64 LE | dim u32 LE | flags u32 LE
    | rows * dim float32 LE, row-major

flags bit0 marks the rows as unit-normalized.

``<stem>.clbl`` -- labels::

    magic "CLBL" | version u32 LE | rows u64 LE | flags u32 LE
    | rows * u32 LE class ids | (rows * u32 LE domain ids, iff flags bit0)

A human-readable sidecar ``<stem>.manifest.json`` carries class names and
other provenance; the binary payload stays fixed-layout.  Saving the same
table twice produces identical byte streams.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    IncompleteGrid,
    InvariantViolation,
    IoFailure,
    TruncatedFile,
    VersionMismatch,
    ZeroNormRow,
)

FORMAT_VERSION = 1

_EMB_MAGIC = b"CEMB"
_LBL_MAGIC = b"CLBL"
_EMB_HEADER = struct.Struct("<4sIQII")   # magic, version, rows, dim, flags
_LBL_HEADER = struct.Struct("<4sIQI")    # magic, version, rows, flags

# Unit-norm tolerance for tables that claim to be normalized.  float32
# rows normalized in double precision land well inside this.
NORM_TOL = 1e-5


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable matrix of embeddings with aligned per-row labels.

    The constructor takes ownership of the arrays: they are coerced to the
    storage dtypes and marked read-only, so a loaded table can be shared
    across worker threads without copies.
    """

    data: np.ndarray
    labels: np.ndarray | None = None
    domain_ids: np.ndarray | None = None
    normalized: bool = False

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise InvariantViolation(f"data must be 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        for name in ("labels", "domain_ids"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype=np.int64)
                if arr.ndim != 1:
                    raise InvariantViolation(f"{name} must be 1-D")
                object.__setattr__(self, name, arr)
        self.validate()
        self.data.flags.writeable = False
        for arr in (self.labels, self.domain_ids):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def num_rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        """Re-check all invariants; raises InvariantViolation on failure."""
        if self.dim <= 0:
            raise InvariantViolation("dim must be positive")
        if not np.all(np.isfinite(self.data)):
            raise InvariantViolation("embedding values must be finite")
        if self.labels is not None:
            if len(self.labels) != self.num_rows:
                raise InvariantViolation(
                    f"{len(self.labels)} labels for {self.num_rows} rows"
                )
            if self.num_rows and self.labels.min() < 0:
                raise InvariantViolation("class ids must be non-negative")
        if self.domain_ids is not None:
            if self.labels is None:
                raise InvariantViolation("domain_ids require labels")
            if len(self.domain_ids) != self.num_rows:
                raise InvariantViolation(
                    f"{len(self.domain_ids)} domain ids for {self.num_rows} rows"
                )
        if self.normalized and self.num_rows:
            norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
            bad = np.where(np.abs(norms - 1.0) > NORM_TOL)[0]
            if bad.size:
                raise InvariantViolation(
                    f"normalized flag set but row {bad[0]} has norm {norms[bad[0]]:.6g}"
                )


def l2_normalize(table: EmbeddingTable) -> EmbeddingTable:
    """Return a copy of the table with every row scaled to unit L2 norm.

    Row directions are preserved; computation runs in double precision and
    is truncated back to float32 storage.  Raises ZeroNormRow for any row
    that cannot be scaled.
    """
    data = table.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = np.where(norms == 0.0)[0]
    if zero.size:
        raise ZeroNormRow(int(zero[0]))
    out = (data / norms[:, None]).astype(np.float32)
    return EmbeddingTable(
        data=out,
        labels=table.labels,
        domain_ids=table.domain_ids,
        normalized=True,
    )


# --- path plumbing ----------------------------------------------------------

def _stem(path: str | Path) -> Path:
    p = Path(path)
    if p.suffix in (".cemb", ".clbl"):
        return p.with_suffix("")
    return p


def embedding_path(path: str | Path) -> Path:
    return _stem(path).with_suffix(".cemb")


def labels_path(path: str | Path) -> Path:
    return _stem(path).with_suffix(".clbl")


def manifest_path(path: str | Path) -> Path:
    stem = _stem(path)
    return stem.with_name(stem.name + ".manifest.json")


# --- save / load ------------------------------------------------------------

def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write ``<stem>.cemb`` and, when labels are present, ``<stem>.clbl``.

    The byte stream is a pure function of the table contents, so repeated
    saves are byte-identical.
    """
    table.validate()
    flags = 1 if table.normalized else 0
    header = _EMB_HEADER.pack(_EMB_MAGIC, FORMAT_VERSION, table.num_rows, table.dim, flags)
    payload = np.ascontiguousarray(table.data, dtype="<f4").tobytes()
    try:
        with open(embedding_path(path), "wb") as fh:
            fh.write(header)
            fh.write(payload)
        if table.labels is not None:
            lflags = 1 if table.domain_ids is not None else 0
            lheader = _LBL_HEADER.pack(_LBL_MAGIC, FORMAT_VERSION, table.num_rows, lflags)
            with open(labels_path(path), "wb") as fh:
                fh.write(lheader)
                fh.write(table.labels.astype("<u4").tobytes())
                if table.domain_ids is not None:
                    fh.write(table.domain_ids.astype("<u4").tobytes())
    except OSError as exc:
        raise IoFailure(f"failed writing {path}: {exc}") from exc


def _read_header(raw: bytes, magic: bytes, header: struct.Struct, path: Path) -> tuple:
    if len(raw) < header.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is shorter than the header")
    fields = header.unpack_from(raw)
    if fields[0] != magic:
        raise BadMagic(f"{path}: expected magic {magic!r}, found {fields[0]!r}")
    if fields[1] != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: version {fields[1]}, reader supports {FORMAT_VERSION}")
    return fields


def load_table(path: str | Path) -> EmbeddingTable:
    """Load ``<stem>.cemb`` plus the sibling ``<stem>.clbl`` if it exists.

    Validates magic bytes, version, and exact payload size before
    constructing the table; truncated or padded files are rejected.
    """
    emb_file = embedding_path(path)
    raw = emb_file.read_bytes()
    _, _, rows, dim, flags = _read_header(raw, _EMB_MAGIC, _EMB_HEADER, emb_file)
    expected = rows * dim * 4
    actual = len(raw) - _EMB_HEADER.size
    if actual < expected:
        raise TruncatedFile(f"{emb_file}: payload {actual} bytes, header promises {expected}")
    if actual > expected:
        raise DimMismatch(f"{emb_file}: payload {actual} bytes, header promises {expected}")
    data = np.frombuffer(raw, dtype="<f4", count=rows * dim, offset=_EMB_HEADER.size)
    data = data.reshape(rows, dim)

    labels = domain_ids = None
    lbl_file = labels_path(path)
    if lbl_file.exists():
        lraw = lbl_file.read_bytes()
        _, _, lrows, lflags = _read_header(lraw, _LBL_MAGIC, _LBL_HEADER, lbl_file)
        if lrows != rows:
            raise DimMismatch(f"{lbl_file}: {lrows} label rows for {rows} embedding rows")
        blocks = 2 if lflags & 1 else 1
        expected = lrows * 4 * blocks
        actual = len(lraw) - _LBL_HEADER.size
        if actual < expected:
            raise TruncatedFile(f"{lbl_file}: payload {actual} bytes, header promises {expected}")
        if actual > expected:
            raise DimMismatch(f"{lbl_file}: payload {actual} bytes, header promises {expected}")
        labels = np.frombuffer(lraw, dtype="<u4", count=lrows, offset=_LBL_HEADER.size)
        labels = labels.astype(np.int64)
        if lflags & 1:
            domain_ids = np.frombuffer(
                lraw, dtype="<u4", count=lrows, offset=_LBL_HEADER.size + lrows * 4
            ).astype(np.int64)

    return EmbeddingTable(
        data=data, labels=labels, domain_ids=domain_ids, normalized=bool(flags & 1)
    )


# --- manifest sidecar ---------------------------------------------------------

@dataclass(frozen=True)
class Manifest:
    """Human-readable sidecar describing an embedding table.

    ``prompt_ids`` maps each text-embedding row to a (prompt index,
    class index) pair; when present the pairs must cover the full
    prompt x class grid exactly once.  ``extra`` preserves any additional
    provenance keys found in the file.
    """

    class_names: list[str]
    domain_names: list[str] | None = None
    source_model: str = ""
    prompt_ids: list[tuple[int, int]] | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.prompt_ids is not None:
            object.__setattr__(
                self, "prompt_ids", [(int(p), int(c)) for p, c in self.prompt_ids]
            )
            self.grid_shape()

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def grid_shape(self) -> tuple[int, int]:
        """Return (num_prompts, num_classes) covered by ``prompt_ids``.

        Raises IncompleteGrid unless every (prompt, class) pair for the
        full grid appears exactly once.
        """
        if self.prompt_ids is None:
            raise IncompleteGrid("manifest has no prompt_ids grid")
        pairs = self.prompt_ids
        if not pairs:
            raise IncompleteGrid("prompt_ids is empty")
        num_prompts = max(p for p, _ in pairs) + 1
        num_classes = self.num_classes
        if len(pairs) != num_prompts * num_classes or len(set(pairs)) != len(pairs):
            raise IncompleteGrid(
                f"{len(pairs)} prompt_ids rows do not cover a "
                f"{num_prompts} x {num_classes} grid exactly once"
            )
        for p, c in pairs:
            if not (0 <= p < num_prompts and 0 <= c < num_classes):
                raise IncompleteGrid(f"prompt_ids pair ({p}, {c}) outside the grid")
        return num_prompts, num_classes

    def validate_labels(self, table: EmbeddingTable) -> None:
        """Check that every class id used by the table names a class."""
        if table.labels is not None and table.num_rows:
            top = int(table.labels.max())
            if top >= self.num_classes:
                raise InvariantViolation(
                    f"label {top} outside the {self.num_classes} manifest classes"
                )


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write the manifest as pretty-printed JSON next to the table files."""
    doc = dict(manifest.extra)
    doc["class_names"] = list(manifest.class_names)
    if manifest.domain_names is not None:
        doc["domain_names"] = list(manifest.domain_names)
    doc["source_model"] = manifest.source_model
    if manifest.prompt_ids is not None:
        doc["prompt_ids"] = [list(pair) for pair in manifest.prompt_ids]
    target = manifest_path(path) if not str(path).endswith(".json") else Path(path)
    try:
        target.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing {target}: {exc}") from exc


def load_manifest(path: str | Path) -> Manifest:
    target = Path(path)
    if target.suffix != ".json":
        target = manifest_path(path)
    doc = json.loads(target.read_text())
    if "class_names" not in doc or not doc["class_names"]:
        raise InvariantViolation(f"{target}: manifest must list class_names")
    known = {"class_names", "domain_names", "source_model", "prompt_ids"}
    extra = {k: v for k, v in doc.items() if k not in known}
    prompt_ids = doc.get("prompt_ids")
    if prompt_ids is not None:
        prompt_ids = [tuple(pair) for pair in prompt_ids]
    return Manifest(
        class_names=list(doc["class_names"]),
        domain_names=doc.get("domain_names"),
        source_model=doc.get("source_model", ""),
        prompt_ids=prompt_ids,
        extra=extra,
    )
