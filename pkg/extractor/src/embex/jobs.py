"""Extraction jobs: datasets or prompt grids in, embedding tables out.

Every job writes files conforming to the evaluation library's binary
format (``<stem>.cemb`` / ``<stem>.clbl`` / ``<stem>.manifest.json``);
the manifest records the encoder id, the preprocessing pipeline, and the
sha256 digests of the emitted binaries, so downstream reports are
traceable to exact inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import resolve_dataset
from .encoders import DualEncoder, load_encoder
from .errors import EmptyClassList, ExtractorError, MissingPlaceholder
from .formats import sha256_file, write_embeddings, write_labels, write_manifest
from .preprocess import IMAGE_SIZE, preprocess_batch

log = logging.getLogger("embex")

PREPROCESSING_NOTE = (
    f"bicubic resize (shorter side {IMAGE_SIZE}), center crop "
    f"{IMAGE_SIZE}x{IMAGE_SIZE}, channel normalization"
)

CLASS_NAME_VARIANTS = ("default", "curated", "first_synonym")


@dataclass
class ExtractJob:
    """Parameters of one extraction run.

    ``model`` has no default on purpose: reports must always be able to
    name the backbone that produced the rows.
    """

    dataset: str
    split: str
    model: str
    out_dir: str
    data_root: str = "."
    prompt_file: str | None = None
    class_names_file: str | None = None
    variant: str = "default"
    batch_size: int = 64
    device: str = "cpu"

    def __post_init__(self):
        if not self.model:
            raise ExtractorError("model id is required")
        if self.batch_size < 1:
            raise ExtractorError("batch_size must be at least 1")
        if self.variant not in CLASS_NAME_VARIANTS:
            raise ExtractorError(
                f"variant must be one of {CLASS_NAME_VARIANTS}, got {self.variant!r}"
            )


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1)
    if rows.size and norms.min() == 0.0:
        raise ExtractorError("encoder produced a zero embedding row")
    return (rows / norms[:, None]).astype(np.float32)


def extract_images(job: ExtractJob, encoder: DualEncoder | None = None) -> dict[str, Path]:
    """Embed every image of a dataset split, in dataset order.

    Returns the paths of the written .cemb/.clbl/manifest files.
    """
    view = resolve_dataset(job.dataset, job.split, job.data_root)
    if encoder is None:
        encoder = load_encoder(job.model, device=job.device)

    chunks: list[np.ndarray] = []
    labels: list[int] = []
    domains: list[int] = []
    batch_images: list = []
    for image, label, domain in view:
        batch_images.append(image)
        labels.append(label)
        if domain is not None:
            domains.append(domain)
        if len(batch_images) == job.batch_size:
            chunks.append(encoder.encode_images(preprocess_batch(batch_images)))
            batch_images = []
    if batch_images:
        chunks.append(encoder.encode_images(preprocess_batch(batch_images)))

    rows = _normalize_rows(np.concatenate(chunks) if chunks else np.zeros((0, encoder.dim)))
    if len(rows) != len(view):
        raise ExtractorError(f"{len(rows)} rows for {len(view)} images")
    log.info("%s/%s: %d images -> %d-dim rows", view.dataset, job.split, len(rows), rows.shape[1])

    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"{view.dataset}_{job.split}"
    cemb = write_embeddings(stem, rows, normalized=True)
    clbl = write_labels(
        stem,
        np.asarray(labels),
        np.asarray(domains) if domains else None,
    )
    manifest = write_manifest(
        stem,
        {
            "class_names": view.class_names,
            **({"domain_names": view.domain_names} if view.domain_names else {}),
            "source_model": encoder.name,
            "dataset": view.dataset,
            "split": job.split,
            "preprocessing": PREPROCESSING_NOTE,
            "num_rows": len(rows),
            "digests": {cemb.name: sha256_file(cemb), clbl.name: sha256_file(clbl)},
        },
    )
    return {"cemb": cemb, "clbl": clbl, "manifest": manifest}


def read_templates(path: str | Path) -> list[str]:
    """One prompt template per line, each with exactly one '{}'."""
    templates = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not templates:
        raise MissingPlaceholder(f"{path}: no templates")
    for t in templates:
        if t.count("{}") != 1:
            raise MissingPlaceholder(
                f"template {t!r} must contain exactly one '{{}}' placeholder"
            )
    return templates


def read_class_names(path: str | Path) -> list[str]:
    names = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not names:
        raise EmptyClassList(f"{path}: no class names")
    return names


def extract_texts(job: ExtractJob, encoder: DualEncoder | None = None) -> dict[str, Path]:
    """Embed the full prompt x class grid in template-major order."""
    if not job.prompt_file or not job.class_names_file:
        raise ExtractorError("text extraction needs prompt_file and class_names_file")
    templates = read_templates(job.prompt_file)
    names = read_class_names(job.class_names_file)
    if encoder is None:
        encoder = load_encoder(job.model, device=job.device)

    rendered = [t.replace("{}", name) for t in templates for name in names]
    pairs = [[p, c] for p in range(len(templates)) for c in range(len(names))]
    chunks = [
        encoder.encode_texts(rendered[i : i + job.batch_size])
        for i in range(0, len(rendered), job.batch_size)
    ]
    rows = _normalize_rows(np.concatenate(chunks))
    log.info(
        "%s texts: %d templates x %d classes -> %d rows",
        job.dataset, len(templates), len(names), len(rows),
    )

    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"{job.dataset}_texts"
    cemb = write_embeddings(stem, rows, normalized=True)
    clbl = write_labels(stem, np.asarray([c for _, c in pairs]))
    manifest = write_manifest(
        stem,
        {
            "class_names": names,
            "source_model": encoder.name,
            "prompt_ids": pairs,
            "templates": templates,
            "class_name_variant": job.variant,
            "digests": {cemb.name: sha256_file(cemb), clbl.name: sha256_file(clbl)},
        },
    )
    return {"cemb": cemb, "clbl": clbl, "manifest": manifest}
