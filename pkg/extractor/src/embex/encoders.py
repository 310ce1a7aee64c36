"""Dual-encoder backends.

A backend maps preprocessed image batches and raw text strings to
embedding rows of a common dimension.  Two schemes are supported:

``hf:<model name>``
    A pretrained vision-language model loaded through ``transformers``
    (e.g. ``hf:openai/clip-vit-base-patch16``).  torch and transformers
    are imported lazily so the rest of the package works without them.

``stub:<dim>``
    A deterministic content-hash encoder for pipeline validation: every
    distinct input maps to a fixed pseudo-random unit vector.  It has no
    semantics and exists so file layout, alignment, and determinism can
    be exercised without model weights.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np

from .errors import ModelLoadFailure


class DualEncoder(Protocol):
    name: str
    dim: int

    def encode_images(self, batch: np.ndarray) -> np.ndarray: ...

    def encode_texts(self, texts: list[str]) -> np.ndarray: ...


def _hash_vector(payload: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    row = np.random.default_rng(seed).normal(size=dim)
    return row / np.linalg.norm(row)


class StubEncoder:
    """Content-hash encoder; identical inputs give identical rows."""

    def __init__(self, dim: int):
        if dim < 2:
            raise ModelLoadFailure(f"stub dim must be >= 2, got {dim}")
        self.dim = dim
        self.name = f"stub:{dim}"

    def encode_images(self, batch: np.ndarray) -> np.ndarray:
        batch = np.ascontiguousarray(batch, dtype=np.float32)
        return np.stack([_hash_vector(image.tobytes(), self.dim) for image in batch])

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([_hash_vector(t.encode("utf-8"), self.dim) for t in texts])


class HFClipEncoder:
    """Frozen CLIP-style model from the transformers hub."""

    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoTokenizer, CLIPModel
        except ImportError as exc:
            raise ModelLoadFailure(
                f"hf backend needs torch and transformers: {exc}"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_name).to(device).eval()
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadFailure(f"cannot load {model_name!r}: {exc}") from exc
        self._torch = torch
        self._device = device
        self.name = f"hf:{model_name}"
        self.dim = int(self._model.config.projection_dim)

    def encode_images(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            pixels = torch.from_numpy(np.ascontiguousarray(batch, dtype=np.float32))
            features = self._model.get_image_features(pixel_values=pixels.to(self._device))
        return features.cpu().numpy().astype(np.float64)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        tokens = self._tokenizer(
            list(texts), padding=True, truncation=True, return_tensors="pt"
        )
        with torch.no_grad():
            features = self._model.get_text_features(
                **{k: v.to(self._device) for k, v in tokens.items()}
            )
        return features.cpu().numpy().astype(np.float64)


def load_encoder(model_id: str, device: str = "cpu") -> DualEncoder:
    """Resolve a model id; there is deliberately no default backbone."""
    if model_id.startswith("stub:"):
        try:
            dim = int(model_id.split(":", 1)[1])
        except ValueError as exc:
            raise ModelLoadFailure(f"bad stub model id {model_id!r}") from exc
        return StubEncoder(dim)
    if model_id.startswith("hf:"):
        return HFClipEncoder(model_id.split(":", 1)[1], device=device)
    raise ModelLoadFailure(
        f"unknown model id {model_id!r}; expected 'hf:<name>' or 'stub:<dim>'"
    )
