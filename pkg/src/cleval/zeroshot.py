"""Text-prototype classification of image embeddings.

A classifier head holds one unit-norm prototype per class (pooled) or one
per (prompt, class) pair (unpooled).  Prediction scores an image embedding
by cosine similarity against the prototypes and applies a softmax; since
prototypes and query are unit vectors, cosine reduces to a dot product.

Two prompt-ensembling strategies are provided: embedding pooling averages
a class's per-prompt text embeddings into a single prototype before
scoring, while decision pooling scores each prompt separately and averages
the score vectors.

All score and probability arithmetic runs in double precision; accuracy
numbers are exact integer counts divided at the end.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatch,
    EmptyPromptSubset,
    EmptyTestSet,
    IncompleteGrid,
    InvariantViolation,
    KOutOfRange,
    MissingPlaceholder,
    UnseenLabelInHead,
    ZeroNormRow,
)
from .store import EmbeddingTable, Manifest

PROMPT_VARIANTS = ("default", "curated", "first_synonym")

# Rows are scored in fixed-size blocks so results never depend on how many
# workers the blocks are spread across.
_BLOCK_ROWS = 2048

_NORM_TOL = 1e-5


@dataclass(frozen=True)
class PromptSet:
    """Prompt templates plus the class names to substitute into them."""

    templates: tuple[str, ...]
    class_names: tuple[str, ...]
    variant: str = "default"

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if self.variant not in PROMPT_VARIANTS:
            raise InvariantViolation(f"unknown variant {self.variant!r}")
        if not self.templates:
            raise MissingPlaceholder("prompt set needs at least one template")
        for t in self.templates:
            if t.count("{}") != 1:
                raise MissingPlaceholder(
                    f"template {t!r} must contain exactly one '{{}}' placeholder"
                )
        if not self.class_names:
            raise InvariantViolation("class_names must be non-empty")
        if len(set(self.class_names)) != len(self.class_names):
            raise InvariantViolation("class_names must be unique")

    @property
    def num_templates(self) -> int:
        return len(self.templates)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def render_prompts(prompts: PromptSet) -> list[str]:
    """Fill every template with every class name, template-major order.

    Output row p * num_classes + c is template p rendered with class c;
    the class name is substituted verbatim.
    """
    return [
        template.replace("{}", name)
        for template in prompts.templates
        for name in prompts.class_names
    ]


def load_prompt_set(
    template_path, class_names_path, variant: str = "default"
) -> PromptSet:
    """Read a prompt set from files: one template / class name per line."""
    from pathlib import Path

    templates = [
        line for line in Path(template_path).read_text().splitlines() if line.strip()
    ]
    names = [
        line.strip()
        for line in Path(class_names_path).read_text().splitlines()
        if line.strip()
    ]
    return PromptSet(templates=tuple(templates), class_names=tuple(names), variant=variant)


@dataclass(frozen=True)
class ClassifierHead:
    """Unit-norm prototypes, either pooled [C, dim] or per-prompt [P, C, dim].

    Columns are kept in ascending class-id order; together with numpy's
    first-occurrence argmax this makes score ties resolve to the lowest
    class id on every platform.
    """

    prototypes: np.ndarray
    class_ids: tuple[int, ...]
    pooled: bool
    temperature: float = 1.0

    def __post_init__(self):
        protos = np.ascontiguousarray(self.prototypes, dtype=np.float64)
        object.__setattr__(self, "prototypes", protos)
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))
        expected_ndim = 2 if self.pooled else 3
        if protos.ndim != expected_ndim:
            raise InvariantViolation(
                f"{'pooled' if self.pooled else 'per-prompt'} head needs "
                f"{expected_ndim}-D prototypes, got shape {protos.shape}"
            )
        class_axis = 0 if self.pooled else 1
        if protos.shape[class_axis] != len(self.class_ids):
            raise InvariantViolation(
                f"{len(self.class_ids)} class ids for {protos.shape[class_axis]} columns"
            )
        if any(a >= b for a, b in zip(self.class_ids, self.class_ids[1:])):
            raise InvariantViolation("class_ids must be unique and ascending")
        if self.temperature <= 0:
            raise InvariantViolation("temperature must be positive")
        norms = np.linalg.norm(protos.reshape(-1, protos.shape[-1]), axis=1)
        if norms.size and np.abs(norms - 1.0).max() > _NORM_TOL:
            raise InvariantViolation("prototype rows must be unit-normalized")
        protos.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.prototypes.shape[-1]

    @property
    def num_classes(self) -> int:
        return len(self.class_ids)

    @property
    def num_prompts(self) -> int:
        return 1 if self.pooled else self.prototypes.shape[0]

    def restrict(self, class_ids) -> "ClassifierHead":
        """Keep only the given classes, columns sorted by ascending class id."""
        wanted = sorted(int(c) for c in set(class_ids))
        position = {c: i for i, c in enumerate(self.class_ids)}
        missing = [c for c in wanted if c not in position]
        if missing:
            raise UnseenLabelInHead(f"head has no prototype for classes {missing}")
        cols = [position[c] for c in wanted]
        protos = self.prototypes[cols] if self.pooled else self.prototypes[:, cols]
        return ClassifierHead(
            prototypes=protos,
            class_ids=tuple(wanted),
            pooled=self.pooled,
            temperature=self.temperature,
        )


@dataclass(frozen=True)
class Prediction:
    """Class probabilities for one image embedding."""

    probabilities: np.ndarray
    argmax_class: int
    scores: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-6:
            raise InvariantViolation("probabilities must be non-negative and sum to 1")


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroNormRow(0)
    return v / norm


def _grid(table: EmbeddingTable, manifest: Manifest) -> np.ndarray:
    """Arrange text-embedding rows into a [P, C, dim] grid via prompt_ids."""
    num_prompts, num_classes = manifest.grid_shape()
    if table.num_rows != num_prompts * num_classes:
        raise IncompleteGrid(
            f"{table.num_rows} text rows for a {num_prompts} x {num_classes} grid"
        )
    if not table.normalized:
        raise InvariantViolation("text embeddings must be unit-normalized")
    grid = np.empty((num_prompts, num_classes, table.dim), dtype=np.float64)
    pairs = np.asarray(manifest.prompt_ids)
    grid[pairs[:, 0], pairs[:, 1]] = table.data
    return grid


def _renormalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1)
    zero = np.argwhere(norms == 0.0)
    if zero.size:
        raise ZeroNormRow(int(zero[0][-1]))
    return rows / norms[..., None]


def build_head_embedding_pooling(
    text_table: EmbeddingTable, manifest: Manifest, temperature: float = 1.0
) -> ClassifierHead:
    """Average each class's per-prompt embeddings into a single prototype.

    The mean is renormalized so prototypes stay unit vectors and cosine
    remains a dot product.
    """
    grid = _grid(text_table, manifest)
    pooled = _renormalize(grid.mean(axis=0))
    return ClassifierHead(
        prototypes=pooled,
        class_ids=tuple(range(pooled.shape[0])),
        pooled=True,
        temperature=temperature,
    )


def build_head_per_prompt(
    text_table: EmbeddingTable, manifest: Manifest, temperature: float = 1.0
) -> ClassifierHead:
    """Keep one prototype per (prompt, class) pair, for decision pooling."""
    grid = _renormalize(_grid(text_table, manifest))
    return ClassifierHead(
        prototypes=grid,
        class_ids=tuple(range(grid.shape[1])),
        pooled=False,
        temperature=temperature,
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _argmax_lowest_class(scores: np.ndarray, class_ids: tuple[int, ...]) -> int:
    # class_ids ascend, so the first maximum is the lowest class id.
    return class_ids[int(np.argmax(scores))]


def _check_subset(head: ClassifierHead, prompt_subset) -> list[int]:
    if prompt_subset is None:
        return list(range(head.num_prompts))
    subset = sorted(int(p) for p in set(prompt_subset))
    if not subset:
        raise EmptyPromptSubset("prompt subset must be non-empty")
    if subset[0] < 0 or subset[-1] >= head.num_prompts:
        raise KOutOfRange(
            f"prompt indices {subset} outside 0..{head.num_prompts - 1}"
        )
    return subset


def predict(head: ClassifierHead, v: np.ndarray) -> Prediction:
    """Softmax over cosine similarities between v and the pooled prototypes."""
    if not head.pooled:
        raise InvariantViolation("predict requires a pooled head")
    v = np.asarray(v).reshape(-1)
    if v.shape[0] != head.dim:
        raise DimMismatch(f"embedding dim {v.shape[0]}, head dim {head.dim}")
    scores = head.prototypes @ _unit(v)
    probs = _softmax(head.temperature * scores)
    return Prediction(
        probabilities=probs,
        argmax_class=_argmax_lowest_class(scores, head.class_ids),
        scores=scores,
    )


def predict_decision_pooling(
    head: ClassifierHead, v: np.ndarray, prompt_subset=None
) -> Prediction:
    """Score each prompt separately, average the score vectors, then softmax."""
    if head.pooled:
        raise InvariantViolation("decision pooling requires a per-prompt head")
    subset = _check_subset(head, prompt_subset)
    v = np.asarray(v).reshape(-1)
    if v.shape[0] != head.dim:
        raise DimMismatch(f"embedding dim {v.shape[0]}, head dim {head.dim}")
    v_hat = _unit(v)
    scores = np.zeros(head.num_classes, dtype=np.float64)
    for p in subset:
        scores += head.prototypes[p] @ v_hat
    scores /= len(subset)
    probs = _softmax(head.temperature * scores)
    return Prediction(
        probabilities=probs,
        argmax_class=_argmax_lowest_class(scores, head.class_ids),
        scores=scores,
    )


# --- batch evaluation ---------------------------------------------------------

def _block_scores(head: ClassifierHead, block: np.ndarray, subset: list[int] | None) -> np.ndarray:
    """Scores [rows, C] for a block of already-normalized image embeddings."""
    if head.pooled:
        return block @ head.prototypes.T
    scores = np.zeros((block.shape[0], head.num_classes), dtype=np.float64)
    for p in subset:
        scores += block @ head.prototypes[p].T
    scores /= len(subset)
    return scores


def _normalized_rows(data: np.ndarray) -> np.ndarray:
    rows = data.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormRow(int(zero[0]))
    return rows / norms[:, None]


def evaluate_step(
    head: ClassifierHead,
    test: EmbeddingTable,
    seen: set[int],
    prompt_subset=None,
    workers: int = 1,
) -> tuple[float, np.ndarray]:
    """Top-1 accuracy and confusion matrix over the seen classes.

    The head is restricted to ``seen``; test rows with labels outside
    ``seen`` are dropped.  ``confusion[i][j]`` counts rows of true class
    ``sorted(seen)[i]`` predicted as ``sorted(seen)[j]``, so the accuracy
    equals trace(confusion) / sum(confusion) exactly.

    Rows are scored in fixed-size blocks; ``workers`` only spreads blocks
    across threads, so results are independent of the worker count.
    """
    if test.labels is None:
        raise InvariantViolation("test table has no labels")
    restricted = head.restrict(seen)
    subset = None if head.pooled else _check_subset(head, prompt_subset)
    if test.dim != head.dim:
        raise DimMismatch(f"test dim {test.dim}, head dim {head.dim}")

    order = restricted.class_ids  # ascending
    mask = np.isin(test.labels, order)
    if not mask.any():
        raise EmptyTestSet(f"no test rows with labels in {len(seen)} seen classes")
    rows = _normalized_rows(test.data[mask])
    labels = test.labels[mask]
    true_idx = np.searchsorted(order, labels)

    k = len(order)
    blocks = [
        (start, min(start + _BLOCK_ROWS, rows.shape[0]))
        for start in range(0, rows.shape[0], _BLOCK_ROWS)
    ]

    def confusion_for(block: tuple[int, int]) -> np.ndarray:
        start, stop = block
        scores = _block_scores(restricted, rows[start:stop], subset)
        pred_idx = np.argmax(scores, axis=1)  # first max = lowest class id
        conf = np.zeros((k, k), dtype=np.int64)
        np.add.at(conf, (true_idx[start:stop], pred_idx), 1)
        return conf

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(confusion_for, blocks))
    else:
        parts = [confusion_for(b) for b in blocks]
    confusion = np.sum(parts, axis=0, dtype=np.int64) if parts else np.zeros((k, k), np.int64)
    accuracy = float(np.trace(confusion) / confusion.sum())
    return accuracy, confusion


def topk_accuracy(
    head: ClassifierHead,
    test: EmbeddingTable,
    seen: set[int],
    k: int,
    prompt_subset=None,
) -> float:
    """Fraction of filtered test rows whose true class ranks in the top k."""
    if test.labels is None:
        raise InvariantViolation("test table has no labels")
    restricted = head.restrict(seen)
    subset = None if head.pooled else _check_subset(head, prompt_subset)
    order = restricted.class_ids
    mask = np.isin(test.labels, order)
    if not mask.any():
        raise EmptyTestSet(f"no test rows with labels in {len(seen)} seen classes")
    rows = _normalized_rows(test.data[mask])
    true_idx = np.searchsorted(order, test.labels[mask])
    hits = 0
    for start in range(0, rows.shape[0], _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, rows.shape[0])
        scores = _block_scores(restricted, rows[start:stop], subset)
        own = scores[np.arange(stop - start), true_idx[start:stop]]
        rank = (scores > own[:, None]).sum(axis=1)
        hits += int((rank < k).sum())
    return hits / rows.shape[0]


def select_top_k_prompts(
    head: ClassifierHead, calibration: EmbeddingTable, k: int
) -> list[int]:
    """Pick the k prompts with the best single-prompt top-1 accuracy.

    Accuracy is measured on the calibration table; ties go to the lower
    prompt index, so the selection is deterministic.
    """
    if head.pooled:
        raise InvariantViolation("prompt selection requires a per-prompt head")
    if not 1 <= k <= head.num_prompts:
        raise KOutOfRange(f"k={k} outside 1..{head.num_prompts}")
    if calibration.labels is None:
        raise InvariantViolation("calibration table has no labels")
    head_classes = set(head.class_ids)
    label_set = set(np.unique(calibration.labels).tolist())
    if not label_set <= head_classes:
        raise UnseenLabelInHead(
            f"calibration labels {sorted(label_set - head_classes)} not in head"
        )
    rows = _normalized_rows(calibration.data)
    true_idx = np.searchsorted(head.class_ids, calibration.labels)
    correct = []
    for p in range(head.num_prompts):
        pred = np.argmax(rows @ head.prototypes[p].T, axis=1)
        correct.append(int((pred == true_idx).sum()))
    ranked = sorted(range(head.num_prompts), key=lambda p: (-correct[p], p))
    return ranked[:k]
