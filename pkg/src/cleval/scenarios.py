"""Ordered task sequences for continual-learning evaluation.

Three stream shapes are supported: class-incremental (disjoint class
subsets arriving step by step), domain-incremental (a fixed label set
whose input domain shifts), and task-free streams where samples drift in
via a Gaussian schedule over micro-batches.  Construction is pure and
deterministic given the seed, so identical configs serialize to identical
files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateDomain,
    EmptyLabels,
    IndivisibleSplit,
    InvariantViolation,
    StepOutOfRange,
    TooFewClasses,
)

CLASS_INCREMENTAL = "class_incremental"
DOMAIN_INCREMENTAL = "domain_incremental"
TASK_FREE = "task_free_microbatch"

_KINDS = (CLASS_INCREMENTAL, DOMAIN_INCREMENTAL, TASK_FREE)


@dataclass(frozen=True)
class TaskSpec:
    """One step of a continual stream.

    ``class_ids`` holds the classes introduced at this step for
    class-incremental streams, the full shared label set for
    domain-incremental ones, and the classes present in the micro-batch
    for task-free streams.
    """

    kind: str
    class_ids: frozenset[int]
    domain_id: int | None = None
    sample_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvariantViolation(f"unknown task kind {self.kind!r}")
        object.__setattr__(self, "class_ids", frozenset(int(c) for c in self.class_ids))
        if self.kind == CLASS_INCREMENTAL and not self.class_ids:
            raise InvariantViolation("class-incremental task with no classes")
        if (self.domain_id is not None) != (self.kind == DOMAIN_INCREMENTAL):
            raise InvariantViolation("domain_id is set iff kind is domain-incremental")
        if (self.sample_indices is not None) != (self.kind == TASK_FREE):
            raise InvariantViolation("sample_indices are set iff kind is task-free")
        if self.sample_indices is not None:
            object.__setattr__(
                self, "sample_indices", tuple(int(i) for i in self.sample_indices)
            )


@dataclass(frozen=True)
class Scenario:
    tasks: tuple[TaskSpec, ...]
    total_classes: int
    seed: int
    config_name: str

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise InvariantViolation("scenario needs at least one task")
        kinds = {t.kind for t in self.tasks}
        if len(kinds) != 1:
            raise InvariantViolation(f"mixed task kinds {kinds}")
        kind = self.tasks[0].kind
        if kind == CLASS_INCREMENTAL:
            self._check_partition()
        elif kind == DOMAIN_INCREMENTAL:
            shared = self.tasks[0].class_ids
            if any(t.class_ids != shared for t in self.tasks):
                raise InvariantViolation("domain-incremental tasks must share class_ids")
            domains = [t.domain_id for t in self.tasks]
            if len(set(domains)) != len(domains):
                raise DuplicateDomain(f"repeated domain ids in {domains}")
        else:
            seen: set[int] = set()
            for t in self.tasks:
                overlap = seen.intersection(t.sample_indices)
                if overlap:
                    raise InvariantViolation(
                        f"sample index {min(overlap)} appears in two micro-batches"
                    )
                seen.update(t.sample_indices)

    def _check_partition(self) -> None:
        union: set[int] = set()
        count = 0
        for t in self.tasks:
            union.update(t.class_ids)
            count += len(t.class_ids)
        if count != len(union):
            raise InvariantViolation("class subsets overlap across tasks")
        if union != set(range(self.total_classes)):
            raise InvariantViolation(
                f"class union covers {len(union)} of {self.total_classes} classes"
            )

    @property
    def kind(self) -> str:
        return self.tasks[0].kind

    @property
    def num_steps(self) -> int:
        return len(self.tasks)


def build_class_incremental(
    total_classes: int,
    base_classes: int,
    increment: int,
    class_order_seed: int,
    class_order: list[int] | None = None,
    config_name: str | None = None,
) -> Scenario:
    """Partition a seeded class permutation into base + increment chunks.

    Task 0 receives ``base_classes`` classes, every later task receives
    ``increment``.  Pass ``class_order`` (a permutation of all class ids)
    to replicate an externally published split; the seed is ignored for
    ordering in that case but still recorded.
    """
    if base_classes < 1 or total_classes < base_classes:
        raise TooFewClasses(
            f"base {base_classes} does not fit into {total_classes} classes"
        )
    if increment < 1 or (total_classes - base_classes) % increment != 0:
        raise IndivisibleSplit(
            f"{total_classes - base_classes} remaining classes not divisible "
            f"by increment {increment}"
        )
    if class_order is None:
        order = np.random.default_rng(class_order_seed).permutation(total_classes)
    else:
        order = np.asarray(class_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(total_classes)):
            raise InvariantViolation(
                f"class order must be a permutation of 0..{total_classes - 1}"
            )
    sizes = [base_classes] + [increment] * ((total_classes - base_classes) // increment)
    tasks = []
    cursor = 0
    for size in sizes:
        chunk = order[cursor : cursor + size]
        tasks.append(TaskSpec(kind=CLASS_INCREMENTAL, class_ids=frozenset(chunk.tolist())))
        cursor += size
    name = config_name or (
        f"class_incremental-{total_classes}c-b{base_classes}-i{increment}"
    )
    return Scenario(
        tasks=tuple(tasks),
        total_classes=total_classes,
        seed=class_order_seed,
        config_name=name,
    )


def build_domain_incremental(
    num_classes: int,
    domain_ids: list[int],
    config_name: str | None = None,
) -> Scenario:
    """One task per domain, in the given order, sharing the full label set."""
    if not domain_ids:
        raise DuplicateDomain("domain_ids must be non-empty")
    if len(set(domain_ids)) != len(domain_ids):
        raise DuplicateDomain(f"repeated domain ids in {list(domain_ids)}")
    shared = frozenset(range(num_classes))
    tasks = tuple(
        TaskSpec(kind=DOMAIN_INCREMENTAL, class_ids=shared, domain_id=int(d))
        for d in domain_ids
    )
    name = config_name or f"domain_incremental-{num_classes}c-{len(domain_ids)}d"
    return Scenario(tasks=tasks, total_classes=num_classes, seed=0, config_name=name)


def build_gaussian_schedule(
    labels,
    num_microbatches: int,
    sigma: float,
    seed: int,
    config_name: str | None = None,
) -> Scenario:
    """Assign samples to micro-batches via per-class Gaussian arrival times.

    Class ranks (sorted distinct labels) get mean positions spaced
    uniformly across [0, num_microbatches); each sample draws an arrival
    from N(mean, sigma), which is clamped to the batch range and rounded.
    Clamping rather than resampling keeps the census exact and the
    construction deterministic.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise EmptyLabels("no samples to schedule")
    if num_microbatches < 1:
        raise InvariantViolation("num_microbatches must be at least 1")
    if sigma <= 0:
        raise InvariantViolation("sigma must be positive")

    classes = np.unique(labels)
    means = {
        int(c): rank * num_microbatches / len(classes)
        for rank, c in enumerate(classes)
    }
    rng = np.random.default_rng(seed)
    draws = rng.normal(
        loc=np.array([means[int(c)] for c in labels]), scale=float(sigma)
    )
    batches = np.rint(np.clip(draws, 0, num_microbatches - 1)).astype(np.int64)

    tasks = []
    for b in range(num_microbatches):
        idx = np.where(batches == b)[0]
        tasks.append(
            TaskSpec(
                kind=TASK_FREE,
                class_ids=frozenset(np.unique(labels[idx]).tolist()),
                sample_indices=tuple(idx.tolist()),
            )
        )
    name = config_name or f"gaussian-{len(classes)}c-{num_microbatches}mb-s{sigma:g}"
    return Scenario(
        tasks=tuple(tasks),
        total_classes=int(labels.max()) + 1,
        seed=seed,
        config_name=name,
    )


def seen_classes(scenario: Scenario, step: int) -> set[int]:
    """Class ids under evaluation after observing tasks 0..step.

    Class-incremental streams accumulate; domain-incremental and
    task-free streams expose the full label set from the start.
    """
    if not 0 <= step < scenario.num_steps:
        raise StepOutOfRange(f"step {step} outside 0..{scenario.num_steps - 1}")
    if scenario.kind == CLASS_INCREMENTAL:
        out: set[int] = set()
        for t in scenario.tasks[: step + 1]:
            out.update(t.class_ids)
        return out
    out = set()
    for t in scenario.tasks:
        out.update(t.class_ids)
    return out


# --- serialization ----------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    tasks = []
    for t in scenario.tasks:
        entry: dict = {"kind": t.kind, "class_ids": sorted(t.class_ids)}
        if t.domain_id is not None:
            entry["domain_id"] = t.domain_id
        if t.sample_indices is not None:
            entry["sample_indices"] = sorted(t.sample_indices)
        tasks.append(entry)
    return {
        "config_name": scenario.config_name,
        "seed": scenario.seed,
        "total_classes": scenario.total_classes,
        "tasks": tasks,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    tasks = tuple(
        TaskSpec(
            kind=entry["kind"],
            class_ids=frozenset(entry["class_ids"]),
            domain_id=entry.get("domain_id"),
            sample_indices=(
                tuple(entry["sample_indices"]) if "sample_indices" in entry else None
            ),
        )
        for entry in doc["tasks"]
    )
    return Scenario(
        tasks=tasks,
        total_classes=doc["total_classes"],
        seed=doc["seed"],
        config_name=doc["config_name"],
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Serialize deterministically: sorted keys, sorted id lists."""
    doc = scenario_to_dict(scenario)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def load_class_order(path: str | Path) -> list[int]:
    """Read a class-order override file: one class id per line."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            out.append(int(line))
    return out
