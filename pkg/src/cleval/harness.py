"""Config-driven evaluation runs and their reports.

A run loads embedding tables, builds the scenario, restricts the
classifier head to the classes seen at each step, evaluates, and writes a
JSON report.  Reports are deterministic given the config and input files;
the wall-clock duration is the only volatile field.  The worker count is
an operational knob that never changes results, so it is not echoed.

Report schema (version 1)::

    report_version   int
    config           echo of the logical run configuration
    scenario_name    str
    num_steps        int
    steps            [{step, seen_class_count, accuracy,
                       top5_accuracy?, confusion}]
    summary          {"avg", "last", and for domain matrices also
                      "overall", "in_domain", "next_domain",
                      "backward", "forward"}
    accuracy_matrix  [[r_ij]] for domain-incremental runs, else null
    input_digests    {path: sha256}
    duration_seconds float
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import metrics, scenarios, zeroshot
from .errors import (
    ConfigInvalid,
    DimMismatch,
    InvariantViolation,
    IoFailure,
    MissingClassEmbedding,
)
from .store import (
    EmbeddingTable,
    embedding_path,
    labels_path,
    load_manifest,
    load_table,
    manifest_path,
)

log = logging.getLogger("cleval")

REPORT_VERSION = 1

POOLING_MODES = ("embedding", "decision", "decision_top_k")

SCENARIO_KINDS = (
    scenarios.CLASS_INCREMENTAL,
    scenarios.DOMAIN_INCREMENTAL,
    scenarios.TASK_FREE,
)


@dataclass
class RunConfig:
    """Everything a run needs; see README for the config file format."""

    scenario: str
    test_embeddings: str
    text_embeddings: str
    report: str
    manifest: str | None = None
    train_embeddings: str | None = None
    calibration_embeddings: str | None = None
    total_classes: int | None = None
    base_classes: int | None = None
    increment: int | None = None
    steps: int | None = None
    class_order_seed: int | None = None
    class_order_file: str | None = None
    num_microbatches: int | None = None
    sigma: float | None = None
    domain_order: list[int] | None = None
    pooling: str = "embedding"
    top_k: int | None = None
    temperature: float = 1.0
    seed: int = 0
    workers: int = 1
    emit_confusion_csv: bool = False
    include_top5: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.scenario not in SCENARIO_KINDS:
            raise ConfigInvalid(
                f"scenario must be one of {SCENARIO_KINDS}, got {self.scenario!r}"
            )
        if self.pooling not in POOLING_MODES:
            raise ConfigInvalid(
                f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}"
            )
        if (self.top_k is not None) != (self.pooling == "decision_top_k"):
            raise ConfigInvalid("top_k is required iff pooling is decision_top_k")
        if self.pooling == "decision_top_k" and not self.calibration_embeddings:
            raise ConfigInvalid("decision_top_k needs calibration_embeddings")
        if self.scenario == scenarios.TASK_FREE:
            if self.sigma is None or self.num_microbatches is None:
                raise ConfigInvalid("task-free runs need sigma and num_microbatches")
            if not self.train_embeddings:
                raise ConfigInvalid("task-free runs need train_embeddings")
        if self.scenario == scenarios.CLASS_INCREMENTAL:
            if self.steps is None and self.increment is None:
                raise ConfigInvalid("class-incremental runs need steps or increment")
        if self.temperature <= 0:
            raise ConfigInvalid("temperature must be positive")
        if self.workers < 1:
            raise ConfigInvalid("workers must be at least 1")
        if not self.report:
            raise ConfigInvalid("report path is required")

    # Operational knobs that do not affect results stay out of the echo.
    _VOLATILE = ("workers",)

    def echo(self) -> dict:
        doc = asdict(self)
        for key in self._VOLATILE:
            doc.pop(key, None)
        return doc

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | Path | None = None) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if base_dir is not None:
            for key in (
                "test_embeddings",
                "text_embeddings",
                "train_embeddings",
                "calibration_embeddings",
                "manifest",
                "class_order_file",
                "report",
            ):
                if doc.get(key):
                    doc[key] = str(Path(base_dir) / doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(doc, base_dir=path.parent)


@dataclass
class EvalReport:
    """Parsed form of the JSON report document."""

    config: dict
    scenario_name: str
    num_steps: int
    steps: list[dict]
    summary: dict[str, float]
    input_digests: dict[str, str]
    duration_seconds: float
    accuracy_matrix: list[list[float]] | None = None
    report_version: int = REPORT_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.report_version != REPORT_VERSION:
            raise InvariantViolation(
                f"report version {self.report_version}, expected {REPORT_VERSION}"
            )
        if len(self.steps) != self.num_steps:
            raise InvariantViolation(
                f"{len(self.steps)} step entries for num_steps={self.num_steps}"
            )
        for entry in self.steps:
            n = entry["seen_class_count"]
            conf = entry["confusion"]
            if len(conf) != n or any(len(row) != n for row in conf):
                raise InvariantViolation(
                    f"step {entry['step']}: confusion shape does not match "
                    f"{n} seen classes"
                )
            if not 0.0 <= entry["accuracy"] <= 1.0:
                raise InvariantViolation("step accuracy outside [0, 1]")

    def accuracies(self) -> list[float]:
        return [entry["accuracy"] for entry in self.steps]

    def to_dict(self) -> dict:
        return {
            "report_version": self.report_version,
            "config": self.config,
            "scenario_name": self.scenario_name,
            "num_steps": self.num_steps,
            "steps": self.steps,
            "summary": self.summary,
            "accuracy_matrix": self.accuracy_matrix,
            "input_digests": self.input_digests,
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        try:
            return cls(
                report_version=doc["report_version"],
                config=doc["config"],
                scenario_name=doc["scenario_name"],
                num_steps=doc["num_steps"],
                steps=doc["steps"],
                summary=doc["summary"],
                accuracy_matrix=doc.get("accuracy_matrix"),
                input_digests=doc["input_digests"],
                duration_seconds=doc["duration_seconds"],
            )
        except KeyError as exc:
            raise InvariantViolation(f"report is missing field {exc}") from exc


def emit_report(report: EvalReport, path: str | Path) -> None:
    """Write the report as canonical JSON (sorted keys, 2-space indent)."""
    report.validate()
    try:
        Path(path).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        )
    except OSError as exc:
        raise IoFailure(f"failed writing {path}: {exc}") from exc


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))


def reports_match(a: EvalReport, b: EvalReport) -> bool:
    """Equality over everything except the volatile duration field."""
    da, db = a.to_dict(), b.to_dict()
    da.pop("duration_seconds")
    db.pop("duration_seconds")
    return da == db


def _emit_confusion_csvs(report: EvalReport, seen_ids: list[list[int]], path) -> None:
    base = Path(path)
    for entry, ids in zip(report.steps, seen_ids):
        target = base.with_name(f"{base.stem}.confusion_step{entry['step']:03d}.csv")
        lines = [",".join(str(c) for c in ids)]
        lines += [",".join(str(v) for v in row) for row in entry["confusion"]]
        target.write_text("\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_inputs(paths: list[Path]) -> dict[str, str]:
    return {str(p): _sha256(p) for p in sorted(set(paths)) if p.exists()}


def _subset_rows(table: EmbeddingTable, mask: np.ndarray) -> EmbeddingTable:
    return EmbeddingTable(
        data=table.data[mask],
        labels=None if table.labels is None else table.labels[mask],
        domain_ids=None if table.domain_ids is None else table.domain_ids[mask],
        normalized=table.normalized,
    )


def _build_scenario(config: RunConfig, total_classes: int, train: EmbeddingTable | None):
    if config.scenario == scenarios.CLASS_INCREMENTAL:
        increment = config.increment
        if increment is None:
            if total_classes % config.steps:
                raise ConfigInvalid(
                    f"{total_classes} classes do not split into {config.steps} equal steps"
                )
            increment = total_classes // config.steps
        base = config.base_classes if config.base_classes is not None else increment
        order = None
        if config.class_order_file:
            order = scenarios.load_class_order(config.class_order_file)
        seed = config.class_order_seed if config.class_order_seed is not None else config.seed
        return scenarios.build_class_incremental(
            total_classes, base, increment, class_order_seed=seed, class_order=order
        )
    if config.scenario == scenarios.DOMAIN_INCREMENTAL:
        return scenarios.build_domain_incremental(
            total_classes, config.domain_order or []
        )
    if train is None or train.labels is None:
        raise ConfigInvalid("task-free runs need labeled train embeddings")
    return scenarios.build_gaussian_schedule(
        train.labels, config.num_microbatches, config.sigma, seed=config.seed
    )


def _build_head(config: RunConfig, text_table, manifest):
    """Returns (head, prompt_subset); subset is None for pooled heads."""
    if config.pooling == "embedding":
        head = zeroshot.build_head_embedding_pooling(
            text_table, manifest, temperature=config.temperature
        )
        return head, None
    head = zeroshot.build_head_per_prompt(
        text_table, manifest, temperature=config.temperature
    )
    if config.pooling == "decision":
        return head, None
    calibration = load_table(config.calibration_embeddings)
    subset = zeroshot.select_top_k_prompts(head, calibration, config.top_k)
    log.info("selected prompt subset %s", subset)
    return head, subset


def run(config: RunConfig) -> EvalReport:
    """Execute one evaluation run and write its report.

    Deterministic given the config (including seed) and the input files;
    rerunning produces a byte-identical report apart from the duration.
    """
    t0 = time.perf_counter()
    config.validate()

    test = load_table(config.test_embeddings)
    if test.labels is None:
        raise InvariantViolation("test embeddings have no labels file")
    text_path = config.text_embeddings
    text_table = load_table(text_path)
    manifest = load_manifest(config.manifest or manifest_path(text_path))
    if text_table.dim != test.dim:
        raise DimMismatch(
            f"text dim {text_table.dim} != image dim {test.dim}"
        )
    train = load_table(config.train_embeddings) if config.train_embeddings else None

    total_classes = config.total_classes or manifest.num_classes
    domain_order = config.domain_order
    if config.scenario == scenarios.DOMAIN_INCREMENTAL and not domain_order:
        if manifest.domain_names:
            domain_order = list(range(len(manifest.domain_names)))
        elif test.domain_ids is not None:
            domain_order = sorted(set(test.domain_ids.tolist()))
        else:
            raise ConfigInvalid(
                "domain-incremental runs need domain_order, manifest domain_names, "
                "or test domain ids"
            )
        config = RunConfig(**{**config.echo(), "workers": config.workers,
                              "domain_order": domain_order})

    scenario = _build_scenario(config, total_classes, train)
    head, subset = _build_head(config, text_table, manifest)

    final_seen = scenarios.seen_classes(scenario, scenario.num_steps - 1)
    missing = final_seen - set(head.class_ids)
    if missing:
        raise MissingClassEmbedding(
            f"no text prototype for classes {sorted(missing)[:10]}"
        )

    steps: list[dict] = []
    seen_ids_per_step: list[list[int]] = []
    matrix: list[list[float]] | None = None

    if scenario.kind == scenarios.DOMAIN_INCREMENTAL and test.domain_ids is not None:
        order = [t.domain_id for t in scenario.tasks]
        per_domain = {
            d: _subset_rows(test, test.domain_ids == d) for d in order
        }
        seen = scenarios.seen_classes(scenario, 0)
        matrix = []
        for i in range(scenario.num_steps):
            row = []
            for j, d in enumerate(order):
                acc_ij, conf_ij = zeroshot.evaluate_step(
                    head, per_domain[d], seen, prompt_subset=subset,
                    workers=config.workers,
                )
                row.append(acc_ij)
                if i == j:
                    acc, conf = acc_ij, conf_ij
            matrix.append(row)
            steps.append(_step_entry(config, head, per_domain[order[i]], seen,
                                     subset, i, acc, conf))
            seen_ids_per_step.append(sorted(seen))
            log.info("step %d: in-domain accuracy %.4f", i, acc)
    else:
        for t in range(scenario.num_steps):
            seen = scenarios.seen_classes(scenario, t)
            acc, conf = zeroshot.evaluate_step(
                head, test, seen, prompt_subset=subset, workers=config.workers
            )
            steps.append(_step_entry(config, head, test, seen, subset, t, acc, conf))
            seen_ids_per_step.append(sorted(seen))
            log.info("step %d: %d classes, accuracy %.4f", t, len(seen), acc)

    series = [entry["accuracy"] for entry in steps]
    summary = {
        "avg": metrics.avg_accuracy(series),
        "last": metrics.last_accuracy(series),
    }
    if matrix is not None and len(matrix) >= 2:
        summary.update(metrics.domain_metrics(matrix))

    input_paths = [embedding_path(config.test_embeddings), labels_path(config.test_embeddings)]
    input_paths += [embedding_path(text_path), labels_path(text_path)]
    input_paths += [Path(config.manifest or manifest_path(text_path))]
    for p in (config.train_embeddings, config.calibration_embeddings):
        if p:
            input_paths += [embedding_path(p), labels_path(p)]
    if config.class_order_file:
        input_paths.append(Path(config.class_order_file))

    report = EvalReport(
        config=config.echo(),
        scenario_name=scenario.config_name,
        num_steps=scenario.num_steps,
        steps=steps,
        summary=summary,
        accuracy_matrix=matrix,
        input_digests=_digest_inputs(input_paths),
        duration_seconds=round(time.perf_counter() - t0, 6),
    )
    emit_report(report, config.report)
    if config.emit_confusion_csv:
        _emit_confusion_csvs(report, seen_ids_per_step, config.report)
    log.info("report written to %s", config.report)
    return report


def _step_entry(config, head, table, seen, subset, step, acc, conf) -> dict:
    entry = {
        "step": step,
        "seen_class_count": len(seen),
        "accuracy": acc,
        "confusion": conf.tolist(),
    }
    if config.include_top5:
        entry["top5_accuracy"] = zeroshot.topk_accuracy(
            head, table, seen, k=5, prompt_subset=subset
        )
    return entry
