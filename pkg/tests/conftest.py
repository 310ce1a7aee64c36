from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cleval.store import (
    EmbeddingTable,
    Manifest,
    l2_normalize,
    save_manifest,
    save_table,
)

# Criterion descriptions printed by the acceptance summary hook.
ACCEPTANCE_LABELS = {
    "test_p1": "P1 scenario partition suite",
    "test_p2": "P2 prediction formula oracle",
    "test_p3": "P3 pooling coincidence",
    "test_p4": "P4 metric oracle",
    "test_p5": "P5 frozen-model step invariance",
    "test_p6": "P6 determinism across workers",
}


def random_table(rng, rows, dim, num_classes=None, normalized=False, domains=None):
    """Build a random EmbeddingTable for tests."""
    data = rng.normal(size=(rows, dim)).astype(np.float32)
    labels = None
    if num_classes is not None:
        labels = rng.integers(0, num_classes, size=rows)
    domain_ids = None
    if domains is not None:
        domain_ids = rng.integers(0, domains, size=rows)
    table = EmbeddingTable(data=data, labels=labels, domain_ids=domain_ids)
    if normalized:
        table = l2_normalize(table)
    return table


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_synthetic_dataset(
    dirpath,
    rng,
    num_classes=10,
    dim=16,
    per_class=10,
    noise=0.2,
    num_prompts=1,
    num_domains=None,
    with_train=False,
    with_calibration=False,
):
    """Gaussian class clusters plus matching text prototypes, saved to disk.

    Each class gets a random unit prototype; image rows are noisy copies of
    their class prototype.  With ``num_domains`` the test rows are tagged
    round-robin and later domains get noisier (so per-domain accuracies
    differ).  Returns the paths the harness config needs.
    """
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    protos = rng.normal(size=(num_classes, dim))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    rows = []
    pairs = []
    for p in range(num_prompts):
        jitter = 0.0 if num_prompts == 1 else 0.15 * rng.normal(size=(num_classes, dim))
        rows.append(protos + jitter)
        pairs += [(p, c) for c in range(num_classes)]
    text = l2_normalize(
        EmbeddingTable(data=np.vstack(rows).astype(np.float32))
    )
    save_table(text, dirpath / "texts")
    manifest = Manifest(
        class_names=[f"class{c:03d}" for c in range(num_classes)],
        domain_names=(
            None if num_domains is None else [f"domain{d}" for d in range(num_domains)]
        ),
        source_model="synthetic",
        prompt_ids=pairs,
    )
    save_manifest(manifest, dirpath / "texts")

    def image_split(split_rng, scale=1.0):
        data, labels, domains = [], [], []
        for c in range(num_classes):
            for i in range(per_class):
                d = i % num_domains if num_domains else None
                level = noise * scale * (1.0 + (0.75 * d if d else 0.0))
                data.append(protos[c] + level * split_rng.normal(size=dim))
                labels.append(c)
                if d is not None:
                    domains.append(d)
        return l2_normalize(
            EmbeddingTable(
                data=np.array(data, dtype=np.float32),
                labels=np.array(labels),
                domain_ids=np.array(domains) if domains else None,
            )
        )

    save_table(image_split(rng), dirpath / "test")
    paths = {
        "test": dirpath / "test.cemb",
        "texts": dirpath / "texts.cemb",
        "manifest": dirpath / "texts.manifest.json",
    }
    if with_train:
        save_table(image_split(rng), dirpath / "train")
        paths["train"] = dirpath / "train.cemb"
    if with_calibration:
        save_table(image_split(rng), dirpath / "calibration")
        paths["calibration"] = dirpath / "calibration.cemb"
    return paths


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            for prefix, label in ACCEPTANCE_LABELS.items():
                if name.startswith(prefix):
                    status = "PASS" if outcome == "passed" else "FAIL"
                    lines.append((prefix, f"{label}: {status}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(set(lines)):
            terminalreporter.write_line(line)
