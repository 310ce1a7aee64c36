"""Domain-incremental evaluation and the transfer metrics.

Three synthetic domains share one label set but get progressively noisier.
The harness fills the accuracy matrix r[i][j] (accuracy on domain j after
observing domain i) and derives the five transfer metrics from it.
"""

import tempfile
from pathlib import Path

import numpy as np

from cleval import EmbeddingTable, Manifest, RunConfig, domain_metrics, l2_normalize, run, save_manifest, save_table

workdir = Path(tempfile.mkdtemp(prefix="cleval-demo-"))
rng = np.random.default_rng(9)

num_classes, dim, per_domain = 10, 32, 60
protos = rng.normal(size=(num_classes, dim))
protos /= np.linalg.norm(protos, axis=1, keepdims=True)

save_table(l2_normalize(EmbeddingTable(data=protos.astype(np.float32))), workdir / "texts")
save_manifest(
    Manifest(
        class_names=[f"class{c}" for c in range(num_classes)],
        domain_names=["studio", "street", "night"],
        source_model="demo",
        prompt_ids=[(0, c) for c in range(num_classes)],
    ),
    workdir / "texts",
)

rows, labels, domains = [], [], []
for d, noise in enumerate((0.35, 0.55, 0.8)):  # later domains are harder
    for c in range(num_classes):
        for _ in range(per_domain // num_classes):
            rows.append(protos[c] + noise * rng.normal(size=dim))
            labels.append(c)
            domains.append(d)
save_table(
    l2_normalize(
        EmbeddingTable(
            data=np.array(rows, dtype=np.float32),
            labels=np.array(labels),
            domain_ids=np.array(domains),
        )
    ),
    workdir / "test",
)

report = run(
    RunConfig(
        scenario="domain_incremental",
        test_embeddings=str(workdir / "test.cemb"),
        text_embeddings=str(workdir / "texts.cemb"),
        report=str(workdir / "report.json"),
    )
)

matrix = np.array(report.accuracy_matrix)
print("accuracy matrix r[i][j] (row: after domain i, column: evaluated on j):")
for row in matrix:
    print("  ", "  ".join(f"{v:.3f}" for v in row))
print("\nrows are identical: the evaluator is frozen, so when it observed a")
print("domain never changes what it predicts.")

print("\ntransfer metrics:")
for key, value in domain_metrics(matrix).items():
    print(f"  {key:>12}: {value:.4f}")
