"""Why a frozen evaluator's final accuracy ignores the step count.

The same 100-class synthetic benchmark is split into 10, 20, and 50
incremental steps with the same class order.  Because the classifier never
updates, the final step always evaluates the identical head on the
identical test set, so the Last accuracy is bit-for-bit the same while the
Avg accuracy (mean over steps) shifts with the partition.
"""

import tempfile
from pathlib import Path

import numpy as np

from cleval import EmbeddingTable, Manifest, RunConfig, l2_normalize, run, save_manifest, save_table

workdir = Path(tempfile.mkdtemp(prefix="cleval-demo-"))
rng = np.random.default_rng(5)

# 100 Gaussian class clusters in 64 dims; class prototypes double as the
# single-prompt text embeddings.
num_classes, dim, per_class = 100, 64, 20
protos = rng.normal(size=(num_classes, dim))
protos /= np.linalg.norm(protos, axis=1, keepdims=True)

save_table(l2_normalize(EmbeddingTable(data=protos.astype(np.float32))), workdir / "texts")
save_manifest(
    Manifest(
        class_names=[f"class{c:03d}" for c in range(num_classes)],
        source_model="demo",
        prompt_ids=[(0, c) for c in range(num_classes)],
    ),
    workdir / "texts",
)

test_rows = np.repeat(protos, per_class, axis=0) + 0.5 * rng.normal(
    size=(num_classes * per_class, dim)
)
save_table(
    l2_normalize(
        EmbeddingTable(
            data=test_rows.astype(np.float32),
            labels=np.repeat(np.arange(num_classes), per_class),
        )
    ),
    workdir / "test",
)

print(f"{'steps':>6}  {'Avg':>8}  {'Last':>8}")
for steps in (10, 20, 50):
    report = run(
        RunConfig(
            scenario="class_incremental",
            test_embeddings=str(workdir / "test.cemb"),
            text_embeddings=str(workdir / "texts.cemb"),
            report=str(workdir / f"report{steps}.json"),
            steps=steps,
            class_order_seed=7,
        )
    )
    print(f"{steps:>6}  {report.summary['avg']:>8.4f}  {report.summary['last']:>8.4f}")

print("\nLast is identical because the final evaluation is the same computation;")
print("Avg differs because early steps see fewer classes (an easier problem).")
