"""Driving an evaluation through the command-line interface.

Writes a config file, invokes `cleval run` in a subprocess, and reads the
JSON report back.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from cleval import EmbeddingTable, Manifest, l2_normalize, load_report, save_manifest, save_table

workdir = Path(tempfile.mkdtemp(prefix="cleval-demo-"))
rng = np.random.default_rng(2)

num_classes, dim = 8, 16
protos = rng.normal(size=(num_classes, dim))
protos /= np.linalg.norm(protos, axis=1, keepdims=True)
save_table(l2_normalize(EmbeddingTable(data=protos.astype(np.float32))), workdir / "texts")
save_manifest(
    Manifest(
        class_names=[f"class{c}" for c in range(num_classes)],
        source_model="demo",
        prompt_ids=[(0, c) for c in range(num_classes)],
    ),
    workdir / "texts",
)
test_rows = np.repeat(protos, 25, axis=0) + 0.5 * rng.normal(size=(num_classes * 25, dim))
save_table(
    l2_normalize(
        EmbeddingTable(
            data=test_rows.astype(np.float32),
            labels=np.repeat(np.arange(num_classes), 25),
        )
    ),
    workdir / "test",
)

config = {
    "scenario": "class_incremental",
    "test_embeddings": "test.cemb",
    "text_embeddings": "texts.cemb",
    "report": "report.json",
    "steps": 4,
    "seed": 0,
}
(workdir / "run.json").write_text(json.dumps(config, indent=2))
print("config:")
print(json.dumps(config, indent=2))

cmd = [
    sys.executable, "-m", "cleval.cli",
    "run", "--config", str(workdir / "run.json"),
    "--emit-confusion-csv",
]
print("\n$", " ".join(cmd))
proc = subprocess.run(cmd, capture_output=True, text=True)
print(proc.stderr.rstrip())
print("exit code:", proc.returncode)

report = load_report(workdir / "report.json")
print("\nper-step accuracies:", [round(a, 4) for a in report.accuracies()])
print("summary:", {k: round(v, 4) for k, v in report.summary.items()})
print("confusion CSVs:", sorted(p.name for p in workdir.glob("*.csv")))
