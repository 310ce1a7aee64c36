"""Embedding tables and the binary file format.

Creates a small table, saves it, inspects the raw bytes, and reloads it
bit-exactly.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from cleval import EmbeddingTable, Manifest, l2_normalize, load_table, save_manifest, save_table

workdir = Path(tempfile.mkdtemp(prefix="cleval-demo-"))

# A 4-row table of 8-dimensional embeddings with class labels 0..3.
rng = np.random.default_rng(0)
table = EmbeddingTable(
    data=rng.normal(size=(4, 8)).astype(np.float32),
    labels=np.arange(4),
)
print(f"table: {table.num_rows} rows x {table.dim} dims, normalized={table.normalized}")

# Rows must be unit vectors before classification; cosine similarity then
# reduces to a dot product.
table = l2_normalize(table)
print("row norms after normalization:", np.linalg.norm(table.data, axis=1))

save_table(table, workdir / "demo")
save_manifest(
    Manifest(class_names=["ant", "bee", "cat", "dog"], source_model="demo"),
    workdir / "demo",
)
print("\nfiles written:")
for f in sorted(workdir.iterdir()):
    print(f"  {f.name}  ({f.stat().st_size} bytes)")

# The .cemb header is 24 bytes: magic, version, rows, dim, flags.
raw = (workdir / "demo.cemb").read_bytes()
magic, version, rows, dim, flags = struct.unpack("<4sIQII", raw[:24])
print(f"\nheader: magic={magic} version={version} rows={rows} dim={dim} flags={flags:#x}")

# Loading returns the exact same float32 payload.
reloaded = load_table(workdir / "demo")
print("bit-identical after round trip:", np.array_equal(table.data, reloaded.data))
