from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def make_folder_dataset(
    root,
    num_classes=3,
    per_class=4,
    domains=None,
    splits=("test",),
    duplicate_first=False,
):
    """Folder-per-class (optionally per-domain) dataset of small PNGs.

    Image content is deterministic per (split, domain, class, index).  With
    ``duplicate_first`` the first two images of class 0 are byte-identical.
    """
    root = Path(root)
    for split in splits:
        base = root / split
        domain_names = domains or [None]
        for d, domain in enumerate(domain_names):
            for c in range(num_classes):
                folder = base / (f"{domain}/class_{c:02d}" if domain else f"class_{c:02d}")
                folder.mkdir(parents=True, exist_ok=True)
                for i in range(per_class):
                    color = (
                        (40 * c + 10 * i) % 256,
                        (90 + 30 * d) % 256,
                        (5 + 50 * i) % 256,
                    )
                    if duplicate_first and c == 0 and i == 1:
                        color = (0, 90 + 30 * d, 5)  # same as i == 0
                    if duplicate_first and c == 0 and i == 0:
                        color = (0, 90 + 30 * d, 5)
                    image = Image.new("RGB", (40, 28), color)
                    image.save(folder / f"img_{i:03d}.png")
    return root


def make_cifar100_files(root, rows_per_split=12):
    """Minimal cifar-100-python directory with random pixel data."""
    base = Path(root) / "cifar-100-python"
    base.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    names = [f"name{i:03d}".encode() for i in range(100)]
    with open(base / "meta", "wb") as fh:
        pickle.dump({b"fine_label_names": names}, fh)
    for split in ("train", "test"):
        data = rng.integers(0, 256, size=(rows_per_split, 3072), dtype=np.uint8)
        labels = rng.integers(0, 100, size=rows_per_split).tolist()
        with open(base / split, "wb") as fh:
            pickle.dump({b"data": data, b"fine_labels": labels}, fh)
    return Path(root)


def write_prompt_files(tmp_path, templates=("a photo of a {}.",), names=("ant", "bee", "cat")):
    prompts = tmp_path / "prompts.txt"
    prompts.write_text("\n".join(templates) + "\n")
    class_names = tmp_path / "classes.txt"
    class_names.write_text("\n".join(names) + "\n")
    return prompts, class_names
