"""Local dataset resolution.

Nothing is ever downloaded: a dataset/split either exists under the data
root in one of the supported layouts or extraction fails with
DatasetMissing.

Layouts:

* ``cifar100`` — the original python pickle batches under
  ``<root>/cifar-100-python/{train,test,meta}``.
* ``imagenet100``, ``imagenet1k``, ``tinyimagenet`` — folder-per-class:
  ``<root>/<dataset>/<split>/<class>/*.jpg`` (class folders sorted, the
  sorted position is the class id).
* ``core50``, ``clear10``, ``clear100`` — folder-per-domain-per-class:
  ``<root>/<dataset>/<split>/<domain>/<class>/*.jpg``; domain folders in
  sorted order define the domain ids.
* ``folder:<path>`` — any ad-hoc directory in one of the two folder
  layouts above (domains are detected by directory depth); intended for
  smoke tests and local experiments.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetMissing

FLAT_DATASETS = ("imagenet100", "imagenet1k", "tinyimagenet")
DOMAIN_DATASETS = ("core50", "clear10", "clear100")
DATASETS = ("cifar100",) + FLAT_DATASETS + DOMAIN_DATASETS
SPLITS = ("train", "test")

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".webp"}


@dataclass
class DatasetView:
    """Lazily-opened image records in a fixed, reproducible order."""

    dataset: str
    split: str
    class_names: list[str]
    domain_names: list[str] | None
    samples: list[tuple[object, int, int | None]]  # (source, class id, domain id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        for source, label, domain in self.samples:
            if isinstance(source, np.ndarray):
                yield Image.fromarray(source), label, domain
            else:
                with Image.open(source) as image:
                    yield image.convert("RGB"), label, domain


def _load_cifar100(root: Path, split: str) -> DatasetView:
    base = root / "cifar-100-python"
    batch = base / ("train" if split == "train" else "test")
    meta = base / "meta"
    if not batch.exists() or not meta.exists():
        raise DatasetMissing(f"cifar100 {split}: expected {batch} and {meta}")
    with open(batch, "rb") as fh:
        payload = pickle.load(fh, encoding="bytes")
    with open(meta, "rb") as fh:
        names = pickle.load(fh, encoding="bytes")
    class_names = [n.decode("utf-8") for n in names[b"fine_label_names"]]
    data = np.asarray(payload[b"data"], dtype=np.uint8).reshape(-1, 3, 32, 32)
    data = data.transpose(0, 2, 3, 1)  # NCHW -> NHWC for PIL
    labels = payload[b"fine_labels"]
    samples = [(data[i], int(labels[i]), None) for i in range(len(labels))]
    return DatasetView("cifar100", split, class_names, None, samples)


def _image_files(folder: Path) -> list[Path]:
    return sorted(
        p for p in folder.iterdir()
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    )


def _class_folders(base: Path) -> list[Path]:
    return sorted(p for p in base.iterdir() if p.is_dir())


def _load_flat_folder(name: str, base: Path, split: str) -> DatasetView:
    classes = _class_folders(base)
    if not classes:
        raise DatasetMissing(f"{name} {split}: no class folders under {base}")
    samples = []
    for class_id, folder in enumerate(classes):
        for path in _image_files(folder):
            samples.append((path, class_id, None))
    if not samples:
        raise DatasetMissing(f"{name} {split}: class folders under {base} are empty")
    return DatasetView(name, split, [p.name for p in classes], None, samples)


def _load_domain_folder(name: str, base: Path, split: str) -> DatasetView:
    domains = _class_folders(base)
    if not domains:
        raise DatasetMissing(f"{name} {split}: no domain folders under {base}")
    class_names: list[str] = sorted(
        {c.name for d in domains for c in _class_folders(d)}
    )
    if not class_names:
        raise DatasetMissing(f"{name} {split}: no class folders under {base}")
    class_id = {c: i for i, c in enumerate(class_names)}
    samples = []
    for domain_idx, domain in enumerate(domains):
        for folder in _class_folders(domain):
            for path in _image_files(folder):
                samples.append((path, class_id[folder.name], domain_idx))
    if not samples:
        raise DatasetMissing(f"{name} {split}: no images under {base}")
    return DatasetView(name, split, class_names, [d.name for d in domains], samples)


def _has_domain_layout(base: Path) -> bool:
    # Two directory levels below the split folder means domain/class.
    for level1 in _class_folders(base):
        for level2 in level1.iterdir():
            if level2.is_dir():
                return True
        return False
    return False


def resolve_dataset(dataset: str, split: str, root: str | Path) -> DatasetView:
    if split not in SPLITS:
        raise DatasetMissing(f"unknown split {split!r}; expected one of {SPLITS}")
    root = Path(root)
    if dataset.startswith("folder:"):
        base = Path(dataset.split(":", 1)[1]) / split
        if not base.is_dir():
            raise DatasetMissing(f"folder dataset: {base} is not a directory")
        name = base.parent.name
        if _has_domain_layout(base):
            return _load_domain_folder(name, base, split)
        return _load_flat_folder(name, base, split)
    if dataset == "cifar100":
        return _load_cifar100(root, split)
    if dataset in FLAT_DATASETS:
        base = root / dataset / split
        if not base.is_dir():
            raise DatasetMissing(f"{dataset} {split}: {base} is not a directory")
        return _load_flat_folder(dataset, base, split)
    if dataset in DOMAIN_DATASETS:
        base = root / dataset / split
        if not base.is_dir():
            raise DatasetMissing(f"{dataset} {split}: {base} is not a directory")
        return _load_domain_folder(dataset, base, split)
    raise DatasetMissing(
        f"unknown dataset {dataset!r}; expected one of {DATASETS} or 'folder:<path>'"
    )
