"""Loaders for the IDX (MNIST) and comma-separated (IRIS) formats, plus
stratified splitting."""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

IRIS_SPECIES = ("setosa", "versicolor", "virginica")


class DataError(ValueError):
    pass


@dataclass
class LabeledSet:
    samples: list[tuple[Any, int]]
    class_count: int
    # "features" payloads are min-max normalized by split(); others untouched
    kind: str = "features"

    def __post_init__(self) -> None:
        if not self.samples:
            raise DataError("empty dataset")
        for _, label in self.samples:
            if not 0 <= label < self.class_count:
                raise DataError(f"label {label} outside 0..{self.class_count - 1}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([y for _, y in self.samples], dtype=np.int64)

    def filter(self, classes: Sequence[int]) -> "LabeledSet":
        """Keep the given labels, renumbered 0..len(classes)-1 in that order."""
        remap = {c: i for i, c in enumerate(classes)}
        kept = [(x, remap[y]) for x, y in self.samples if y in remap]
        return LabeledSet(kept, len(classes), self.kind)

    def head(self, n: int) -> "LabeledSet":
        return LabeledSet(self.samples[:n], self.class_count, self.kind)


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path: Path, magic: int, dims: int) -> np.ndarray:
    with _open(path) as f:
        blob = f.read()
    if len(blob) < 4:
        raise DataError(f"{path}: truncated header")
    (found,) = struct.unpack(">I", blob[:4])
    if found != magic:
        raise DataError(f"{path}: bad magic 0x{found:08X}, expected 0x{magic:08X}")
    header = 4 + 4 * dims
    if len(blob) < header:
        raise DataError(f"{path}: truncated header")
    shape = struct.unpack(f">{dims}I", blob[4:header])
    size = int(np.prod(shape))
    if len(blob) - header < size:
        raise DataError(f"{path}: truncated payload ({len(blob) - header} of {size} bytes)")
    return np.frombuffer(blob, dtype=np.uint8, count=size, offset=header).reshape(shape)


def load_idx(images_path: str | Path, labels_path: str | Path) -> LabeledSet:
    """Pair 28x28 images with labels.  ``.gz`` files are decompressed."""
    images = _read_idx(Path(images_path), IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(Path(labels_path), IDX_LABELS_MAGIC, 1)
    if len(images) != len(labels):
        raise DataError(f"count mismatch: {len(images)} images, {len(labels)} labels")
    if images.shape[1:] != (28, 28):
        raise DataError(f"expected 28x28 images, got {images.shape[1:]}")
    if len(images) == 0:
        raise DataError("empty dataset")
    return LabeledSet([(img, int(y)) for img, y in zip(images, labels)],
                      int(labels.max()) + 1, kind="image")


def _species_label(name: str) -> int:
    key = name.strip().lower()
    if key.startswith("iris-"):
        key = key[5:]
    try:
        return IRIS_SPECIES.index(key)
    except ValueError:
        raise DataError(f"unknown species {name!r}") from None


def load_iris_csv(path: str | Path) -> LabeledSet:
    """Read UCI-style rows ``sepal_l,sepal_w,petal_l,petal_w,species``.

    Petal width is dropped; features are returned raw (``split`` normalizes).
    """
    samples = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), 1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise DataError(f"line {lineno}: expected 5 columns, got {len(row)}")
            try:
                feats = np.array([float(c) for c in row[:3]])
                float(row[3])
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric field") from None
            samples.append((feats, _species_label(row[4])))
    if not samples:
        raise DataError("empty dataset")
    return LabeledSet(samples, len(IRIS_SPECIES), kind="features")


def xor_set() -> LabeledSet:
    return LabeledSet([((a, b), a ^ b) for a in (0, 1) for b in (0, 1)], 2, kind="bits")


def split(data: LabeledSet, test_fraction: float, seed: int) -> tuple[LabeledSet, LabeledSet]:
    """Stratified, seeded split.  Feature payloads are min-max scaled with
    train-split statistics; test values outside the train range are clipped."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    labels = data.labels
    train_idx, test_idx = [], []
    for c in range(data.class_count):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        if len(members) < 2:
            raise DataError(f"class {c} has fewer than 2 samples")
        members = rng.permutation(members)
        n_test = min(max(1, int(round(len(members) * test_fraction))), len(members) - 1)
        test_idx.extend(members[:n_test])
        train_idx.extend(members[n_test:])
    train_idx = rng.permutation(np.array(train_idx))
    test_idx = rng.permutation(np.array(test_idx))
    train = [data.samples[i] for i in train_idx]
    test = [data.samples[i] for i in test_idx]

    if data.kind == "features":
        feats = np.stack([x for x, _ in train]).astype(float)
        lo, hi = feats.min(axis=0), feats.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)

        def scale(x):
            return np.clip((np.asarray(x, dtype=float) - lo) / span, 0.0, 1.0)

        train = [(scale(x), y) for x, y in train]
        test = [(scale(x), y) for x, y in test]
    return (LabeledSet(train, data.class_count, data.kind),
            LabeledSet(test, data.class_count, data.kind))
