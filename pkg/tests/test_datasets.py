import gzip
import struct

import numpy as np
import pytest

from rsnn_golden.datasets import DataError, LabeledSet, load_idx, load_iris_csv, split, xor_set


def _write_idx(tmp_path, n_images, n_labels=None, magic=0x803, payload_images=None):
    n_labels = n_images if n_labels is None else n_labels
    img = tmp_path / "img.idx"
    lab = tmp_path / "lab.idx"
    pixels = bytes(784 * n_images) if payload_images is None else payload_images
    img.write_bytes(struct.pack(">IIII", magic, n_images, 28, 28) + pixels)
    lab.write_bytes(struct.pack(">II", 0x801, n_labels) + bytes([2] * n_labels))
    return img, lab


def test_idx_single_image(tmp_path):
    data = load_idx(*_write_idx(tmp_path, 1))
    assert len(data) == 1
    image, label = data.samples[0]
    assert image.shape == (28, 28) and not image.any() and label == 2


def test_idx_errors(tmp_path):
    with pytest.raises(DataError, match="bad magic"):
        load_idx(*_write_idx(tmp_path, 1, magic=0x802))
    with pytest.raises(DataError, match="truncated"):
        load_idx(*_write_idx(tmp_path, 2, payload_images=bytes(784)))
    with pytest.raises(DataError, match="count mismatch"):
        load_idx(*_write_idx(tmp_path, 1, n_labels=2))


def test_idx_real_subset(data_dir):
    data = load_idx(data_dir / "mnist5k-images-idx3-ubyte.gz", data_dir / "mnist5k-labels-idx1-ubyte.gz")
    assert len(data) == 5000 and data.class_count == 10
    three = data.filter([0, 1, 2])
    assert len(three) == 1500 and np.bincount(three.labels).tolist() == [500] * 3
    binary = data.filter([0, 1])
    assert binary.class_count == 2 and len(binary) == 1000


def test_iris_parse(tmp_path):
    p = tmp_path / "iris.csv"
    p.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n6.3,3.3,6.0,2.5,virginica\n")
    data = load_iris_csv(p)
    np.testing.assert_allclose(data.samples[0][0], [5.1, 3.5, 1.4])
    assert [y for _, y in data.samples] == [0, 2]


@pytest.mark.parametrize("text,match", [
    ("x,3.5,1.4,0.2,Iris-setosa\n", "non-numeric"),
    ("", "empty dataset"),
    ("5.1,3.5,1.4,Iris-setosa\n", "5 columns"),
    ("5.1,3.5,1.4,0.2,Iris-germanica\n", "unknown species"),
])
def test_iris_errors(tmp_path, text, match):
    p = tmp_path / "iris.csv"
    p.write_text(text)
    with pytest.raises(DataError, match=match):
        load_iris_csv(p)


def test_iris_split(data_dir):
    data = load_iris_csv(data_dir / "iris.data")
    assert len(data) == 150
    train, test = split(data, 0.3, 0)
    assert (len(train), len(test)) == (105, 45)
    assert np.bincount(test.labels).tolist() == [15, 15, 15]
    feats = np.stack([x for x, _ in train.samples])
    assert feats.min() == 0.0 and feats.max() == 1.0
    assert all(((x >= 0) & (x <= 1)).all() for x, _ in test.samples)
    train2, test2 = split(data, 0.3, 0)
    assert all(np.array_equal(a[0], b[0]) for a, b in zip(test.samples, test2.samples))
    with pytest.raises(DataError):
        split(data, 0.0, 0)


def test_split_partition():
    data = LabeledSet([(np.array([float(i)]), i % 3) for i in range(31)], 3)
    train, test = split(data, 0.25, 4)
    assert len(train) + len(test) == 31
    assert sorted(np.concatenate([train.labels, test.labels]).tolist()) == sorted(data.labels.tolist())
    images = LabeledSet([(np.full((2, 2), i), i % 2) for i in range(10)], 2, kind="image")
    tr, te = split(images, 0.4, 1)
    ids = sorted(int(x[0, 0]) for x, _ in tr.samples + te.samples)
    assert ids == list(range(10))


def test_split_needs_two_per_class():
    data = LabeledSet([(np.zeros(3), 0), (np.zeros(3), 0), (np.zeros(3), 1)], 2)
    with pytest.raises(DataError):
        split(data, 0.5, 0)


def test_labeled_set_invariants():
    with pytest.raises(DataError):
        LabeledSet([], 2)
    with pytest.raises(DataError):
        LabeledSet([((0, 0), 3)], 2)
    assert len(xor_set()) == 4
