"""Regenerate tests/data from datasets bundled with pip packages.

IRIS comes from scikit-learn, rewritten in the UCI ``iris.data`` layout.
The MNIST subset is the 5000-image sample shipped with mlxtend (500 images
per digit from the MNIST training set), written as gzipped IDX files.
"""

import gzip
import struct
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def write_iris():
    from sklearn.datasets import load_iris

    iris = load_iris()
    names = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
    lines = [",".join(f"{v:.1f}" for v in x) + "," + names[y] for x, y in zip(iris.data, iris.target)]
    (OUT / "iris.data").write_text("\n".join(lines) + "\n")


def write_mnist():
    from mlxtend.data import mnist_data

    x, y = mnist_data()
    images = x.astype(np.uint8).reshape(-1, 28, 28)
    labels = y.astype(np.uint8)
    with gzip.GzipFile(OUT / "mnist5k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28) + images.tobytes())
    with gzip.GzipFile(OUT / "mnist5k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)) + labels.tobytes())


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_iris()
    write_mnist()
