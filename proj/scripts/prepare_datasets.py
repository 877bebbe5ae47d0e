#!/usr/bin/env python3
"""Writes the bundled datasets under data/ in the formats the tnad tool reads.

Sources are Python packages that ship the raw tables, so no network access to
the original hosts is needed:

  wine.csv    scikit-learn's UCI wine table. Classes 2 and 3 are normal, a
              seeded draw of 10 rows from class 1 are the anomalies (the ODDS
              construction: 119 normal + 10 anomalous rows).
  glass.csv   The MASS `fgl` forensic glass table (via pydataset). Tableware
              rows (9) are the anomalies, the other 205 rows are normal.
              The RI column in `fgl` is an affine transform of the UCI value,
              which standardization removes.
  mnist-*.idx.gz
              The 5000-image MNIST subset shipped with mlxtend (500 per
              digit). The first 400 of each digit form the training file and
              the remaining 100 the test file.

Thyroid (ODDS thyroid.mat) is not redistributed by any package available
here. Convert it yourself with `--thyroid-mat PATH` (needs scipy).

Usage: python3 scripts/prepare_datasets.py [--out data] [--thyroid-mat thyroid.mat]
"""

import argparse
import gzip
import os
import struct

import numpy as np


def write_csv(path, features, labels, names):
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(list(names) + ["label"]) + "\n")
        for row, label in zip(features, labels):
            f.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")


def write_idx(path, array):
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in array.shape)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header)
        f.write(array.tobytes())


def prepare_wine(out):
    from sklearn.datasets import load_wine

    d = load_wine()
    normal = d.data[d.target != 0]
    rng = np.random.default_rng(0)
    outliers = d.data[d.target == 0]
    outliers = outliers[np.sort(rng.choice(len(outliers), size=10, replace=False))]
    features = np.vstack([normal, outliers])
    labels = np.r_[np.zeros(len(normal)), np.ones(len(outliers))]
    names = [n.replace("/", "_") for n in d.feature_names]
    write_csv(os.path.join(out, "wine.csv"), features, labels, names)


def prepare_glass(out):
    from pydataset import data

    d = data("fgl")
    names = [c for c in d.columns if c != "type"]
    features = d[names].to_numpy(dtype=float)
    labels = (d["type"] == "Tabl").to_numpy().astype(int)
    write_csv(os.path.join(out, "glass.csv"), features, labels, names)


def prepare_mnist(out):
    from mlxtend.data import mnist_data

    images, labels = mnist_data()
    images = images.reshape(-1, 28, 28)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        train_idx.extend(idx[:400])
        test_idx.extend(idx[400:])
    train_idx, test_idx = np.array(train_idx), np.array(test_idx)
    write_idx(os.path.join(out, "mnist-train-images.idx3.gz"), images[train_idx])
    write_idx(os.path.join(out, "mnist-train-labels.idx1.gz"), labels[train_idx])
    write_idx(os.path.join(out, "mnist-test-images.idx3.gz"), images[test_idx])
    write_idx(os.path.join(out, "mnist-test-labels.idx1.gz"), labels[test_idx])


def prepare_thyroid(out, mat_path):
    from scipy.io import loadmat

    m = loadmat(mat_path)
    features, labels = m["X"], m["y"].ravel()
    names = [f"f{i}" for i in range(features.shape[1])]
    write_csv(os.path.join(out, "thyroid.csv"), features, labels, names)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    parser.add_argument("--thyroid-mat")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    prepare_wine(args.out)
    prepare_glass(args.out)
    prepare_mnist(args.out)
    if args.thyroid_mat:
        prepare_thyroid(args.out, args.thyroid_mat)


if __name__ == "__main__":
    main()
