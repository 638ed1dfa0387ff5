"""Write the 5,000-image MNIST training subset shipped with mlxtend as IDX files.

The mlxtend CSV is sorted by class; rows are shuffled with a fixed seed so that
any prefix of the output is a class-mixed sample.

    pip install mlxtend
    python scripts/make_mnist_subset.py data/mnist5k
"""
import sys
from pathlib import Path

import numpy as np
from mlxtend.data import mnist_data

from lcemd.ingest import write_idx

SEED = 20190609


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    X, y = mnist_data()
    order = np.random.default_rng(SEED).permutation(len(y))
    images = X[order].reshape(-1, 28, 28).astype(np.uint8)
    labels = y[order].astype(np.uint8)
    write_idx(out / "train-images-idx3-ubyte.gz", images)
    write_idx(out / "train-labels-idx1-ubyte.gz", labels)
    print(f"wrote {len(labels)} images to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/mnist5k")
