"""Convert the digits bundled in the npm ``mnist`` package into IDX files.

The npm package ships 10,000 real MNIST digits as JSON float arrays (byte/255
rounded to three decimals). Bytes are recovered exactly by rounding.

    npm pack mnist && tar xzf mnist-*.tgz
    python scripts/mnist_from_npm.py package/src/digits data/mnist --test 1000
"""
import argparse
import gzip
import json
import struct
from pathlib import Path

import numpy as np


def write_idx(path, array, magic):
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(struct.pack(">i", magic))
        for extent in array.shape:
            f.write(struct.pack(">i", extent))
        f.write(array.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    images, labels = [], []
    for digit in range(10):
        raw = np.asarray(json.loads((args.digits_dir / f"{digit}.json").read_text())["data"])
        block = np.rint(raw * 255.0).reshape(-1, 28, 28)
        images.append(block)
        labels.append(np.full(len(block), digit))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    n_train = len(labels) - args.test
    write_idx(args.out_dir / "train-images-idx3-ubyte.gz", images[:n_train], 2051)
    write_idx(args.out_dir / "train-labels-idx1-ubyte.gz", labels[:n_train], 2049)
    write_idx(args.out_dir / "t10k-images-idx3-ubyte.gz", images[n_train:], 2051)
    write_idx(args.out_dir / "t10k-labels-idx1-ubyte.gz", labels[n_train:], 2049)
    print(f"wrote {n_train} train / {args.test} test digits to {args.out_dir}")


if __name__ == "__main__":
    main()
