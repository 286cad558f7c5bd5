#!/usr/bin/env python3
"""Build a 10k-digit MNIST subset in IDX format.

The digits come from the `mnist` npm package (10,000 MNIST digits stored as
JSON arrays of pixel intensities in [0, 1]). They are shuffled with a fixed
seed and written as

    <out>/train-images-idx3-ubyte  <out>/train-labels-idx1-ubyte   (8000)
    <out>/t10k-images-idx3-ubyte   <out>/t10k-labels-idx1-ubyte    (2000)

Usage:
    tools/fetch_mnist_subset.py [--tarball mnist-1.1.0.tgz] [--out data/mnist-subset]

Without --tarball the package is fetched with `npm pack mnist@1.1.0`.
"""

import argparse
import json
import random
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path

TRAIN_COUNT = 8000
SHUFFLE_SEED = 20170831


def load_digits(tarball: Path):
    samples = []
    with tarfile.open(tarball) as tar:
        for digit in range(10):
            member = tar.extractfile(f"package/src/digits/{digit}.json")
            pixels = json.load(member)["data"]
            if len(pixels) % 784:
                raise SystemExit(f"digit {digit}: pixel count not a multiple of 784")
            for i in range(0, len(pixels), 784):
                img = bytes(min(255, max(0, round(v * 255))) for v in pixels[i:i + 784])
                samples.append((img, digit))
    return samples


def write_idx(out: Path, prefix: str, samples):
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for img, _ in samples:
            f.write(img)
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tarball", type=Path)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "mnist-subset")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tarball = args.tarball
        if tarball is None:
            subprocess.run(["npm", "pack", "mnist@1.1.0", "--pack-destination", tmp], check=True,
                           stdout=subprocess.DEVNULL)
            tarball = Path(tmp) / "mnist-1.1.0.tgz"
        samples = load_digits(tarball)

    random.Random(SHUFFLE_SEED).shuffle(samples)
    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out, "train", samples[:TRAIN_COUNT])
    write_idx(args.out, "t10k", samples[TRAIN_COUNT:])
    print(f"wrote {TRAIN_COUNT} train / {len(samples) - TRAIN_COUNT} test digits to {args.out}")


if __name__ == "__main__":
    main()
