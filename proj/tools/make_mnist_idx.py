#!/usr/bin/env python3
"""Convert the digits bundled with the npm `mnist` package into gzipped IDX files.

The package ships 10000 MNIST digits as per-class JSON arrays of pixel
intensities in [0, 1] (three decimals). We quantize back to bytes, shuffle
with a fixed seed so classes are interleaved, and write a train/test split
in the standard IDX layout:

    train-images-idx3-ubyte.gz  train-labels-idx1-ubyte.gz
    t10k-images-idx3-ubyte.gz   t10k-labels-idx1-ubyte.gz

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    tools/make_mnist_idx.py --package package --out data/mnist
"""
import argparse
import gzip
import json
import pathlib
import random
import struct


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--package", required=True, help="unpacked npm mnist package dir")
    ap.add_argument("--out", required=True)
    ap.add_argument("--test", type=int, default=1000, help="examples held out as t10k split")
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        raw = json.loads((pathlib.Path(args.package) / "src" / "digits" / f"{digit}.json").read_text())
        data = raw["data"]
        assert len(data) % 784 == 0
        for k in range(len(data) // 784):
            pix = bytes(min(255, max(0, round(v * 255))) for v in data[k * 784:(k + 1) * 784])
            samples.append((pix, digit))

    random.Random(args.seed).shuffle(samples)
    test, train = samples[: args.test], samples[args.test:]
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for prefix, split in (("train", train), ("t10k", test)):
        write_idx(out / f"{prefix}-images-idx3-ubyte.gz", 0x00000803, (len(split), 28, 28),
                  b"".join(p for p, _ in split))
        write_idx(out / f"{prefix}-labels-idx1-ubyte.gz", 0x00000801, (len(split),),
                  bytes(l for _, l in split))
        print(f"{prefix}: {len(split)} examples")


if __name__ == "__main__":
    main()
