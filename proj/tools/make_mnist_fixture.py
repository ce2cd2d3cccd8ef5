#!/usr/bin/env python3
"""Build the 1,000-image MNIST IDX fixture used by the acceptance suite.

Source: the `mnist` npm package (src/digits/<label>.json), which stores
28x28 digits as floats in [0, 1] with three decimals. Pixels are mapped back
to bytes with round(v * 255). Images are interleaved by label (0..9 repeated)
so any prefix is class-balanced.

usage: make_mnist_fixture.py <package/src/digits> <out_dir> [count]
"""
import json
import struct
import sys
from pathlib import Path


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    count = int(sys.argv[3]) if len(sys.argv) > 3 else 1000
    per_label = count // 10
    digits = {}
    for label in range(10):
        flat = json.loads((src / f"{label}.json").read_text())["data"]
        digits[label] = [flat[i * 784:(i + 1) * 784] for i in range(per_label)]

    images, labels = bytearray(), bytearray()
    for i in range(per_label):
        for label in range(10):
            images += bytes(min(255, max(0, round(v * 255))) for v in digits[label][i])
            labels.append(label)

    n = per_label * 10
    out.mkdir(parents=True, exist_ok=True)
    (out / "mnist1k-images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, n, 28, 28) + images)
    (out / "mnist1k-labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, n) + labels)


if __name__ == "__main__":
    main()
