"""Reference log-likelihoods for exported weight files.

Loads NLW1 files into the float64 torch network from make_fixtures.py and
writes per-image codelengths that the C++ forward pass must reproduce.
"""

import argparse
import json
import struct
from pathlib import Path

import numpy as np
import torch

from make_fixtures import Net, image_bits, plateau, ramp


def load_nlw(path):
    data = Path(path).read_bytes()
    assert data[:4] == b"NLW1" and data[4] == 1, "not an NLW1 v1 file"
    variant, horizon, blocks, hidden, mixtures, channels = struct.unpack_from("<6I", data, 5)
    net = Net("local" if variant == 0 else "full", horizon, blocks, hidden, mixtures, channels)
    offset = 5 + 24
    with torch.no_grad():
        for w, b in zip(net.weights, net.biases):
            for t in (w, b):
                n = t.numel()
                values = np.frombuffer(data, dtype="<f4", count=n, offset=offset)
                t.copy_(torch.tensor(values.astype(np.float64)).reshape(t.shape))
                offset += 4 * n
    assert offset == len(data), "trailing bytes"
    return net


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fixtures", default="tests/fixtures")
    ap.add_argument("--count", type=int, default=20)
    args = ap.parse_args()
    fixtures = Path(args.fixtures)
    rng = np.random.default_rng(7)
    out = {}
    for name, size in (("local_gray.nlw", None), ("local_rgb.nlw", None), ("ood_full.nlw", 16), ("ood_local.nlw", None)):
        net = load_nlw(fixtures / name)
        channels = net.spec[5]
        records = []
        for n in range(args.count):
            h = size or int(rng.integers(3, 20))
            w = size or int(rng.integers(3, 20))
            if n % 2:
                img = rng.integers(0, 256, (1, h, w, channels)).astype(np.uint8)
            else:
                img = (plateau if n % 4 == 0 else ramp)(rng, 1, h, w, channels)
            bits = float(image_bits(net, img)[0])
            records.append({"height": h, "width": w, "channels": channels,
                            "values": img[0].reshape(-1).tolist(), "bits": bits})
        out[name] = records
        print(f"{name}: {len(records)} images")
    (fixtures / "parity.json").write_text(json.dumps(out))


if __name__ == "__main__":
    main()
