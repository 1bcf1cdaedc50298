#!/usr/bin/env python3
"""Train the small weight files checked in under tests/fixtures/.

The C++ test suites run entirely from these files. The network and the
Logistic-Uniform mixture likelihood below mirror core/src/model.cpp and
core/src/mixture.cpp; the exported file layout is the NLW1 format read by
load_weights().

    python3 tools/fixtures/make_fixtures.py --out tests/fixtures
"""

import argparse
import math
import struct
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

ALPHA = 1e-4
MIN_LOG_SCALE = -7.0


# --------------------------------------------------------------------------
# synthetic data (kept in sync with tests/support/test_support.hpp)

def plateau(rng, n, h, w, c):
    """Texture A: per-image flat level plus strong i.i.d. noise."""
    level = rng.uniform(40, 215, size=(n, 1, 1, c))
    img = level + rng.normal(0, 25, size=(n, h, w, c))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def ramp(rng, n, h, w, c):
    """Texture B: smooth diagonal ramps with faint noise."""
    base = rng.uniform(30, 120, size=(n, 1, 1, c))
    slope = rng.uniform(4, 9, size=(n, 1, 1, 1))
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    img = base + slope * (ii + jj)[None, :, :, None] + rng.normal(0, 3, size=(n, h, w, c))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def mixed(rng, n, h, w, c):
    a = plateau(rng, n // 2, h, w, c)
    b = ramp(rng, n - n // 2, h, w, c)
    out = np.concatenate([a, b])
    rng.shuffle(out)
    return out


# --------------------------------------------------------------------------
# model

def spatial_mask(k, kind):
    m = np.ones((k, k), dtype=np.float64)
    centre = k // 2
    m[centre, centre + 1:] = 0
    m[centre + 1:, :] = 0
    if kind == "A":
        m[centre, centre] = 0
    return torch.tensor(m)


class Net(torch.nn.Module):
    def __init__(self, variant, horizon, blocks, hidden, mixtures, channels):
        super().__init__()
        self.spec = (variant, horizon, blocks, hidden, mixtures, channels)
        out = 3 * mixtures if channels == 1 else 10 * mixtures
        k = 2 * horizon + 1
        mid = 3 if variant == "full" else 1
        shapes = [(hidden, channels, k, "A")]
        for _ in range(blocks):
            shapes += [(hidden, hidden, 1, "B"), (hidden, hidden, mid, "B"), (hidden, hidden, 1, "B")]
        shapes += [(hidden, hidden, 1, "B"), (out, hidden, 1, "B")]
        self.weights = torch.nn.ParameterList()
        self.biases = torch.nn.ParameterList()
        self.masks = []
        for o, i, kk, kind in shapes:
            bound = 1.0 / math.sqrt(i * kk * kk)
            self.weights.append(torch.nn.Parameter(torch.empty(o, i, kk, kk, dtype=torch.float64).uniform_(-bound, bound)))
            self.biases.append(torch.nn.Parameter(torch.empty(o, dtype=torch.float64).uniform_(-bound, bound)))
            self.masks.append(spatial_mask(kk, kind))
        self.blocks = blocks

    def conv(self, n, x):
        w = self.weights[n] * self.masks[n]
        return F.conv2d(x, w, self.biases[n], padding=w.shape[-1] // 2)

    def forward(self, x):
        h = F.relu(self.conv(0, x))
        n = 1
        for _ in range(self.blocks):
            t = F.relu(self.conv(n, h))
            t = F.relu(self.conv(n + 1, t))
            t = F.relu(self.conv(n + 2, t))
            h = h + t
            n += 3
        h = F.relu(self.conv(n, h))
        return self.conv(n + 1, h)

    def export(self, path):
        variant, horizon, blocks, hidden, mixtures, channels = self.spec
        data = bytearray(b"NLW1")
        data.append(1)
        data += struct.pack("<6I", 0 if variant == "local" else 1, horizon, blocks, hidden, mixtures, channels)
        for w, b in zip(self.weights, self.biases):
            data += w.detach().to(torch.float32).numpy().astype("<f4").tobytes()
            data += b.detach().to(torch.float32).numpy().astype("<f4").tobytes()
        Path(path).write_bytes(bytes(data))
        return len(data)


def nll_bits(out, images, mixtures, channels):
    """Per-image -log2 likelihood under the Logistic-Uniform mixture."""
    x = images.permute(0, 3, 1, 2).to(torch.float64) * (2.0 / 255.0) - 1.0  # N,C,H,W
    K = mixtures
    logits = out[:, :K]
    means = out[:, K:K + channels * K]
    log_scales = torch.clamp(out[:, K + channels * K:K + 2 * channels * K], min=MIN_LOG_SCALE)
    log_pi = torch.log_softmax(logits, dim=1)
    total = 0.0
    for c in range(channels):
        mu = means[:, c * K:(c + 1) * K]
        if c == 1:
            coeff = torch.tanh(out[:, 7 * K:8 * K])
            mu = mu + coeff * x[:, 0:1]
        elif c == 2:
            c1 = torch.tanh(out[:, 8 * K:9 * K])
            c2 = torch.tanh(out[:, 9 * K:10 * K])
            mu = mu + c1 * x[:, 0:1] + c2 * x[:, 1:2]
        inv_s = torch.exp(-log_scales[:, c * K:(c + 1) * K])
        xc = x[:, c:c + 1]
        up = torch.sigmoid((xc + 1.0 / 255.0 - mu) * inv_s)
        lo = torch.sigmoid((xc - 1.0 / 255.0 - mu) * inv_s)
        up = torch.where(xc > 0.999, torch.ones_like(up), up)
        lo = torch.where(xc < -0.999, torch.zeros_like(lo), lo)
        mix = (torch.exp(log_pi) * (up - lo)).sum(dim=1)
        pmf = (1 - ALPHA) * mix + ALPHA / 256.0
        total = total - torch.log2(pmf).sum(dim=(1, 2))
    return total


def train(net, data, epochs, lr, batch, seed, log):
    torch.manual_seed(seed)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    x = torch.tensor(data)
    dims = x.shape[1] * x.shape[2] * x.shape[3]
    mixtures, channels = net.spec[4], net.spec[5]
    for epoch in range(epochs):
        perm = torch.randperm(len(x))
        run = 0.0
        for s in range(0, len(x), batch):
            xb = x[perm[s:s + batch]]
            inp = xb.permute(0, 3, 1, 2).to(torch.float64) * (2.0 / 255.0) - 1.0
            loss = nll_bits(net(inp), xb, mixtures, channels).mean() / dims
            opt.zero_grad()
            loss.backward()
            opt.step()
            run += loss.item() * len(xb)
        if log and (epoch % 10 == 0 or epoch == epochs - 1):
            print(f"  epoch {epoch:3d} train bpd {run / len(x):.4f}")
    return net


def image_bits(net, data):
    x = torch.tensor(data)
    with torch.no_grad():
        inp = x.permute(0, 3, 1, 2).to(torch.float64) * (2.0 / 255.0) - 1.0
        return nll_bits(net(inp), x, net.spec[4], net.spec[5]).numpy()


def auroc(id_scores, ood_scores):
    id_scores = np.asarray(id_scores)[:, None]
    ood_scores = np.asarray(ood_scores)[None, :]
    return float(((id_scores > ood_scores) + 0.5 * (id_scores == ood_scores)).mean())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures")
    ap.add_argument("--epochs", type=int, default=60)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20211)
    torch.manual_seed(20211)

    for channels, name in [(1, "local_gray.nlw"), (3, "local_rgb.nlw")]:
        print(f"training {name}")
        data = mixed(rng, 600, 16, 16, channels)
        net = train(Net("local", 2, 0, 32, 5, channels), data, args.epochs, 3e-3, 50, 1, True)
        size = net.export(out / name)
        print(f"  wrote {size} bytes")

    print("training OOD pair on texture A")
    data = plateau(rng, 800, 16, 16, 1)
    local = train(Net("local", 1, 0, 32, 5, 1), data, args.epochs, 3e-3, 50, 2, True)
    full = train(Net("full", 2, 4, 32, 5, 1), data, args.epochs, 3e-3, 50, 3, True)
    local.export(out / "ood_local.nlw")
    full.export(out / "ood_full.nlw")

    test_a = plateau(rng, 200, 16, 16, 1)
    test_b = ramp(rng, 200, 16, 16, 1)
    fa, fb = -image_bits(full, test_a), -image_bits(full, test_b)
    la, lb = -image_bits(local, test_a), -image_bits(local, test_b)
    print(f"  full-likelihood AUROC {auroc(fa, fb):.4f}")
    print(f"  ratio-score AUROC     {auroc(fa - la, fb - lb):.4f}")
    print(f"  bpd A full {-fa.mean() / 256:.3f} local {-la.mean() / 256:.3f}; "
          f"B full {-fb.mean() / 256:.3f} local {-lb.mean() / 256:.3f}")


if __name__ == "__main__":
    main()
