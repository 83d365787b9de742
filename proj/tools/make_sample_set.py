#!/usr/bin/env python3
"""Regenerate data/sample from the stock photographs bundled with
scikit-image and scikit-learn.

Terrestrial images are random 256x256 crops. Underwater images are other
crops pushed through `hybrur degrade` with water-like parameters (red
attenuated most, blue-green veiling light), so the two domains never share
content.
"""
import argparse
import json
import pathlib
import subprocess
import tempfile

import numpy as np
import skimage.data
import skimage.transform
from PIL import Image
from sklearn.datasets import load_sample_images


def sources():
    imgs = [
        skimage.data.astronaut(),
        skimage.data.chelsea(),
        skimage.data.coffee(),
        skimage.data.rocket(),
        skimage.data.stereo_motorcycle()[0],
        skimage.data.stereo_motorcycle()[1],
    ]
    imgs += list(load_sample_images().images)
    return imgs


def crop(rng, img, size=256):
    h, w = img.shape[:2]
    side = int(rng.integers(min(h, w) // 2, min(h, w) + 1))
    y = int(rng.integers(0, h - side + 1))
    x = int(rng.integers(0, w - side + 1))
    patch = img[y:y + side, x:x + side]
    patch = skimage.transform.resize(patch, (size, size), anti_aliasing=True)
    if rng.random() < 0.5:
        patch = patch[:, ::-1]
    return (np.clip(patch, 0, 1) * 255 + 0.5).astype(np.uint8)


def water_params(rng):
    lo_hi = {
        "t_D": [(0.25, 0.55), (0.70, 0.92), (0.75, 0.95)],
        "t_B": [(0.30, 0.60), (0.70, 0.90), (0.75, 0.95)],
        "B_inf": [(0.60, 0.70), (0.75, 0.95), (0.80, 1.00)],
    }
    return {f"{k}_{c}": float(rng.uniform(lo, hi))
            for k, ranges in lo_hi.items() for c, (lo, hi) in zip("rgb", ranges)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True, help="path to the built hybrur binary")
    ap.add_argument("--out", default="data/sample")
    ap.add_argument("--count", type=int, default=32)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    srcs = sources()
    out = pathlib.Path(args.out)
    terr = out / "terrestrial"
    under = out / "underwater"
    terr.mkdir(parents=True, exist_ok=True)
    under.mkdir(parents=True, exist_ok=True)

    for i in range(args.count):
        Image.fromarray(crop(rng, srcs[rng.integers(len(srcs))])).save(terr / f"t{i:03d}.png")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        for i in range(args.count):
            clean = tmp / f"clean{i}"
            clean.mkdir()
            Image.fromarray(crop(rng, srcs[rng.integers(len(srcs))])).save(clean / f"u{i:03d}.png")
            params = tmp / f"params{i}.json"
            params.write_text(json.dumps(water_params(rng)))
            far = rng.uniform(3.0, 6.0)
            subprocess.run([args.cli, "degrade", "--input", str(clean), "--output", str(tmp / "raw"),
                            "--params", str(params), "--depth", f"gradient:{far:.3f}"],
                           check=True, stdout=subprocess.DEVNULL)
        for p in sorted((tmp / "raw").glob("*.png")):
            p.replace(under / p.name)


if __name__ == "__main__":
    main()
