"""Show how resizing a foreground with undefined colors stains a composite.

Datasets only define foreground color where alpha is nonzero; pixels the
matte never exposes can hold arbitrary fill values. Resampling such a
layer blends the fill into valid pixels near the matte boundary and the
stain survives compositing. Re-estimating the foreground over the whole
frame before any geometric augmentation avoids this.

Writes three images to the output directory: the composite built from a
repaired foreground, the composite built by resizing the raw layer, and
an amplified per-pixel difference.
"""

import argparse
from pathlib import Path

import numpy as np

from fba.core import ColorMap, PixelMap, composite
from fba.fileio import write_image_png
from fba.resample import resize_bilinear


def build_layers(h, w, radius):
    yy, xx = np.mgrid[:h, :w].astype(np.float64)
    dist = np.sqrt((yy - (h - 1) / 2.0) ** 2 + (xx - (w - 1) / 2.0) ** 2)
    alpha = (dist <= radius).astype(np.float32)

    raw = np.zeros((3, h, w), dtype=np.float32)
    raw[0] = np.where(alpha > 0.0, 0.8, 0.0)
    raw[1] = np.where(alpha > 0.0, 0.0, 1.0)  # fill value, never exposed at this scale
    repaired = np.zeros((3, h, w), dtype=np.float32)
    repaired[0] = 0.8

    bg = np.zeros((3, h, w), dtype=np.float32)
    bg[2] = 0.6
    return alpha, raw, repaired, bg


def resize_and_compose(fg, alpha, bg, out_h, out_w):
    f2 = resize_bilinear(fg, out_h, out_w).astype(np.float32)
    a2 = np.clip(resize_bilinear(alpha, out_h, out_w), 0.0, 1.0).astype(np.float32)
    b2 = resize_bilinear(bg, out_h, out_w).astype(np.float32)
    return composite(PixelMap(a2), ColorMap(f2), ColorMap(b2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--radius", type=float, default=80.0)
    ap.add_argument("--scale", type=float, default=1.7)
    ap.add_argument("-o", "--out", type=Path, default=Path("spill_out"))
    args = ap.parse_args()

    alpha, raw, repaired, bg = build_layers(args.size, args.size, args.radius)
    out_h = out_w = int(round(args.size * args.scale))

    clean = resize_and_compose(repaired, alpha, bg, out_h, out_w)
    stained = resize_and_compose(raw, alpha, bg, out_h, out_w)
    diff = ColorMap(np.clip(np.abs(stained.data - clean.data) * 10.0, 0.0, 1.0))

    args.out.mkdir(parents=True, exist_ok=True)
    write_image_png(args.out / "clean.png", clean)
    write_image_png(args.out / "stained.png", stained)
    write_image_png(args.out / "diff_x10.png", diff)

    print(f"fill channel max, repaired path: {float(clean.data[1].max()):.6f}")
    print(f"fill channel max, raw path:      {float(stained.data[1].max()):.6f}")
    print(f"stained pixels (any channel off by >1/255): "
          f"{int((np.abs(stained.data - clean.data) > 1 / 255).any(axis=0).sum())}")
    print(f"wrote {args.out}/clean.png stained.png diff_x10.png")


if __name__ == "__main__":
    main()
