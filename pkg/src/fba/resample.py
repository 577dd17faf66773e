"""Geometric resampling primitives shared by pyramid, trimap, and augment.

Conventions, fixed so results are reproducible bit-for-bit:
  - resize uses the half-pixel source mapping src = (dst + 0.5) * (n_src / n_dst) - 0.5
    with coordinates clamped to the valid range (no extrapolation);
  - bilinear weights are applied in a fixed order:
    (1-fy) * ((1-fx)*p00 + fx*p01) + fy * ((1-fx)*p10 + fx*p11);
  - separable convolution pads with half-sample symmetric extension
    (edge pixel repeated: ... b a | a b c ...) and accumulates taps
    left-to-right in float64.
"""

from __future__ import annotations

import numpy as np


def _source_coords(n_dst: int, n_src: int) -> np.ndarray:
    scale = n_src / n_dst
    coords = (np.arange(n_dst, dtype=np.float64) + 0.5) * scale - 0.5
    return np.clip(coords, 0.0, n_src - 1)


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an (h, w) or (c, h, w) array; computes in float64."""
    x = arr.astype(np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None, :, :]
    _, h, w = x.shape
    ys = _source_coords(out_h, h)
    xs = _source_coords(out_w, w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[None, :, None]
    fx = (xs - x0)[None, None, :]
    p00 = x[:, y0[:, None], x0[None, :]]
    p01 = x[:, y0[:, None], x1[None, :]]
    p10 = x[:, y1[:, None], x0[None, :]]
    p11 = x[:, y1[:, None], x1[None, :]]
    out = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) + fy * ((1.0 - fx) * p10 + fx * p11)
    return out[0] if squeeze else out


def resize_nearest(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize; preserves the input's value set (label-safe)."""
    squeeze = arr.ndim == 2
    x = arr[None, :, :] if squeeze else arr
    _, h, w = x.shape
    ys = np.rint(_source_coords(out_h, h)).astype(np.intp)
    xs = np.rint(_source_coords(out_w, w)).astype(np.intp)
    out = x[:, ys[:, None], xs[None, :]]
    return out[0] if squeeze else out


def convolve_separable(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Correlate an (h, w) array with kernel along x then y, symmetric padding.

    The kernel must have odd length. Accumulation is float64 with taps summed
    in index order, so a straight-line reimplementation reproduces the exact
    bits.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 1 or k.size % 2 == 0:
        raise ValueError(f"kernel must be 1-D with odd length, got shape {k.shape}")
    out = _correlate_axis(arr.astype(np.float64), k, axis=1)
    out = _correlate_axis(out, k, axis=0)
    return out


def _correlate_axis(x: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = kernel.size // 2
    n = x.shape[axis]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    xp = np.pad(x, pad, mode="symmetric")
    out = np.zeros_like(x)
    sl = [slice(None), slice(None)]
    for t in range(kernel.size):
        sl[axis] = slice(t, t + n)
        out += kernel[t] * xp[tuple(sl)]
    return out


def flip_horizontal(arr: np.ndarray) -> np.ndarray:
    """Mirror left-right; last axis is always x."""
    return arr[..., ::-1].copy()


def rotate90(arr: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate counter-clockwise by 90 degrees times `quarter_turns` (exact)."""
    return np.ascontiguousarray(np.rot90(arr, quarter_turns % 4, axes=(-2, -1)))
