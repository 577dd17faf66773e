"""Gaussian/Laplacian pyramid with perfect reconstruction.

Smoothing kernel is the separable 5-tap binomial [1, 4, 6, 4, 1] / 16 with
half-sample symmetric padding. Downsampling keeps every other sample starting
at index 0, so an n-pixel axis becomes ceil(n / 2); upsampling maps back to
the exact parent size with bilinear interpolation. Band-pass level s is
G_{s-1} - upsample(G_s); the residual is the final Gaussian level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ColorMap, DimensionMismatchError, MattingError, PixelMap
from .resample import convolve_separable, resize_bilinear

BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


class PyramidStructureError(MattingError):
    """A pyramid's level-size chain is inconsistent."""


@dataclass(frozen=True)
class LaplacianPyramid:
    """Band-pass levels, finest first, plus the low-pass residual."""

    levels: tuple[PixelMap, ...]
    residual: PixelMap = field(repr=False)

    def __post_init__(self):
        shape = None
        for lv in self.levels:
            if shape is not None and lv.shape != _half(shape):
                raise PyramidStructureError(
                    f"level of shape {lv.shape} does not follow {shape}"
                )
            shape = lv.shape
        if shape is not None and self.residual.shape != _half(shape):
            raise PyramidStructureError(
                f"residual shape {self.residual.shape} does not follow {shape}"
            )


def _half(shape: tuple[int, int]) -> tuple[int, int]:
    return (-(-shape[0] // 2), -(-shape[1] // 2))


def _downsample(x: np.ndarray) -> np.ndarray:
    return convolve_separable(x, BINOMIAL5)[::2, ::2]


def build_pyramid(img: PixelMap, levels: int) -> LaplacianPyramid:
    """Decompose an image into `levels` band-pass levels plus a residual."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    min_dim = 2 ** (levels - 1)
    if img.height < min_dim or img.width < min_dim:
        raise DimensionMismatchError(
            "image", img.shape, f"minimum for {levels} levels", (min_dim, min_dim)
        )
    bands = []
    current = img.data.astype(np.float64)
    for _ in range(levels):
        down = _downsample(current)
        up = resize_bilinear(down, *current.shape)
        bands.append(PixelMap(current - up))
        current = down
    return LaplacianPyramid(tuple(bands), PixelMap(current))


def reconstruct(pyr: LaplacianPyramid) -> PixelMap:
    """Invert build_pyramid; exact to float32 rounding (< 1e-6)."""
    acc = pyr.residual.data.astype(np.float64)
    for band in reversed(pyr.levels):
        acc = band.data + resize_bilinear(acc, *band.shape)
    return PixelMap(acc)


def build_pyramid_color(img: ColorMap, levels: int) -> tuple[LaplacianPyramid, ...]:
    """Per-channel convenience wrapper; returns one pyramid per channel."""
    return tuple(build_pyramid(PixelMap(img.data[c]), levels) for c in range(3))
