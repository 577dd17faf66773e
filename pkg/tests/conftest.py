"""Shared fixtures and generators.

Random test images are drawn on the 1/256 grid: every value is k/256 with
k in 0..256. Such values, their complements, and their pairwise products
are exactly representable in float32, so compositing and L1 sums incur no
rounding at all. That is what lets the bitwise oracle comparisons pass
regardless of summation order.
"""

from __future__ import annotations

import numpy as np
import pytest

from fba.core import ColorMap, PixelMap, PredictionSet, composite

GRID = 256


def grid_map(rng: np.random.Generator, h: int, w: int) -> PixelMap:
    return PixelMap(rng.integers(0, GRID + 1, (h, w)).astype(np.float32) / GRID)


def grid_color(rng: np.random.Generator, h: int, w: int) -> ColorMap:
    return ColorMap(rng.integers(0, GRID + 1, (3, h, w)).astype(np.float32) / GRID)


def step_color(rng: np.random.Generator, h: int, w: int, col: int) -> ColorMap:
    """Two constant vertical bands meeting between columns col and col+1.

    The forward-difference gradient is confined to column `col`, so two such
    layers with different split columns have disjoint gradient supports.
    """
    left = rng.integers(0, GRID + 1, 3).astype(np.float32) / GRID
    right = rng.integers(0, GRID + 1, 3).astype(np.float32) / GRID
    data = np.empty((3, h, w), dtype=np.float32)
    data[:, :, : col + 1] = left[:, None, None]
    data[:, :, col + 1 :] = right[:, None, None]
    return ColorMap(data)


def consistent_triple(
    rng: np.random.Generator, h: int, w: int, separated_layers: bool = False
) -> tuple[PredictionSet, ColorMap]:
    """A ground-truth triple and its exact composite.

    separated_layers draws F and B as vertical two-band images with distinct
    split columns, making their gradient supports disjoint (the layer
    exclusion penalty is then exactly zero at the truth).
    """
    alpha = grid_map(rng, h, w)
    if separated_layers:
        col_f = int(rng.integers(1, w // 2 - 1))
        col_b = int(rng.integers(w // 2 + 1, w - 2))
        fg = step_color(rng, h, w, col_f)
        bg = step_color(rng, h, w, col_b)
    else:
        fg = grid_color(rng, h, w)
        bg = grid_color(rng, h, w)
    triple = PredictionSet(alpha=alpha, fg=fg, bg=bg)
    return triple, composite(alpha, fg, bg)


def soft_disk(h: int, w: int, radius: float, feather: float = 4.0) -> PixelMap:
    """Radial matte: 1 inside, 0 outside, linear ramp of width `feather`."""
    yy, xx = np.mgrid[:h, :w].astype(np.float64)
    dist = np.sqrt((yy - (h - 1) / 2.0) ** 2 + (xx - (w - 1) / 2.0) ** 2)
    alpha = np.clip((radius + feather - dist) / feather, 0.0, 1.0)
    return PixelMap(alpha.astype(np.float32))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20240817))
