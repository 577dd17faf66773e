"""Image containers, compositing, and value-range plumbing.

All pixel data is float32, values nominally in [0, 1]. Colors are stored
planar (channel, row, col) so per-channel solvers work on contiguous planes.
Containers are frozen and their arrays marked read-only; every operation in
this package is a pure function, safe to call from any thread.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MattingError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(MattingError):
    """Operands that must share dimensions do not."""

    def __init__(self, name_a: str, shape_a, name_b: str, shape_b):
        self.pair = ((name_a, tuple(shape_a)), (name_b, tuple(shape_b)))
        super().__init__(
            f"dimension mismatch: {name_a} {tuple(shape_a)} vs {name_b} {tuple(shape_b)}"
        )


class ValueRangeError(MattingError):
    """A value lies outside its contractual range."""


class FileFormatError(MattingError):
    """A file does not conform to its declared format."""


class ConvergenceError(MattingError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, relative_residual: float, iterations: int):
        self.relative_residual = float(relative_residual)
        self.iterations = int(iterations)
        super().__init__(
            f"{message} (relative residual {relative_residual:.3e} "
            f"after {iterations} iterations)"
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float32)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PixelMap:
    """Single-channel float image, shape (height, width)."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueRangeError(f"PixelMap needs a 2-D array, got shape {self.data.shape}")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class ColorMap:
    """Three-channel float image, planar layout, shape (3, height, width)."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != 3:
            raise ValueRangeError(f"ColorMap needs a (3, h, w) array, got shape {self.data.shape}")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1:]

    @classmethod
    def from_interleaved(cls, arr: np.ndarray) -> "ColorMap":
        """Build from an (h, w, 3) interleaved array (the usual file layout)."""
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueRangeError(f"expected (h, w, 3) array, got shape {arr.shape}")
        return cls(np.moveaxis(np.asarray(arr, dtype=np.float32), 2, 0))

    def to_interleaved(self) -> np.ndarray:
        return np.moveaxis(self.data, 0, 2).copy()


@dataclass(frozen=True)
class PredictionSet:
    """An (alpha, foreground, background) triple over one image.

    This is the file-level counterpart of a matting network's 7 output
    channels: 1 for alpha, 3 for foreground, 3 for background.
    """

    alpha: PixelMap
    fg: ColorMap
    bg: ColorMap

    def __post_init__(self):
        if self.fg.shape != self.alpha.shape:
            raise DimensionMismatchError("alpha", self.alpha.shape, "fg", self.fg.shape)
        if self.bg.shape != self.alpha.shape:
            raise DimensionMismatchError("alpha", self.alpha.shape, "bg", self.bg.shape)
        _check_alpha_range(self.alpha, "alpha")

    @property
    def shape(self) -> tuple[int, int]:
        return self.alpha.shape


def _check_alpha_range(alpha: PixelMap, name: str) -> None:
    lo = float(alpha.data.min(initial=0.0))
    hi = float(alpha.data.max(initial=1.0))
    if lo < 0.0 or hi > 1.0:
        raise ValueRangeError(f"{name} values must lie in [0, 1], got [{lo:g}, {hi:g}]")


def _check_same_shape(name_a: str, a, name_b: str, b) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(name_a, a.shape, name_b, b.shape)


def composite(alpha: PixelMap, fg: ColorMap, bg: ColorMap) -> ColorMap:
    """Blend two color layers through an alpha matte.

    Per pixel and channel: out = alpha * fg + (1 - alpha) * bg. Output stays
    in [0, 1] whenever the inputs do.
    """
    _check_same_shape("alpha", alpha, "fg", fg)
    _check_same_shape("alpha", alpha, "bg", bg)
    _check_alpha_range(alpha, "alpha")
    a = alpha.data[None, :, :]
    return ColorMap(a * fg.data + (1.0 - a) * bg.data)


def premultiply(alpha: PixelMap, fg: ColorMap) -> ColorMap:
    """Per-channel product alpha * fg (the quantity composite metrics score)."""
    _check_same_shape("alpha", alpha, "fg", fg)
    return ColorMap(alpha.data[None, :, :] * fg.data)


def clamp_unit(img):
    """Clamp every value to [0, 1]. Accepts PixelMap or ColorMap; idempotent."""
    if isinstance(img, PixelMap):
        return PixelMap(np.clip(img.data, 0.0, 1.0))
    if isinstance(img, ColorMap):
        return ColorMap(np.clip(img.data, 0.0, 1.0))
    raise TypeError(f"clamp_unit expects PixelMap or ColorMap, got {type(img).__name__}")
