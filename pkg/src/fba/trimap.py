"""Trimap generation from ground-truth mattes and the blurred-mask encoding.

A trimap partitions the image into definite background, unknown, and
definite foreground. Generation erodes the exact alpha = 1 and alpha = 0
regions with Euclidean disks of randomly drawn radii; whatever survives
neither erosion is unknown. The network-input encoding turns the two
definite masks into six soft channels by Gaussian blurring at three scales.

Files use a single-channel 8-bit PNG with 0 = background, 128 = unknown,
255 = foreground.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.ndimage import distance_transform_edt

from .core import FileFormatError, MattingError, PixelMap, ValueRangeError
from .resample import convolve_separable

TRIMAP_BG = 0
TRIMAP_UNKNOWN = 1
TRIMAP_FG = 2

_PNG_VALUES = {TRIMAP_BG: 0, TRIMAP_UNKNOWN: 128, TRIMAP_FG: 255}
_PNG_LABELS = {v: k for k, v in _PNG_VALUES.items()}

DEFAULT_MIN_RADIUS = 3
DEFAULT_MAX_RADIUS = 25
DEFAULT_SIGMAS = (2.0, 8.0, 16.0)

# Identifier of the generator used for every random draw in the toolkit,
# recorded in output metadata so datasets can be regenerated elsewhere.
RNG_ALGORITHM = "pcg64"


@dataclass(frozen=True)
class Trimap:
    """Per-pixel labels in {TRIMAP_BG, TRIMAP_UNKNOWN, TRIMAP_FG}."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError(f"Trimap needs a 2-D array, got shape {arr.shape}")
        if arr.size and int(arr.max()) > TRIMAP_FG:
            bad = sorted(set(np.unique(arr)) - set(_PNG_VALUES))
            raise ValueRangeError(f"trimap labels outside {{0, 1, 2}}: {bad}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def fg_mask(self) -> np.ndarray:
        return self.data == TRIMAP_FG

    @property
    def bg_mask(self) -> np.ndarray:
        return self.data == TRIMAP_BG

    @property
    def unknown_mask(self) -> np.ndarray:
        return self.data == TRIMAP_UNKNOWN

    def counts(self) -> dict[str, int]:
        return {
            "fg": int(self.fg_mask.sum()),
            "bg": int(self.bg_mask.sum()),
            "unknown": int(self.unknown_mask.sum()),
        }


@dataclass(frozen=True)
class TrimapEncoding:
    """Six soft input channels: fg mask at 3 blur scales, then bg mask."""

    channels: tuple[PixelMap, ...]
    sigmas: tuple[float, float, float]

    def __post_init__(self):
        if len(self.channels) != 6:
            raise ValueError(f"expected 6 channels, got {len(self.channels)}")
        shape = self.channels[0].shape
        for ch in self.channels[1:]:
            if ch.shape != shape:
                raise ValueError("encoding channels disagree on dimensions")

    @property
    def fg_channels(self) -> tuple[PixelMap, ...]:
        return self.channels[:3]

    @property
    def bg_channels(self) -> tuple[PixelMap, ...]:
        return self.channels[3:]

    def as_array(self) -> np.ndarray:
        return np.stack([ch.data for ch in self.channels], axis=0)


def erode_mask(mask: np.ndarray, radius: float, border_outside: bool = True) -> np.ndarray:
    """Keep the pixels whose Euclidean disk of `radius` stays inside the mask.

    border_outside treats everything beyond the image frame as outside the
    region, so regions touching the border erode inward there too.
    """
    if border_outside:
        padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
        padded[1:-1, 1:-1] = mask
        dist = distance_transform_edt(padded)[1:-1, 1:-1]
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.all():
            # the distance transform needs at least one outside pixel
            return mask.copy()
        dist = distance_transform_edt(mask)
    return dist > radius


def trimap_from_radii(
    gt_alpha: PixelMap, r_fg: float, r_bg: float, border_outside: bool = True
) -> Trimap:
    """Deterministic trimap from fixed erosion radii."""
    a = gt_alpha.data
    fg = erode_mask(a == 1.0, r_fg, border_outside)
    bg = erode_mask(a == 0.0, r_bg, border_outside)
    labels = np.full(a.shape, TRIMAP_UNKNOWN, dtype=np.uint8)
    labels[bg] = TRIMAP_BG
    labels[fg] = TRIMAP_FG
    return Trimap(labels)


def draw_radii(
    rng: np.random.Generator, min_px: int = DEFAULT_MIN_RADIUS, max_px: int = DEFAULT_MAX_RADIUS
) -> tuple[int, int]:
    """Independent uniform integer radii (fg first, then bg), both inclusive."""
    if not 1 <= min_px <= max_px:
        raise ValueRangeError(f"need 1 <= min_px <= max_px, got {min_px}..{max_px}")
    r_fg = int(rng.integers(min_px, max_px + 1))
    r_bg = int(rng.integers(min_px, max_px + 1))
    return r_fg, r_bg


def generate_trimap(
    gt_alpha: PixelMap,
    min_px: int = DEFAULT_MIN_RADIUS,
    max_px: int = DEFAULT_MAX_RADIUS,
    seed: int = 0,
    border_outside: bool = True,
) -> Trimap:
    """Random-erosion trimap; deterministic given the inputs and seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    r_fg, r_bg = draw_radii(rng, min_px, max_px)
    return trimap_from_radii(gt_alpha, r_fg, r_bg, border_outside)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Unit-sum 1-D Gaussian truncated at radius ceil(3 sigma)."""
    if sigma <= 0:
        raise ValueRangeError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(xs**2) / (2.0 * sigma**2))
    return g / g.sum()


def encode_trimap(
    trimap: Trimap, sigmas: tuple[float, float, float] = DEFAULT_SIGMAS
) -> TrimapEncoding:
    """Blur the definite fg and bg masks at each scale (edge-repeating pad).

    The unit-sum kernel keeps every channel inside [0,1] and conserves each
    mask's total mass, and a constant mask stays constant at every scale.
    """
    if len(sigmas) != 3:
        raise ValueRangeError(f"expected 3 sigmas, got {len(sigmas)}")
    if not (0.0 < sigmas[0] < sigmas[1] < sigmas[2]):
        raise ValueRangeError(f"sigmas must be strictly increasing and > 0, got {sigmas}")
    channels = []
    for mask in (trimap.fg_mask, trimap.bg_mask):
        source = mask.astype(np.float64)
        for sigma in sigmas:
            blurred = convolve_separable(source, gaussian_kernel(sigma))
            channels.append(PixelMap(np.clip(blurred, 0.0, 1.0)))
    return TrimapEncoding(channels=tuple(channels), sigmas=tuple(float(s) for s in sigmas))


def trimap_to_file(trimap: Trimap, path) -> None:
    lut = np.array([_PNG_VALUES[TRIMAP_BG], _PNG_VALUES[TRIMAP_UNKNOWN], _PNG_VALUES[TRIMAP_FG]],
                   dtype=np.uint8)
    Image.fromarray(lut[trimap.data], mode="L").save(path, format="PNG")


def trimap_from_file(path) -> Trimap:
    try:
        img = Image.open(path)
    except OSError as exc:
        raise FileFormatError(f"cannot open trimap image: {exc}") from exc
    with img:
        if img.mode != "L":
            raise FileFormatError(f"trimap must be single-channel 8-bit, got mode {img.mode!r}")
        values = np.asarray(img, dtype=np.uint8)
    bad = sorted(set(np.unique(values)) - set(_PNG_LABELS))
    if bad:
        raise FileFormatError(f"trimap pixel values outside {{0, 128, 255}}: {bad}")
    labels = np.full(values.shape, TRIMAP_UNKNOWN, dtype=np.uint8)
    labels[values == 0] = TRIMAP_BG
    labels[values == 255] = TRIMAP_FG
    return Trimap(labels)


def unknown_eval_mask(trimap: Trimap):
    """The standard evaluation region: unknown pixels only."""
    from .losses import EvalMask

    return EvalMask(trimap.unknown_mask)
