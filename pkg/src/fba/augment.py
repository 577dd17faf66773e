"""Training-sample synthesis and test-time-augmentation merging.

Sample synthesis composites a foreground layer over a background with the
matting equation, cropping around the trimap's unknown band. All geometric
resampling happens on the separate (fg, alpha, bg) layers BEFORE they are
composited; resampling a pre-made composite smears foreground colors across
the matte edge (the color-spill defect), so the order here is load-bearing.
The foreground must carry colors over the whole frame for the same reason.

Random draws come from one seeded generator in a fixed order (second-fg
coin, trimap radii, crop center) so samples are reproducible from the seed
alone. Photometric changes apply to the composite only, never to the
ground-truth layers.

TTA transforms apply flip, then rotation, then scaling; the eight
(rotation, flip) combinations form the dihedral group of the square and
round-trip bitwise at scale 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ColorMap,
    DimensionMismatchError,
    MattingError,
    PixelMap,
    PredictionSet,
    ValueRangeError,
    composite,
)
from .resample import flip_horizontal, resize_bilinear, resize_nearest, rotate90
from .trimap import DEFAULT_MAX_RADIUS, DEFAULT_MIN_RADIUS, Trimap, draw_radii, trimap_from_radii

CROP_SIZES = (320, 480, 640)
GAMMA_RANGE = (0.5, 2.0)
BRIGHTNESS_RANGE = (-0.1, 0.1)
TTA_ROTATIONS = (0, 90, 180, 270)


class SamplingError(MattingError):
    """The sample pipeline cannot proceed (no unknown band, frame too small)."""


@dataclass(frozen=True)
class SampleSpec:
    """Concrete augmentation parameters for one synthesized sample.

    Fields hold realized values, not ranges; whoever schedules training
    draws them and records the spec, which makes every sample replayable.
    """

    crop_size: int = 320
    flip: bool = False
    gamma: float = 1.0
    brightness: float = 0.0
    second_fg_prob: float = 0.5
    use_2x: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.crop_size not in CROP_SIZES:
            raise ValueRangeError(f"crop_size must be one of {CROP_SIZES}, got {self.crop_size}")
        if not GAMMA_RANGE[0] <= self.gamma <= GAMMA_RANGE[1]:
            raise ValueRangeError(f"gamma must be in {GAMMA_RANGE}, got {self.gamma}")
        if not BRIGHTNESS_RANGE[0] <= self.brightness <= BRIGHTNESS_RANGE[1]:
            raise ValueRangeError(
                f"brightness must be in {BRIGHTNESS_RANGE}, got {self.brightness}"
            )
        if not 0.0 <= self.second_fg_prob <= 1.0:
            raise ValueRangeError(f"second_fg_prob must be in [0, 1], got {self.second_fg_prob}")


def merge_second_fg(
    fg1: ColorMap, alpha1: PixelMap, fg2: ColorMap, alpha2: PixelMap
) -> tuple[ColorMap, PixelMap]:
    """Composite a second foreground behind the first (over operator).

    alpha = a1 + a2 (1 - a1); F = (a1 F1 + (1 - a1) a2 F2) / alpha where
    alpha > 0, and F1 where alpha = 0. The merged alpha never leaves [0, 1]
    and is monotone in both inputs.
    """
    if fg1.shape != alpha1.shape:
        raise DimensionMismatchError("fg1", fg1.shape, "alpha1", alpha1.shape)
    if fg2.shape != alpha2.shape:
        raise DimensionMismatchError("fg2", fg2.shape, "alpha2", alpha2.shape)
    if fg1.shape != fg2.shape:
        raise DimensionMismatchError("fg1", fg1.shape, "fg2", fg2.shape)
    a1 = alpha1.data.astype(np.float64)
    a2 = alpha2.data.astype(np.float64)
    f1 = fg1.data.astype(np.float64)
    f2 = fg2.data.astype(np.float64)
    a = a1 + a2 * (1.0 - a1)
    numer = a1[None] * f1 + ((1.0 - a1) * a2)[None] * f2
    f = np.where(a[None] > 0.0, numer / np.maximum(a[None], np.finfo(np.float64).tiny), f1)
    return ColorMap(f), PixelMap(a)


def _resize_layers(fg, alpha, bg, out_h, out_w):
    fg2 = ColorMap(resize_bilinear(fg.data, out_h, out_w))
    a2 = PixelMap(np.clip(resize_bilinear(alpha.data, out_h, out_w), 0.0, 1.0))
    bg2 = ColorMap(resize_bilinear(bg.data, out_h, out_w))
    return fg2, a2, bg2


def make_sample_with_meta(
    fg: ColorMap,
    alpha: PixelMap,
    bg: ColorMap,
    spec: SampleSpec,
    second_fg: ColorMap | None = None,
    second_alpha: PixelMap | None = None,
) -> tuple[tuple[ColorMap, PredictionSet, Trimap], dict]:
    """make_sample plus a metadata dict of every realized random draw."""
    if fg.shape != alpha.shape:
        raise DimensionMismatchError("fg", fg.shape, "alpha", alpha.shape)
    if (second_fg is None) != (second_alpha is None):
        raise ValueError("second_fg and second_alpha must be given together")

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    meta: dict = {"seed": spec.seed, "rng": "pcg64", "use_2x": spec.use_2x, "flip": spec.flip}

    a = alpha.data
    f = fg.data
    b = bg.data
    if spec.use_2x:
        f = resize_bilinear(f, 2 * fg.height, 2 * fg.width)
        a = np.clip(resize_bilinear(a, 2 * alpha.height, 2 * alpha.width), 0.0, 1.0)
        b = resize_bilinear(b, 2 * bg.data.shape[1], 2 * bg.data.shape[2])
    frame_h, frame_w = a.shape

    # Draw 1: the second-foreground coin. Burned even when no second layer
    # is supplied so the later draws do not depend on optional inputs.
    coin = float(rng.random())
    merged = second_fg is not None and coin < spec.second_fg_prob
    meta["second_fg"] = {"offered": second_fg is not None, "coin": coin, "merged": merged}
    if merged:
        f2 = second_fg.data
        a2 = second_alpha.data
        if f2.shape[1:] != (frame_h, frame_w):
            f2 = resize_bilinear(f2, frame_h, frame_w)
            a2 = np.clip(resize_bilinear(a2, frame_h, frame_w), 0.0, 1.0)
        merged_fg, merged_alpha = merge_second_fg(
            ColorMap(f), PixelMap(a), ColorMap(f2), PixelMap(a2)
        )
        f = merged_fg.data
        a = merged_alpha.data

    if spec.flip:
        f = flip_horizontal(f)
        a = flip_horizontal(a)
        b = flip_horizontal(b)

    if spec.crop_size > frame_h or spec.crop_size > frame_w:
        raise SamplingError(
            f"foreground frame {frame_h}x{frame_w} is smaller than crop {spec.crop_size}"
        )
    if spec.crop_size > b.shape[1] or spec.crop_size > b.shape[2]:
        raise SamplingError(
            f"background {b.shape[1]}x{b.shape[2]} is smaller than crop {spec.crop_size}"
        )
    if b.shape[1:] != (frame_h, frame_w):
        b = resize_bilinear(b, frame_h, frame_w)

    # Draw 2: erosion radii for the trimap.
    r_fg, r_bg = draw_radii(rng, DEFAULT_MIN_RADIUS, DEFAULT_MAX_RADIUS)
    trimap = trimap_from_radii(PixelMap(a), r_fg, r_bg)
    meta["trimap_radii"] = {"fg": r_fg, "bg": r_bg}

    unknown = np.argwhere(trimap.unknown_mask)
    if len(unknown) == 0:
        raise SamplingError("trimap has no unknown pixel to center the crop on")
    # Draw 3: crop center, uniform over the unknown band.
    cy, cx = (int(v) for v in unknown[int(rng.integers(len(unknown)))])
    top = min(max(cy - spec.crop_size // 2, 0), frame_h - spec.crop_size)
    left = min(max(cx - spec.crop_size // 2, 0), frame_w - spec.crop_size)
    meta["crop"] = {"center": [cy, cx], "top": top, "left": left, "size": spec.crop_size}

    window = (slice(top, top + spec.crop_size), slice(left, left + spec.crop_size))
    fg_c = ColorMap(f[(slice(None),) + window])
    alpha_c = PixelMap(a[window])
    bg_c = ColorMap(b[(slice(None),) + window])
    trimap_c = Trimap(trimap.data[window])

    image = composite(alpha_c, fg_c, bg_c).data.astype(np.float64)
    image = np.clip(np.power(image, spec.gamma) + spec.brightness, 0.0, 1.0)
    meta["gamma"] = spec.gamma
    meta["brightness"] = spec.brightness

    gt = PredictionSet(alpha=alpha_c, fg=fg_c, bg=bg_c)
    return (ColorMap(image), gt, trimap_c), meta


def make_sample(
    fg: ColorMap,
    alpha: PixelMap,
    bg: ColorMap,
    spec: SampleSpec,
    second_fg: ColorMap | None = None,
    second_alpha: PixelMap | None = None,
) -> tuple[ColorMap, PredictionSet, Trimap]:
    """One synthesized (image, ground truth, trimap) sample; see module doc."""
    sample, _ = make_sample_with_meta(fg, alpha, bg, spec, second_fg, second_alpha)
    return sample


@dataclass(frozen=True)
class TTATransform:
    """One test-time view: flip, then CCW rotation, then uniform scaling."""

    rotation: int = 0
    flip: bool = False
    scale: float = 1.0

    def __post_init__(self):
        if self.rotation not in TTA_ROTATIONS:
            raise ValueRangeError(f"rotation must be one of {TTA_ROTATIONS}, got {self.rotation}")
        if not self.scale > 0:
            raise ValueRangeError(f"scale must be > 0, got {self.scale}")

    @property
    def quarter_turns(self) -> int:
        return self.rotation // 90

    def identifier(self) -> str:
        parts = [f"r{self.rotation}"]
        if self.flip:
            parts.append("f")
        if self.scale != 1.0:
            parts.append(f"s{self.scale:g}")
        return "_".join(parts)

    @classmethod
    def from_identifier(cls, text: str) -> "TTATransform":
        rotation, flip, scale = None, False, 1.0
        for part in text.split("_"):
            if part.startswith("r") and rotation is None:
                rotation = int(part[1:])
            elif part == "f":
                flip = True
            elif part.startswith("s"):
                scale = float(part[1:])
            else:
                raise ValueError(f"bad transform identifier {text!r}")
        if rotation is None:
            raise ValueError(f"bad transform identifier {text!r}")
        return cls(rotation=rotation, flip=flip, scale=scale)


def dihedral_transforms() -> tuple[TTATransform, ...]:
    """The eight exact views: four rotations, with and without flip."""
    return tuple(
        TTATransform(rotation=r, flip=f) for f in (False, True) for r in TTA_ROTATIONS
    )


def _scaled_dims(h: int, w: int, scale: float) -> tuple[int, int]:
    return max(1, round(h * scale)), max(1, round(w * scale))


def tta_forward(image: ColorMap, trimap: Trimap, t: TTATransform) -> tuple[ColorMap, Trimap]:
    """Map an input view forward: flip, rotate, then scale."""
    if image.shape != trimap.shape:
        raise DimensionMismatchError("image", image.shape, "trimap", trimap.shape)
    img = image.data
    tri = trimap.data
    if t.flip:
        img = flip_horizontal(img)
        tri = flip_horizontal(tri)
    if t.quarter_turns:
        img = rotate90(img, t.quarter_turns)
        tri = rotate90(tri, t.quarter_turns)
    if t.scale != 1.0:
        out_h, out_w = _scaled_dims(img.shape[1], img.shape[2], t.scale)
        img = np.clip(resize_bilinear(img, out_h, out_w), 0.0, 1.0)
        tri = resize_nearest(tri, out_h, out_w)
    return ColorMap(img), Trimap(tri)


def _inverse_array(arr: np.ndarray, t: TTATransform, target: tuple[int, int]) -> np.ndarray:
    pre_scale = target if t.quarter_turns % 2 == 0 else (target[1], target[0])
    if arr.shape[-2:] != pre_scale:
        arr = resize_bilinear(arr, *pre_scale)
    if t.quarter_turns:
        arr = rotate90(arr, 4 - t.quarter_turns)
    if t.flip:
        arr = flip_horizontal(arr)
    return arr


def tta_inverse(pred: PredictionSet, t: TTATransform, target_dims: tuple[int, int]) -> PredictionSet:
    """Map a prediction back to the original frame.

    Undoes scale (resize to the pre-scale dims; skipped when they already
    match, which keeps the dihedral subgroup bitwise exact), then rotation,
    then flip. alpha is clipped only if a resize actually ran.
    """
    a = _inverse_array(pred.alpha.data, t, target_dims)
    f = _inverse_array(pred.fg.data, t, target_dims)
    b = _inverse_array(pred.bg.data, t, target_dims)
    if a.dtype != np.float32:
        a = np.clip(a, 0.0, 1.0)
    return PredictionSet(alpha=PixelMap(a), fg=ColorMap(f), bg=ColorMap(b))


def tta_merge(preds: list[PredictionSet]) -> PredictionSet:
    """Per-pixel arithmetic mean of the prediction channels (float64 sums)."""
    if not preds:
        raise ValueError("tta_merge needs at least one prediction")
    shape = preds[0].shape
    for p in preds[1:]:
        if p.shape != shape:
            raise DimensionMismatchError("pred", p.shape, "first pred", shape)
    n = len(preds)
    a = np.zeros(shape, dtype=np.float64)
    f = np.zeros((3,) + shape, dtype=np.float64)
    b = np.zeros((3,) + shape, dtype=np.float64)
    for p in preds:
        a += p.alpha.data
        f += p.fg.data
        b += p.bg.data
    return PredictionSet(alpha=PixelMap(a / n), fg=ColorMap(f / n), bg=ColorMap(b / n))
