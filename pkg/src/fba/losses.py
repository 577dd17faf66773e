"""Training loss functions over prediction/ground-truth pairs.

All losses are forward evaluations (no autodiff) with sum-over-pixels
semantics; pass reduction="mean" on the pixelwise losses for framework
parity. Per-pixel terms are computed in float64 from the float32 inputs and
accumulated in float64.

The discrete gradient defaults to forward differences with replicate
boundary (the cheapest operator with zero response to constants); "sobel"
selects 3x3 Sobel filters instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ColorMap,
    DimensionMismatchError,
    MattingError,
    PixelMap,
    PredictionSet,
)
from .pyramid import build_pyramid
from .resample import _correlate_axis

FB_WEIGHT = 0.25
PYRAMID_LOSS_LEVELS = 5

_SOBEL_SMOOTH = np.array([1.0, 2.0, 1.0])
_SOBEL_DERIV = np.array([-1.0, 0.0, 1.0])


class EmptyRegionError(MattingError):
    """A mean-reduced quantity was requested over an empty pixel set."""


@dataclass(frozen=True)
class EvalMask:
    """Binary field selecting the pixels that contribute to sums."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"EvalMask needs a 2-D array, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @classmethod
    def full(cls, shape: tuple[int, int]) -> "EvalMask":
        return cls(np.ones(shape, dtype=bool))


@dataclass(frozen=True)
class LossReport:
    """The eight loss terms plus their weighted combination."""

    l1_alpha: float
    comp_alpha: float
    grad_alpha: float
    lap_alpha: float
    l1_fb: float
    lap_fb: float
    comp_fb: float
    excl_fb: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {
            "l1_alpha": self.l1_alpha,
            "comp_alpha": self.comp_alpha,
            "grad_alpha": self.grad_alpha,
            "lap_alpha": self.lap_alpha,
            "l1_fb": self.l1_fb,
            "lap_fb": self.lap_fb,
            "comp_fb": self.comp_fb,
            "excl_fb": self.excl_fb,
            "total": self.total,
        }


def _resolve_mask(mask: EvalMask | None, shape: tuple[int, int], name: str) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    if mask.shape != shape:
        raise DimensionMismatchError(name, mask.shape, "operands", shape)
    return mask.data


def _reduce(per_pixel: np.ndarray, mask: np.ndarray, reduction: str) -> float:
    total = float(np.sum(per_pixel[mask], dtype=np.float64))
    if reduction == "sum":
        return total
    if reduction == "mean":
        n = int(mask.sum())
        if n == 0:
            raise EmptyRegionError("mean reduction over an empty mask")
        return total / n
    raise ValueError(f"unknown reduction {reduction!r}")


def gradient_pair(arr: np.ndarray, mode: str = "forward") -> tuple[np.ndarray, np.ndarray]:
    """Return (dx, dy) in float64. Both operators have zero response to constants."""
    x = arr.astype(np.float64)
    if mode == "forward":
        dx = np.zeros_like(x)
        dy = np.zeros_like(x)
        dx[:, :-1] = x[:, 1:] - x[:, :-1]
        dy[:-1, :] = x[1:, :] - x[:-1, :]
        return dx, dy
    if mode == "sobel":
        dx = _correlate_axis(_correlate_axis(x, _SOBEL_DERIV, axis=1), _SOBEL_SMOOTH, axis=0)
        dy = _correlate_axis(_correlate_axis(x, _SOBEL_DERIV, axis=0), _SOBEL_SMOOTH, axis=1)
        return dx, dy
    raise ValueError(f"unknown gradient mode {mode!r}")


def l1_alpha(
    pred: PixelMap, gt: PixelMap, mask: EvalMask | None = None, reduction: str = "sum"
) -> float:
    """Sum over masked pixels of |pred - gt|."""
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)
    m = _resolve_mask(mask, pred.shape, "mask")
    diff = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
    return _reduce(diff, m, reduction)


def _composition_residual(
    alpha: np.ndarray, fg: np.ndarray, bg: np.ndarray, image: np.ndarray
) -> np.ndarray:
    a = alpha.astype(np.float64)[None]
    resid = image.astype(np.float64) - a * fg.astype(np.float64) - (1.0 - a) * bg.astype(np.float64)
    return np.abs(resid).sum(axis=0)


def composition_loss_alpha(
    pred_alpha: PixelMap,
    gt_fg: ColorMap,
    gt_bg: ColorMap,
    image: ColorMap,
    mask: EvalMask | None = None,
    reduction: str = "sum",
) -> float:
    """Reconstruction residual of the image using predicted alpha over true layers."""
    for name, op in (("gt_fg", gt_fg), ("gt_bg", gt_bg), ("image", image)):
        if op.shape != pred_alpha.shape:
            raise DimensionMismatchError("pred_alpha", pred_alpha.shape, name, op.shape)
    m = _resolve_mask(mask, pred_alpha.shape, "mask")
    per_pixel = _composition_residual(pred_alpha.data, gt_fg.data, gt_bg.data, image.data)
    return _reduce(per_pixel, m, reduction)


def gradient_loss_alpha(
    pred: PixelMap,
    gt: PixelMap,
    mask: EvalMask | None = None,
    reduction: str = "sum",
    gradient_mode: str = "forward",
) -> float:
    """L1 distance between the discrete gradients of the two mattes."""
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)
    m = _resolve_mask(mask, pred.shape, "mask")
    px, py = gradient_pair(pred.data, gradient_mode)
    gx, gy = gradient_pair(gt.data, gradient_mode)
    per_pixel = np.abs(px - gx) + np.abs(py - gy)
    return _reduce(per_pixel, m, reduction)


def band_weighted_l1(pyr_pred, pyr_gt) -> float:
    """Sum over band-pass levels of 2^(s-1) * L1(level difference), s = 1-based."""
    if len(pyr_pred.levels) != len(pyr_gt.levels):
        raise DimensionMismatchError(
            "pred pyramid", (len(pyr_pred.levels),), "gt pyramid", (len(pyr_gt.levels),)
        )
    total = 0.0
    for s, (lp, lg) in enumerate(zip(pyr_pred.levels, pyr_gt.levels), start=1):
        if lp.shape != lg.shape:
            raise DimensionMismatchError("pred level", lp.shape, "gt level", lg.shape)
        diff = np.abs(lp.data.astype(np.float64) - lg.data.astype(np.float64))
        total += float(2 ** (s - 1)) * float(diff.sum(dtype=np.float64))
    return total


def laplacian_loss(pred: PixelMap, gt: PixelMap, levels: int = PYRAMID_LOSS_LEVELS) -> float:
    """Multi-scale band-pass L1 with 2^(s-1) weights; whole-image (no mask)."""
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)
    return band_weighted_l1(build_pyramid(pred, levels), build_pyramid(gt, levels))


def laplacian_loss_color(pred: ColorMap, gt: ColorMap, levels: int = PYRAMID_LOSS_LEVELS) -> float:
    """Per-channel laplacian loss, summed over the three channels."""
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)
    return sum(
        laplacian_loss(PixelMap(pred.data[c]), PixelMap(gt.data[c]), levels) for c in range(3)
    )


def l1_fb(
    pred_fg: ColorMap,
    pred_bg: ColorMap,
    gt_fg: ColorMap,
    gt_bg: ColorMap,
    mask: EvalMask | None = None,
    reduction: str = "sum",
) -> float:
    """L1 over the six predicted layer channels against ground truth."""
    for name, op in (("pred_bg", pred_bg), ("gt_fg", gt_fg), ("gt_bg", gt_bg)):
        if op.shape != pred_fg.shape:
            raise DimensionMismatchError("pred_fg", pred_fg.shape, name, op.shape)
    m = _resolve_mask(mask, pred_fg.shape, "mask")
    df = np.abs(pred_fg.data.astype(np.float64) - gt_fg.data.astype(np.float64)).sum(axis=0)
    db = np.abs(pred_bg.data.astype(np.float64) - gt_bg.data.astype(np.float64)).sum(axis=0)
    return _reduce(df + db, m, reduction)


def exclusion_loss(
    pred_fg: ColorMap,
    pred_bg: ColorMap,
    mask: EvalMask | None = None,
    reduction: str = "sum",
    gradient_mode: str = "forward",
) -> float:
    """Product of the layers' L1 gradient magnitudes, penalizing co-located edges.

    Gradient magnitudes are summed over channels before the product, so the
    loss is zero whenever either layer is locally flat.
    """
    if pred_fg.shape != pred_bg.shape:
        raise DimensionMismatchError("pred_fg", pred_fg.shape, "pred_bg", pred_bg.shape)
    m = _resolve_mask(mask, pred_fg.shape, "mask")

    def grad_mag(color: ColorMap) -> np.ndarray:
        total = np.zeros(color.shape, dtype=np.float64)
        for c in range(3):
            dx, dy = gradient_pair(color.data[c], gradient_mode)
            total += np.abs(dx) + np.abs(dy)
        return total

    per_pixel = grad_mag(pred_fg) * grad_mag(pred_bg)
    return _reduce(per_pixel, m, reduction)


def composition_loss_fb(
    pred_fg: ColorMap,
    pred_bg: ColorMap,
    gt_alpha: PixelMap,
    image: ColorMap,
    mask: EvalMask | None = None,
    reduction: str = "sum",
) -> float:
    """Reconstruction residual using predicted layers under the true alpha."""
    for name, op in (("pred_bg", pred_bg), ("image", image)):
        if op.shape != pred_fg.shape:
            raise DimensionMismatchError("pred_fg", pred_fg.shape, name, op.shape)
    if gt_alpha.shape != pred_fg.shape:
        raise DimensionMismatchError("pred_fg", pred_fg.shape, "gt_alpha", gt_alpha.shape)
    m = _resolve_mask(mask, pred_fg.shape, "mask")
    per_pixel = _composition_residual(gt_alpha.data, pred_fg.data, pred_bg.data, image.data)
    return _reduce(per_pixel, m, reduction)


def total_loss(
    pred: PredictionSet,
    gt: PredictionSet,
    image: ColorMap,
    mask_alpha: EvalMask | None = None,
    mask_fb: EvalMask | None = None,
    gradient_mode: str = "forward",
) -> LossReport:
    """All eight losses plus the combined value.

    The combination weighs the four alpha terms at 1 and the four layer terms
    at 0.25. Masks apply to the pixelwise terms; the laplacian terms are
    whole-image by construction (a band-pass level has no per-pixel mask).
    """
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)
    if image.shape != gt.shape:
        raise DimensionMismatchError("image", image.shape, "gt", gt.shape)
    terms = {
        "l1_alpha": l1_alpha(pred.alpha, gt.alpha, mask_alpha),
        "comp_alpha": composition_loss_alpha(pred.alpha, gt.fg, gt.bg, image, mask_alpha),
        "grad_alpha": gradient_loss_alpha(
            pred.alpha, gt.alpha, mask_alpha, gradient_mode=gradient_mode
        ),
        "lap_alpha": laplacian_loss(pred.alpha, gt.alpha),
        "l1_fb": l1_fb(pred.fg, pred.bg, gt.fg, gt.bg, mask_fb),
        "lap_fb": laplacian_loss_color(pred.fg, gt.fg) + laplacian_loss_color(pred.bg, gt.bg),
        "comp_fb": composition_loss_fb(pred.fg, pred.bg, gt.alpha, image, mask_fb),
        "excl_fb": exclusion_loss(pred.fg, pred.bg, mask_fb, gradient_mode=gradient_mode),
    }
    total = (
        terms["l1_alpha"]
        + terms["comp_alpha"]
        + terms["grad_alpha"]
        + terms["lap_alpha"]
        + FB_WEIGHT * (terms["l1_fb"] + terms["lap_fb"] + terms["excl_fb"] + terms["comp_fb"])
    )
    return LossReport(total=total, **terms)
