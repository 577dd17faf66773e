"""Maximum-likelihood fusion of an (alpha, F, B) prediction with the image.

The three outputs of a matting predictor are generally not consistent with
the compositing equation. Treating each prediction as a Gaussian observation
of the true value and the image as a Gaussian observation of the composite
gives a quadratic likelihood whose block coordinate updates have closed
forms. One sweep updates F and B (anchored at the original predictions,
residual from the current iterates), then alpha from the freshly updated
layers. The alpha update's vector products run over the 3 color channels at
each pixel, so every pixel is independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ColorMap,
    DimensionMismatchError,
    PixelMap,
    PredictionSet,
    ValueRangeError,
)


@dataclass(frozen=True)
class FusionParams:
    """Variances of the three prediction channels and the reconstruction term.

    Only the ratios sigma_alpha_sq/sigma_c_sq and sigma_fb_sq/sigma_c_sq
    matter. The defaults weigh the alpha observation weakly (variance 10)
    so the composite residual mostly moves alpha.
    """

    sigma_alpha_sq: float = 10.0
    sigma_fb_sq: float = 1.0
    sigma_c_sq: float = 1.0
    iterations: int = 1

    def __post_init__(self):
        for name in ("sigma_alpha_sq", "sigma_fb_sq", "sigma_c_sq"):
            if not getattr(self, name) > 0:
                raise ValueRangeError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.iterations < 0:
            raise ValueRangeError(f"iterations must be >= 0, got {self.iterations}")


def _check_fuse_inputs(pred: PredictionSet, image: ColorMap):
    if image.shape != pred.shape:
        raise DimensionMismatchError("pred", pred.shape, "image", image.shape)
    for name, arr in (("fg", pred.fg.data), ("bg", pred.bg.data)):
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueRangeError(f"pred.{name} outside [0, 1]: min {lo}, max {hi}")


def fuse(pred: PredictionSet, image: ColorMap, params: FusionParams = FusionParams()) -> PredictionSet:
    """Run `params.iterations` block-update sweeps and clamp after each.

    iterations = 0 returns the input object unchanged. Consistent pixels
    (image exactly equal to the composite of the triple) are fixed points of
    the pre-clamp update: the layer residual vanishes and the alpha update
    is a no-op because alpha already equals the least-squares coefficient.
    The alpha denominator is 1 + a non-negative term, so no epsilon guard.
    """
    _check_fuse_inputs(pred, image)
    if params.iterations == 0:
        return pred

    c = image.data.astype(np.float64)
    f_pred = pred.fg.data.astype(np.float64)
    b_pred = pred.bg.data.astype(np.float64)
    a = pred.alpha.data.astype(np.float64)
    f = f_pred
    b = b_pred
    r_fb = params.sigma_fb_sq / params.sigma_c_sq
    r_a = params.sigma_alpha_sq / params.sigma_c_sq

    for _ in range(params.iterations):
        resid = c - a[None] * f - (1.0 - a)[None] * b
        f_new = f_pred + r_fb * a[None] * resid
        b_new = b_pred + r_fb * (1.0 - a)[None] * resid
        diff = f_new - b_new
        num = a + r_a * np.sum((c - b_new) * diff, axis=0)
        den = 1.0 + r_a * np.sum(diff * diff, axis=0)
        a = np.clip(num / den, 0.0, 1.0)
        f = np.clip(f_new, 0.0, 1.0)
        b = np.clip(b_new, 0.0, 1.0)

    return PredictionSet(alpha=PixelMap(a), fg=ColorMap(f), bg=ColorMap(b))


def composite_residual(pred: PredictionSet, image: ColorMap) -> float:
    """Reconstruction energy: sum over pixels of the squared composite error."""
    if image.shape != pred.shape:
        raise DimensionMismatchError("pred", pred.shape, "image", image.shape)
    a = pred.alpha.data.astype(np.float64)[None]
    resid = (
        image.data.astype(np.float64)
        - a * pred.fg.data.astype(np.float64)
        - (1.0 - a) * pred.bg.data.astype(np.float64)
    )
    return float(np.sum(resid * resid, dtype=np.float64))
