"""The four standard matte metrics plus premultiplied-foreground scoring.

Raw values are canonical at the API. Benchmark tables quote SAD, GRAD and
CONN divided by 1000 and MSE multiplied by 1000; those conventions are
applied only when formatting a report.

GRAD compares derivative-of-Gaussian gradient vectors: the per-pixel error
is ||grad(pred) - grad(gt)||^q with sigma = 1.4 and q = 2 by default.

CONN measures how far each pixel's value sits above the highest threshold
at which the pixel is still 4-connected to a shared source region (the
largest component where both mattes are nearly opaque). Degradations
smaller than theta are forgiven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DimensionMismatchError, MattingError, PixelMap, PredictionSet, premultiply
from .losses import EmptyRegionError, EvalMask

GRAD_SIGMA = 1.4
GRAD_EXPONENT = 2.0
CONN_STEP = 0.1
CONN_THETA = 0.15


class ConnectivitySourceError(MattingError):
    """Neither matte has a nearly-opaque region to anchor connectivity."""


@dataclass(frozen=True)
class MetricReport:
    """Raw metric values plus the name of the scored region."""

    sad: float
    mse: float
    grad: float
    conn: float
    region: str

    def table(self) -> dict[str, float]:
        """Benchmark-table conventions: SAD, GRAD, CONN / 1000 and MSE x 1000."""
        return {
            "sad": self.sad / 1000.0,
            "mse": self.mse * 1000.0,
            "grad": self.grad / 1000.0,
            "conn": self.conn / 1000.0,
        }

    def as_dict(self) -> dict:
        return {
            "sad": self.sad,
            "mse": self.mse,
            "grad": self.grad,
            "conn": self.conn,
            "region": self.region,
            "table": self.table(),
        }


def _region_mask(region: EvalMask | None, shape: tuple[int, int]) -> np.ndarray:
    if region is None:
        return np.ones(shape, dtype=bool)
    if region.shape != shape:
        raise DimensionMismatchError("region", region.shape, "operands", shape)
    return region.data


def _check_pair(pred, gt):
    if pred.shape != gt.shape:
        raise DimensionMismatchError("pred", pred.shape, "gt", gt.shape)


def sad(pred: PixelMap, gt: PixelMap, region: EvalMask | None = None) -> float:
    """Sum of absolute differences over the region."""
    _check_pair(pred, gt)
    m = _region_mask(region, pred.shape)
    diff = np.abs(pred.data.astype(np.float64) - gt.data.astype(np.float64))
    return float(np.sum(diff[m], dtype=np.float64))


def mse(pred: PixelMap, gt: PixelMap, region: EvalMask | None = None) -> float:
    """Mean squared difference over the region."""
    _check_pair(pred, gt)
    m = _region_mask(region, pred.shape)
    n = int(m.sum())
    if n == 0:
        raise EmptyRegionError("mse over an empty region")
    diff = pred.data.astype(np.float64) - gt.data.astype(np.float64)
    return float(np.sum((diff * diff)[m], dtype=np.float64)) / n


def gaussian_derivative_kernels(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """L2-normalized derivative-of-Gaussian kernel pair (hx, hy = hx.T)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(xs**2) / (2.0 * sigma**2)) / (sigma * math.sqrt(2.0 * math.pi))
    dg = -xs / sigma**2 * g
    hx = np.outer(g, dg)
    hx = hx / np.sqrt(np.sum(hx * hx))
    return hx, hx.T


def _gauss_gradient(arr: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    hx, hy = gaussian_derivative_kernels(sigma)
    x = arr.astype(np.float64)
    gx = ndimage.convolve(x, hx, mode="nearest")
    gy = ndimage.convolve(x, hy, mode="nearest")
    return gx, gy


def gradient_error(
    pred: PixelMap,
    gt: PixelMap,
    region: EvalMask | None = None,
    sigma: float = GRAD_SIGMA,
    q: float = GRAD_EXPONENT,
) -> float:
    """Sum over the region of the gradient-vector difference norm to the q."""
    _check_pair(pred, gt)
    m = _region_mask(region, pred.shape)
    px, py = _gauss_gradient(pred.data, sigma)
    gx, gy = _gauss_gradient(gt.data, sigma)
    norms = np.sqrt((px - gx) ** 2 + (py - gy) ** 2)
    return float(np.sum((norms**q)[m], dtype=np.float64))


_FOUR_CONN = ndimage.generate_binary_structure(2, 1)


def _largest_component(mask: np.ndarray) -> np.ndarray | None:
    labels, count = ndimage.label(mask, structure=_FOUR_CONN)
    if count == 0:
        return None
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def _reachable(mask: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Pixels of `mask` 4-connected to any source pixel inside the mask."""
    seeds = source & mask
    if not seeds.any():
        return np.zeros_like(mask)
    labels, _ = ndimage.label(mask, structure=_FOUR_CONN)
    hit = np.unique(labels[seeds])
    return np.isin(labels, hit[hit > 0])


def _connectivity_level(matte: np.ndarray, omega: np.ndarray, step: float) -> np.ndarray:
    """Largest threshold at which each pixel still connects to omega.

    Thresholded supports shrink as t grows, so levels are filled by sweeping
    k upward; level 0 always holds because the full grid is one component.
    """
    level = np.zeros(matte.shape, dtype=np.float64)
    for k in range(1, math.floor(1.0 / step) + 1):
        t = k * step
        reached = _reachable(matte >= t, omega)
        if not reached.any():
            break
        level[reached] = t
    return level


def connectivity_error(
    pred: PixelMap,
    gt: PixelMap,
    region: EvalMask | None = None,
    step: float = CONN_STEP,
    theta: float = CONN_THETA,
) -> float:
    """Sum over the region of the connectivity-fidelity difference.

    The source region is shared: the largest 4-connected component of the
    pixels where both mattes are >= 1 - step. Connectivity levels are
    computed on the whole image; only the final comparison is masked.
    """
    _check_pair(pred, gt)
    if not 0.0 < step <= 0.5:
        raise ValueError(f"step must be in (0, 0.5], got {step}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    m = _region_mask(region, pred.shape)
    p = pred.data.astype(np.float64)
    g = gt.data.astype(np.float64)
    omega = _largest_component((p >= 1.0 - step) & (g >= 1.0 - step))
    if omega is None:
        raise ConnectivitySourceError(
            f"no pixel has both mattes >= {1.0 - step:g}; connectivity is undefined"
        )

    def phi(matte: np.ndarray) -> np.ndarray:
        dist = matte - _connectivity_level(matte, omega, step)
        out = np.ones_like(matte)
        big = dist >= theta
        out[big] = 1.0 - dist[big]
        return out

    return float(np.sum(np.abs(phi(p) - phi(g))[m], dtype=np.float64))


def fg_composite_metrics(
    pred: PredictionSet, gt: PredictionSet, region: EvalMask | None = None
) -> tuple[float, float]:
    """SAD and MSE of the premultiplied foregrounds, channels summed.

    MSE divides the channel-summed squared error by the region pixel count.
    """
    _check_pair(pred, gt)
    m = _region_mask(region, pred.shape)
    n = int(m.sum())
    if n == 0:
        raise EmptyRegionError("fg composite metrics over an empty region")
    p = premultiply(pred.alpha, pred.fg).data.astype(np.float64)
    g = premultiply(gt.alpha, gt.fg).data.astype(np.float64)
    diff = p - g
    sad_fg = float(np.sum(np.abs(diff).sum(axis=0)[m], dtype=np.float64))
    mse_fg = float(np.sum((diff * diff).sum(axis=0)[m], dtype=np.float64)) / n
    return sad_fg, mse_fg


def evaluate_alpha(
    pred: PixelMap,
    gt: PixelMap,
    region: EvalMask | None = None,
    region_name: str = "full",
    sigma: float = GRAD_SIGMA,
    q: float = GRAD_EXPONENT,
    step: float = CONN_STEP,
    theta: float = CONN_THETA,
) -> MetricReport:
    """All four matte metrics in one report."""
    return MetricReport(
        sad=sad(pred, gt, region),
        mse=mse(pred, gt, region),
        grad=gradient_error(pred, gt, region, sigma=sigma, q=q),
        conn=connectivity_error(pred, gt, region, step=step, theta=theta),
        region=region_name,
    )
