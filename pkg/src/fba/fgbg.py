"""Full-image foreground/background color estimation from an image and matte.

Per color channel, minimizes

    sum_i (a_i F_i + (1 - a_i) B_i - C_i)^2
    + lam * sum_edges w_pq ((F_p - F_q)^2 + (B_p - B_q)^2)

over a 4-neighborhood, with w_pq = |a_p - a_q| + EDGE_EPS. The data term
pins F where alpha is high and B where alpha is low; the matte-coupled
smoothness diffuses both layers across flat-matte regions, so the outputs
are defined at every pixel (the EDGE_EPS floor keeps the diffusion alive
where the matte is constant).

The normal equations form a symmetric positive definite 2N x 2N system per
channel (N = h * w, unknowns F and B interleaved as two planes). It is
solved matrix-free with Jacobi-preconditioned conjugate gradients, all in
float64 with sequential reductions, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ColorMap,
    ConvergenceError,
    DimensionMismatchError,
    PixelMap,
    ValueRangeError,
)

EDGE_EPS = 0.003
CG_MAX_ITERS_CAP = 50000


@dataclass(frozen=True)
class FBSolveParams:
    """Smoothness coupling and conjugate-gradient stopping parameters.

    cg_max_iters = None resolves to min(10 * h * w, 50000) at solve time.
    """

    smoothness_weight: float = 1.0
    cg_tolerance: float = 1e-7
    cg_max_iters: int | None = None

    def __post_init__(self):
        if self.smoothness_weight < 0:
            raise ValueRangeError(
                f"smoothness_weight must be >= 0, got {self.smoothness_weight}"
            )
        if not 0.0 < self.cg_tolerance < 1.0:
            raise ValueRangeError(f"cg_tolerance must be in (0, 1), got {self.cg_tolerance}")
        if self.cg_max_iters is not None and self.cg_max_iters < 1:
            raise ValueRangeError(f"cg_max_iters must be >= 1, got {self.cg_max_iters}")

    def resolve_max_iters(self, shape: tuple[int, int]) -> int:
        if self.cg_max_iters is not None:
            return self.cg_max_iters
        return min(10 * shape[0] * shape[1], CG_MAX_ITERS_CAP)


def matte_edge_weights(alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights for horizontal (h, w-1) and vertical (h-1, w) grid edges."""
    a = alpha.astype(np.float64)
    wh = np.abs(a[:, :-1] - a[:, 1:]) + EDGE_EPS
    wv = np.abs(a[:-1, :] - a[1:, :]) + EDGE_EPS
    return wh, wv


def _laplacian_apply(u: np.ndarray, wh: np.ndarray, wv: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    dh = wh * (u[:, :-1] - u[:, 1:])
    out[:, :-1] += dh
    out[:, 1:] -= dh
    dv = wv * (u[:-1, :] - u[1:, :])
    out[:-1, :] += dv
    out[1:, :] -= dv
    return out


def _laplacian_degree(wh: np.ndarray, wv: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    deg = np.zeros(shape, dtype=np.float64)
    deg[:, :-1] += wh
    deg[:, 1:] += wh
    deg[:-1, :] += wv
    deg[1:, :] += wv
    return deg


class _JointSystem:
    """Matrix-free normal equations for one channel's joint (F, B) unknowns."""

    def __init__(self, alpha: np.ndarray, lam: float):
        self.a = alpha.astype(np.float64)
        self.lam = lam
        self.wh, self.wv = matte_edge_weights(alpha)
        deg = _laplacian_degree(self.wh, self.wv, self.a.shape)
        self.diag_f = self.a**2 + lam * deg
        self.diag_b = (1.0 - self.a) ** 2 + lam * deg

    def apply(self, xf: np.ndarray, xb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        comp = self.a * xf + (1.0 - self.a) * xb
        yf = self.a * comp + self.lam * _laplacian_apply(xf, self.wh, self.wv)
        yb = (1.0 - self.a) * comp + self.lam * _laplacian_apply(xb, self.wh, self.wv)
        return yf, yb

    def rhs(self, channel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c = channel.astype(np.float64)
        return self.a * c, (1.0 - self.a) * c

    def precondition(self, rf: np.ndarray, rb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # Diagonal floor only here: with lam = 0 and alpha constant 1 the B
        # block has zero diagonal and Jacobi would divide by zero.
        return rf / np.maximum(self.diag_f, 1e-12), rb / np.maximum(self.diag_b, 1e-12)


def _dot(af: np.ndarray, ab: np.ndarray, bf: np.ndarray, bb: np.ndarray) -> float:
    return float(np.dot(af.ravel(), bf.ravel()) + np.dot(ab.ravel(), bb.ravel()))


def _norm(rf: np.ndarray, rb: np.ndarray) -> float:
    return float(np.sqrt(_dot(rf, rb, rf, rb)))


def _solve_channel(
    system: _JointSystem, channel: np.ndarray, tol: float, max_iters: int
) -> tuple[np.ndarray, np.ndarray]:
    bf, bb = system.rhs(channel)
    b_norm = _norm(bf, bb)
    if b_norm == 0.0:
        return np.zeros_like(bf), np.zeros_like(bb)

    # F = B = C satisfies the data term exactly, leaving only smoothness.
    xf = channel.astype(np.float64).copy()
    xb = channel.astype(np.float64).copy()
    yf, yb = system.apply(xf, xb)
    rf, rb = bf - yf, bb - yb
    zf, zb = system.precondition(rf, rb)
    pf, pb = zf.copy(), zb.copy()
    rz = _dot(rf, rb, zf, zb)

    iterations = 0
    for iterations in range(1, max_iters + 1):
        if _norm(rf, rb) / b_norm <= tol:
            # Recursive residuals drift; confirm against a fresh one.
            yf, yb = system.apply(xf, xb)
            rf, rb = bf - yf, bb - yb
            if _norm(rf, rb) / b_norm <= tol:
                return xf, xb
            zf, zb = system.precondition(rf, rb)
            pf, pb = zf.copy(), zb.copy()
            rz = _dot(rf, rb, zf, zb)
        qf, qb = system.apply(pf, pb)
        p_dot_q = _dot(pf, pb, qf, qb)
        if p_dot_q <= 0.0:
            break
        step = rz / p_dot_q
        xf += step * pf
        xb += step * pb
        rf -= step * qf
        rb -= step * qb
        zf, zb = system.precondition(rf, rb)
        rz_new = _dot(rf, rb, zf, zb)
        pf = zf + (rz_new / rz) * pf
        pb = zb + (rz_new / rz) * pb
        rz = rz_new

    yf, yb = system.apply(xf, xb)
    rf, rb = bf - yf, bb - yb
    final = _norm(rf, rb) / b_norm
    if final <= tol:
        return xf, xb
    raise ConvergenceError(
        f"conjugate gradients stalled at relative residual {final:.3e} "
        f"after {iterations} iterations (target {tol:.1e})",
        relative_residual=final,
        iterations=iterations,
    )


def solve_fb(
    image: ColorMap,
    alpha: PixelMap,
    params: FBSolveParams = FBSolveParams(),
    threads: int = 1,
) -> tuple[ColorMap, ColorMap]:
    """Estimate full-image F and B layers; outputs are clamped to [0, 1].

    threads > 1 solves the three channels concurrently. Channels share no
    state, so the result is identical to the sequential solve.
    """
    if image.shape != alpha.shape:
        raise DimensionMismatchError("image", image.shape, "alpha", alpha.shape)
    a = alpha.data
    if float(a.min()) < 0.0 or float(a.max()) > 1.0:
        raise ValueRangeError("alpha outside [0, 1]")
    system = _JointSystem(a, params.smoothness_weight)
    max_iters = params.resolve_max_iters(alpha.shape)

    def run(c: int) -> tuple[np.ndarray, np.ndarray]:
        return _solve_channel(system, image.data[c], params.cg_tolerance, max_iters)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(threads, 3)) as pool:
            results = list(pool.map(run, range(3)))
    else:
        results = [run(c) for c in range(3)]

    fg = np.empty((3,) + alpha.shape, dtype=np.float64)
    bg = np.empty((3,) + alpha.shape, dtype=np.float64)
    for c, (xf, xb) in enumerate(results):
        fg[c] = xf
        bg[c] = xb
    return ColorMap(np.clip(fg, 0.0, 1.0)), ColorMap(np.clip(bg, 0.0, 1.0))


def system_residual(
    image: ColorMap,
    alpha: PixelMap,
    fg: ColorMap,
    bg: ColorMap,
    params: FBSolveParams = FBSolveParams(),
) -> float:
    """Relative normal-equations residual of a candidate solution.

    Rebuilt from scratch (not the solver's recursive residual), max over the
    three channels: ||b - A x|| / ||b||, or the absolute norm when ||b|| = 0.
    """
    for name, op in (("alpha", alpha), ("fg", fg), ("bg", bg)):
        if op.shape != image.shape:
            raise DimensionMismatchError("image", image.shape, name, op.shape)
    system = _JointSystem(alpha.data, params.smoothness_weight)
    worst = 0.0
    for c in range(3):
        bf, bb = system.rhs(image.data[c])
        yf, yb = system.apply(fg.data[c].astype(np.float64), bg.data[c].astype(np.float64))
        r = _norm(bf - yf, bb - yb)
        b_norm = _norm(bf, bb)
        worst = max(worst, r / b_norm if b_norm > 0.0 else r)
    return worst
