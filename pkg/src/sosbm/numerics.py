"""Special functions, adaptive quadrature and root finding.

The scaled complementary error function uses the Chebyshev fit of
Shepherd & Laframboise (1981).  The core is plain arithmetic so the same
source compiles under numba for the samplers and runs on numpy arrays for
the kernel, which keeps both routes bit-compatible on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numba as nb
import numpy as np
from scipy.optimize import brentq

from .errors import BracketError

SQRT_PI = math.sqrt(math.pi)
INV_SQRT_PI = 1.0 / SQRT_PI

# Beyond this argument z * erfcx(z) equals 1/sqrt(pi) to double precision.
_ASYMPTOTIC_Z = 1e9


def _erfcx_nonneg(x):
    # Valid for x >= 0; works on floats and on numpy arrays alike.
    t = 3.97886080735226 / (x + 3.97886080735226)
    u = t - 0.5
    y = (((((((((u * 0.00127109764952614092 + 1.19314022838340944e-4) * u
                - 0.003963850973605135) * u - 8.70779635317295828e-4) * u
              + 0.00773672528313526668) * u + 0.00383335126264887303) * u
            - 0.0127223813782122755) * u - 0.0133823644533460069) * u
          + 0.0161315329733252248) * u + 0.0390976845588484035) * u + 0.00249367200053503304
    y = ((((((((((((y * u - 0.0838864557023001992) * u - 0.119463959964325415) * u
                  + 0.0166207924969367356) * u + 0.357524274449531043) * u
                + 0.805276408752910567) * u + 1.18902982909273333) * u
              + 1.37040217682338167) * u + 1.31314653831023098) * u
            + 1.07925515155856677) * u + 0.774368199119538609) * u
          + 0.490165080585318424) * u + 0.275374741597376782) * t
    return y


erfcx_nonneg_scalar = nb.njit(cache=True, nogil=True)(_erfcx_nonneg)


@nb.njit(cache=True, nogil=True)
def z_erfcx_scalar(z: float) -> float:
    """z * erfcx(z) for z >= 0, finite even when z overflows."""
    if z > _ASYMPTOTIC_Z:
        return INV_SQRT_PI
    return z * erfcx_nonneg_scalar(z)


def scaled_erfc(z):
    """exp(z**2) * erfc(z), without overflow for large positive z."""
    z = np.asarray(z, dtype=float)
    pos = _erfcx_nonneg(np.abs(z))
    with np.errstate(over="ignore"):
        neg = 2.0 * np.exp(z * z) - pos
    out = np.where(z >= 0.0, pos, neg)
    return out[()] if out.ndim == 0 else out


erfcx = scaled_erfc


def z_scaled_erfc(z):
    """z * erfcx(z) for z >= 0; tends to 1/sqrt(pi) as z grows."""
    z = np.asarray(z, dtype=float)
    big = z > _ASYMPTOTIC_Z
    safe = np.where(big, 1.0, z)
    out = np.where(big, INV_SQRT_PI, safe * _erfcx_nonneg(safe))
    return out[()] if out.ndim == 0 else out


def erfc(z):
    """Complementary error function with small relative error for z >= 0."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    tail = np.exp(-a * a) * _erfcx_nonneg(a)
    out = np.where(z >= 0.0, tail, 2.0 - tail)
    return out[()] if out.ndim == 0 else out


def normal_sf(x):
    """Upper tail of the standard normal distribution."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def normal_cdf(x):
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def mills_constant(grid: np.ndarray | None = None) -> float:
    """Fitted sup of z * erfcx(z) over z > 0.

    The supremum is approached only as z grows, so the grid reaches far.
    """
    if grid is None:
        grid = np.logspace(-6, 12, 2000)
    return float(np.max(z_scaled_erfc(grid)))


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for :func:`integrate`.

    Infinite ends are cut at ``center +/- truncation_sd * scale`` where the
    caller supplies the center and scale of the dominating Gaussian.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    truncation_sd: float = 12.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions must be at least 16")
        if not self.truncation_sd > 0:
            raise ValueError("truncation_sd must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


class QuadratureResult(NamedTuple):
    value: float
    error: float
    converged: bool


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _truncated_window(lo: float, hi: float, center: float, radius: float) -> tuple[float, float]:
    if math.isinf(lo) and math.isinf(hi):
        return center - radius, center + radius
    if math.isinf(lo):
        return min(center - radius, hi - radius), hi
    if math.isinf(hi):
        return lo, max(center + radius, lo + radius)
    return lo, hi


def _pair_estimates(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray):
    x15, w15 = gauss_legendre(15)
    x31, w31 = gauss_legendre(31)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = np.concatenate([x15, x31])
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    low = half * (vals[:, :15] @ w15)
    high = half * (vals[:, 15:] @ w31)
    return low, high


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
    center: float = 0.0,
    scale: float = 1.0,
) -> QuadratureResult:
    """Globally adaptive Gauss-Legendre quadrature of a vectorized ``f``.

    Each panel is integrated with 15 and 31 nodes and the difference serves
    as its error estimate.  While the summed error exceeds the tolerance the
    panels carrying the largest errors are bisected.  ``f`` is called once
    per sweep with every new node.
    """
    if lo == hi:
        return QuadratureResult(0.0, 0.0, True)
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0
    a, b = _truncated_window(float(lo), float(hi), float(center), spec.truncation_sd * float(scale))
    cuts = sorted({a, b, *(float(p) for p in breakpoints if a < p < b)})
    left = np.array(cuts[:-1])
    right = np.array(cuts[1:])
    low, high = _pair_estimates(f, left, right)
    err = np.abs(high - low)
    tiny = 64 * np.finfo(float).eps
    converged = True
    while True:
        total = high.sum()
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if not np.isfinite(total):
            converged = False
            break
        # Panels at rounding-level width cannot be refined further.
        width = right - left
        splittable = (width > tiny * np.maximum(np.abs(left), np.abs(right))) & (width > 1e-15 * (b - a))
        budget = np.where(splittable, err, 0.0)
        if err.sum() <= tol or not budget.any():
            break
        order = np.argsort(budget)[::-1]
        excess = np.cumsum(budget[order])
        # Split the fewest panels whose combined error brings the rest under tol/2.
        count = int(np.searchsorted(excess, err.sum() - 0.5 * tol)) + 1
        pick = order[:max(1, min(count, int(splittable.sum())))]
        if left.size + pick.size > spec.max_subdivisions:
            converged = False
            break
        keep = np.ones(left.size, dtype=bool)
        keep[pick] = False
        mid = 0.5 * (left[pick] + right[pick])
        new_left = np.concatenate([left[pick], mid])
        new_right = np.concatenate([mid, right[pick]])
        nl, nh = _pair_estimates(f, new_left, new_right)
        left = np.concatenate([left[keep], new_left])
        right = np.concatenate([right[keep], new_right])
        low = np.concatenate([low[keep], nl])
        high = np.concatenate([high[keep], nh])
        err = np.concatenate([err[keep], np.abs(nh - nl)])
    value = float(high.sum())
    error = float(err.sum())
    if not math.isfinite(value) or error > max(spec.abs_tol, spec.rel_tol * abs(value)):
        converged = False
    return QuadratureResult(sign * value, error, converged)


def integrate_fixed(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, order: int = 20) -> np.ndarray:
    """Gauss-Legendre integral of ``f`` over each consecutive pair of ``edges``."""
    x, w = gauss_legendre(order)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return half * (vals @ w)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of a monotone function on a sign-changing bracket."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0.0:
        raise BracketError(f"f({lo}) = {flo} and f({hi}) = {fhi} have the same sign")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def ks_distance(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray],
                atoms: dict[float, float] | None = None) -> float:
    """Kolmogorov-Smirnov distance between a sample and a CDF with atoms.

    ``cdf`` is right-continuous; ``atoms`` maps each jump location to its
    size so left limits can be formed there.
    """
    values, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
    total = counts.sum()
    right_emp = np.cumsum(counts) / total
    left_emp = right_emp - counts / total
    right = np.asarray(cdf(values), dtype=float)
    left = right.copy()
    for where, size in (atoms or {}).items():
        left[values == where] -= size
    return float(max(np.max(np.abs(right_emp - right)), np.max(np.abs(left_emp - left))))


def ks_threshold(count: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value; 1.63/sqrt(N) at alpha = 1%."""
    coefficients = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}
    if alpha in coefficients:
        c = coefficients[alpha]
    else:
        c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c / math.sqrt(count)
