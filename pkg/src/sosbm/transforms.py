"""Space transforms linking oscillating and skew-sticky processes.

``t1`` divides by the one-sided volatility and turns a skew-oscillating-
sticky Brownian motion into a skew-sticky one with mapped parameters.  ``t2``
removes a general volatility profile down to its one-sided limits at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonEllipticError, NonInvertibleError
from .kernel.params import SkewStickyParams, SosBmParams
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, integrate


def t1(params: SosBmParams, x):
    """x / sigma0(x): sigma_minus on x <= 0, sigma_plus on x > 0."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, x / params.sigma_plus, x / params.sigma_minus)
    return out[()] if out.ndim == 0 else out


def t1_inverse(params: SosBmParams, y):
    y = np.asarray(y, dtype=float)
    out = np.where(y > 0, y * params.sigma_plus, y * params.sigma_minus)
    return out[()] if out.ndim == 0 else out


def t2(sigma: Callable[[np.ndarray], np.ndarray], x: float, sigma_minus: float | None = None,
       sigma_plus: float | None = None, spec: QuadratureSpec = DEFAULT_QUADRATURE,
       floor: float = 1e-8) -> float:
    """Integral from 0 to x of sigma0(y) / sigma(y).

    The one-sided limits of sigma at 0 define sigma0; they are read off
    ``sigma`` at +/-1e-12 unless given.  sigma is probed on a grid between 0
    and x and must stay above ``floor`` times the larger limit.
    """
    near = 1e-12
    left = float(sigma(np.array([-near]))[0]) if sigma_minus is None else float(sigma_minus)
    right = float(sigma(np.array([near]))[0]) if sigma_plus is None else float(sigma_plus)
    scale = max(abs(left), abs(right), 1.0)
    for side, value in (("left", left), ("right", right)):
        if not (math.isfinite(value) and value > floor * scale):
            raise NonEllipticError(f"{side} limit of sigma at 0 is {value}")
    if x == 0:
        return 0.0
    probe = np.concatenate([np.sign(x) * np.logspace(-12, math.log10(abs(x)), 200),
                            np.linspace(0.0, float(x), 1001)[1:]])
    values = np.asarray(sigma(probe), dtype=float)
    if not np.all(np.isfinite(values) & (values > floor * scale)):
        raise NonEllipticError("sigma is not bounded away from 0 on the integration range")

    def integrand(y):
        s = np.asarray(sigma(y), dtype=float)
        if not np.all(np.isfinite(s) & (s > 0)):
            raise NonEllipticError("sigma is not bounded away from 0 on the integration range")
        return np.where(y > 0, right, left) / s

    res = integrate(integrand, 0.0, float(x), spec)
    return res.value


@dataclass(frozen=True)
class ParamMap:
    """Skew-sticky image of an oscillating source, with the local-time factor.

    ``local_time_factor`` converts the local time at 0 of the source into
    that of the image under t1.
    """

    source: SosBmParams
    target: SkewStickyParams
    local_time_factor: float


def _denominator(p: SosBmParams) -> float:
    return p.sigma_minus * (1.0 + p.beta) + p.sigma_plus * (1.0 - p.beta)


def map_params(source: SosBmParams) -> ParamMap:
    """Parameters of t1(X) for X skew-oscillating-sticky."""
    source = source.as_sos()
    d = _denominator(source)
    rho = source.rho * 2.0 * source.sigma_minus * source.sigma_plus / d
    beta = (source.sigma_minus * (1.0 + source.beta) - source.sigma_plus * (1.0 - source.beta)) / d
    beta = min(1.0, max(-1.0, beta))
    factor = d / (2.0 * source.sigma_plus * source.sigma_minus)
    return ParamMap(source, SkewStickyParams(rho, beta), factor)


def inverse_map_params(target: SkewStickyParams, sigma_minus: float, sigma_plus: float) -> SosBmParams:
    """Source parameters whose t1 image is ``target`` for the given volatilities."""
    b1 = target.beta
    if b1 == 1.0:
        beta = 1.0
    elif b1 == -1.0:
        beta = -1.0
    else:
        # (1 + beta)/(1 - beta) = sigma_plus (1 + b1) / (sigma_minus (1 - b1))
        ratio = sigma_plus * (1.0 + b1) / (sigma_minus * (1.0 - b1))
        beta = (ratio - 1.0) / (ratio + 1.0)
    d = sigma_minus * (1.0 + beta) + sigma_plus * (1.0 - beta)
    rho = target.rho * d / (2.0 * sigma_minus * sigma_plus)
    return SosBmParams(rho, beta, sigma_minus, sigma_plus)


def oscillating_equivalent(source: SosBmParams) -> SosBmParams:
    """Unskewed source with the same t1 image.

    Skewness at 0 can be traded for a jump in volatility: sigma_plus/(1 + beta)
    on the right and sigma_minus/(1 - beta) on the left.
    """
    source.require_non_reflected()
    return SosBmParams(source.rho, 0.0, source.sigma_minus / (1.0 - source.beta),
                       source.sigma_plus / (1.0 + source.beta))


def pushforward_params(source: SosBmParams) -> SkewStickyParams:
    """Image parameters obtained by transporting scale function and speed measure.

    The source has scale x/(1 +/- beta) and speed density (1 +/- beta)/sigma^2
    on each side plus an atom rho.  After y = x/sigma the scale is
    sigma y/(1 +/- beta) and the speed density (1 +/- beta)/sigma.  Matching
    the skew-sticky pair up to the normalization (s, m) -> (c s, m/c) fixes c
    from the two sides and then reads off the image parameters.
    """
    source = source.as_sos()
    right = (1.0 + source.beta) / source.sigma_plus
    left = (1.0 - source.beta) / source.sigma_minus
    # Image speed density is (1 + beta1)/c on the right and (1 - beta1)/c on the left.
    c = 2.0 / (right + left)
    beta1 = c * right - 1.0
    return SkewStickyParams(source.rho * c, min(1.0, max(-1.0, beta1)))


def local_time_factor(left_slope: float, right_slope: float, beta: float) -> float:
    """Ratio of local times at 0 of f(X) and X for a map f kinked at 0.

    Equals ((f'(0+) - f'(0-)) * beta + f'(0+) + f'(0-)) / 2.
    """
    for name, slope in (("left", left_slope), ("right", right_slope)):
        if not (math.isfinite(slope) and slope > 0):
            raise NonInvertibleError(f"{name} derivative at 0 must be positive and finite, got {slope}")
    return ((right_slope - left_slope) * beta + right_slope + left_slope) / 2.0


def t1_slopes(params: SosBmParams) -> tuple[float, float]:
    return 1.0 / params.sigma_minus, 1.0 / params.sigma_plus


@dataclass(frozen=True)
class ReductionReport:
    config: str
    ks_statistic: float
    ks_threshold: float
    zero_sets_match: bool
    count: int

    @property
    def passed(self) -> bool:
        return self.ks_statistic < self.ks_threshold and self.zero_sets_match

    def row(self) -> list:
        return [self.config, self.ks_statistic, self.ks_threshold, "true" if self.passed else "false"]


REDUCTION_COLUMNS = ("config", "ks_statistic", "ks_threshold", "pass")


def verify_reduction(source: SosBmParams, n: int, t: float, paths: int, seed: int, x: float = 0.0,
                     alpha: float = 0.01, jobs: int | None = None, zero_check_paths: int = 20) -> ReductionReport:
    """KS test of t1(X_t) for simulated oscillating paths against the image kernel.

    Also checks on a few full paths that t1 keeps the set of exact zeros.
    """
    from .kernel.density import TransitionCdf
    from .numerics import ks_distance, ks_threshold
    from .sampler import map_paths

    source = source.as_sos()
    source.require_non_reflected()
    image = map_params(source).target

    def endpoint(path):
        return float(t1(source, path.values[-1]))

    ends = np.array(map_paths(source, x, n, t, seed, paths, endpoint, jobs))
    cdf = TransitionCdf(image, t, float(t1(source, x)))
    stat = ks_distance(ends, cdf, {0.0: cdf.atom})

    def zeros_kept(path) -> bool:
        mapped = t1(source, path.values)
        return bool(np.array_equal(mapped == 0.0, path.values == 0.0))

    same = all(map_paths(source, x, n, t, seed + 1, zero_check_paths, zeros_kept, jobs))
    config = (f"rho={source.rho!r};beta={source.beta!r};sigma_minus={source.sigma_minus!r};"
              f"sigma_plus={source.sigma_plus!r}")
    return ReductionReport(config, stat, ks_threshold(paths, alpha), same, paths)
