"""Transition density of the skew-sticky Brownian motion and its integrals.

Densities are taken with respect to the speed measure
``m(dy) = a(y) dy + rho * delta_0(dy)`` unless the name says otherwise.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import QuadratureError
from ..numerics import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    find_root,
    gauss_legendre,
    integrate,
    integrate_fixed,
    z_scaled_erfc,
)
from .params import AnyParams, SkewStickyParams, SpeedMeasure, check_time, skew_weight

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _scalar(out: np.ndarray):
    return out[()] if out.ndim == 0 else out


def u1(t: float, x, y):
    """Heat kernel (2 pi t)^{-1/2} exp(-(x - y)^2 / 2t)."""
    t = check_time(t)
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return _scalar(np.asarray(_INV_SQRT_2PI / math.sqrt(t) * np.exp(-d * d / (2.0 * t))))


def u2(t: float, x, y):
    """Heat kernel evaluated at |x| + |y|, the mirror term."""
    t = check_time(t)
    r = np.abs(x) + np.abs(y)
    return _scalar(np.asarray(_INV_SQRT_2PI / math.sqrt(t) * np.exp(-r * r / (2.0 * t))))


def killed_density(t: float, x, y):
    """u1 - u2 on same-sign pairs, zero otherwise.

    This is the Lebesgue density of paths from x that have not reached 0 by t.
    """
    t = check_time(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    same = x * y > 0.0
    d = x - y
    base = _INV_SQRT_2PI / math.sqrt(t) * np.exp(-d * d / (2.0 * t))
    out = np.where(same, base * -np.expm1(-2.0 * np.abs(x * y) / t), 0.0)
    return _scalar(np.asarray(out))


def sticky_term(rho: float, t: float, x, y):
    """The sticky factor v_rho, evaluated without forming exp(2r/rho + 2t/rho^2).

    Written as exp(-r^2/2t) * z*erfcx(z) / (rho*z) with
    z = r/sqrt(2t) + sqrt(2t)/rho; the limit rho -> 0 gives u2.
    """
    t = check_time(t)
    r = np.abs(x) + np.abs(y)
    gauss = np.exp(-r * r / (2.0 * t))
    s = math.sqrt(2.0 * t)
    if rho == 0.0:
        return _scalar(np.asarray(gauss / (s * math.sqrt(math.pi))))
    with np.errstate(over="ignore"):
        z = r / s + s / rho
    w = rho * r / s + s
    return _scalar(np.asarray(gauss * z_scaled_erfc(z) / w))


def v_rho(params: AnyParams, t: float, x, y):
    return sticky_term(params.rho, t, x, y)


def transition_density(params: AnyParams, t: float, x, y):
    """p(t, x, y) with respect to the speed measure of ``params``."""
    params.require_non_reflected()
    t = check_time(t)
    a = skew_weight(params.beta, y)
    return _scalar(np.asarray(killed_density(t, x, y) / a + sticky_term(params.rho, t, x, y)))


def continuous_density(params: AnyParams, t: float, x, y):
    """Lebesgue density of the absolutely continuous part of the law of X_t."""
    params.require_non_reflected()
    t = check_time(t)
    a = skew_weight(params.beta, y)
    return _scalar(np.asarray(killed_density(t, x, y) + a * sticky_term(params.rho, t, x, y)))


def atom_probability(params: AnyParams, t: float, x):
    """P_x(X_t = 0) = rho * p(t, x, 0)."""
    t = check_time(t)
    if params.rho == 0.0:
        return _scalar(np.zeros_like(np.asarray(x, dtype=float)))
    return _scalar(np.asarray(params.rho * sticky_term(params.rho, t, x, 0.0)))


def _require(result, what: str) -> float:
    if not result.converged:
        raise QuadratureError(f"{what}: quadrature did not converge (error {result.error:.3g})")
    return result.value


def continuous_mass(params: AnyParams, t: float, x: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Integral of the continuous part of the law of X_t over the real line."""
    t = check_time(t)
    res = integrate(lambda y: continuous_density(params, t, x, y), -math.inf, math.inf, spec,
                    breakpoints=(0.0, x), center=x, scale=math.sqrt(t))
    return _require(res, "continuous mass")


class TransitionCdf:
    """Cumulative distribution of X_t started at x, built once and queried often.

    The real line is cut into short panels around the start point and zero;
    panel integrals are accumulated and partial panels use a fixed
    Gauss-Legendre rule.
    """

    def __init__(self, params: AnyParams, t: float, x: float, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                 panels_per_sd: int = 8, order: int = 20):
        params.require_non_reflected()
        self.params = params
        self.t = check_time(t)
        self.x = float(x)
        self.order = order
        sd = math.sqrt(self.t)
        radius = spec.truncation_sd * sd
        lo = min(self.x, 0.0) - radius
        hi = max(self.x, 0.0) + radius
        left = np.linspace(lo, 0.0, max(2, int(math.ceil(-lo / sd * panels_per_sd)) + 1))
        right = np.linspace(0.0, hi, max(2, int(math.ceil(hi / sd * panels_per_sd)) + 1))
        self.edges = np.concatenate([left, right[1:]])
        masses = integrate_fixed(self._density, self.edges, order)
        self.cumulative = np.concatenate([[0.0], np.cumsum(masses)])
        self.zero_index = len(left) - 1
        self.atom = float(atom_probability(params, self.t, self.x))
        self.left_of_zero = float(self.cumulative[self.zero_index])

    def _density(self, y):
        return continuous_density(self.params, self.t, self.x, y)

    def _partial(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        nodes, weights = gauss_legendre(self.order)
        half = 0.5 * (b - a)
        pts = 0.5 * (a + b)[:, None] + half[:, None] * nodes[None, :]
        vals = self._density(pts.ravel()).reshape(pts.shape)
        return half * (vals @ weights)

    def continuous_cdf(self, y) -> np.ndarray:
        """Mass of the continuous part on (-inf, y]."""
        y = np.clip(np.atleast_1d(np.asarray(y, dtype=float)), self.edges[0], self.edges[-1])
        k = np.clip(np.searchsorted(self.edges, y, side="right") - 1, 0, len(self.edges) - 2)
        return self.cumulative[k] + self._partial(self.edges[k], y)

    def __call__(self, y, left_limit: bool = False):
        """P(X_t <= y), or P(X_t < y) when ``left_limit`` is set."""
        y_arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y_arr)
        cont = self.continuous_cdf(flat)
        jump = (flat > 0.0) if left_limit else (flat >= 0.0)
        out = np.clip(cont + self.atom * jump, 0.0, 1.0).reshape(y_arr.shape)
        return _scalar(out)

    def quantile(self, u) -> np.ndarray:
        """Generalized inverse; every u inside the atom's jump maps to exactly 0.0."""
        u_arr = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u_arr)
        out = np.empty_like(flat)
        for i, ui in enumerate(flat):
            if self.left_of_zero <= ui < self.left_of_zero + self.atom:
                out[i] = 0.0
                continue
            target = ui if ui < self.left_of_zero else ui - self.atom
            k = int(np.clip(np.searchsorted(self.cumulative, target, side="right") - 1, 0, len(self.edges) - 2))
            a, b = self.edges[k], self.edges[k + 1]
            base = self.cumulative[k]

            def f(y, a=a, base=base, target=target):
                return base + self._partial(np.array([a]), np.array([y]))[0] - target

            if f(b) <= 0.0:
                out[i] = b
            elif f(a) >= 0.0:
                out[i] = a
            else:
                out[i] = find_root(f, a, b, tol=1e-14 * max(1.0, abs(a), abs(b)))
        return _scalar(out.reshape(u_arr.shape))


def transition_cdf(params: AnyParams, t: float, x: float, y, left_limit: bool = False):
    """P_x(X_t <= y) including the atom at 0 when y >= 0."""
    return TransitionCdf(params, t, x)(y, left_limit=left_limit)


def transition_quantile(params: AnyParams, t: float, x: float, u):
    """Inverse of :func:`transition_cdf`; u inside the atom's jump gives 0.0."""
    return TransitionCdf(params, t, x).quantile(u)


def semigroup_apply(params: AnyParams, t: float, h: Callable[[np.ndarray], np.ndarray],
                    spec: QuadratureSpec = DEFAULT_QUADRATURE,
                    breakpoints: tuple[float, ...] = ()) -> Callable:
    """Return x -> E_x[h(X_t)].

    ``h`` must accept numpy arrays.  Extra ``breakpoints`` mark known kinks of h.
    """
    params.require_non_reflected()
    t = check_time(t)
    h0 = float(np.asarray(h(np.array([0.0])))[0])

    # Dyadic cuts around 0 keep features of h at unit scale visible when the
    # Gaussian window is much wider than the support of h.
    radius = spec.truncation_sd * math.sqrt(t)

    def apply_one(x: float) -> float:
        top = int(math.log2(radius + abs(x) + 1.0)) + 2
        dyadic = [sgn * 2.0**j for j in range(-6, top) for sgn in (-1.0, 1.0)]
        res = integrate(lambda y: h(y) * continuous_density(params, t, x, y), -math.inf, math.inf, spec,
                        breakpoints=(0.0, x, *breakpoints, *dyadic), center=x, scale=math.sqrt(t))
        value = _require(res, "semigroup action")
        if params.rho > 0.0 and h0 != 0.0:
            value += h0 * float(atom_probability(params, t, x))
        return value

    def apply(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.array([apply_one(float(xi)) for xi in np.atleast_1d(x_arr)])
        return _scalar(out.reshape(x_arr.shape))

    return apply


def gamma_n(params: SkewStickyParams, h: Callable[[np.ndarray], np.ndarray], n: int, t: float, x: float,
            spec: QuadratureSpec = DEFAULT_QUADRATURE, breakpoints: tuple[float, ...] = ()) -> float:
    """Sum over i = 2..[nt] of E[h(sqrt(n) X_{(i-1)/n})] started at x.

    Uses the scaling of the process: each term is the semigroup of the
    parameters (rho sqrt(n), beta) at time i - 1 evaluated at sqrt(n) x.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t = check_time(t)
    scaled = params.scaled(math.sqrt(n))
    total = 0.0
    for i in range(2, int(math.floor(n * t)) + 1):
        total += semigroup_apply(scaled, i - 1, h, spec, breakpoints)(math.sqrt(n) * x)
    return total


def measure_integral(measure: SpeedMeasure | AnyParams, h: Callable[[np.ndarray], np.ndarray],
                     gamma: float | None = None, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                     scale: float = 1.0, breakpoints: tuple[float, ...] = ()) -> float:
    """m(h) when ``gamma`` is None, else the moment integral of |y|^gamma |h(y)|.

    ``scale`` sets the truncation radius for each half-line.
    """
    if not isinstance(measure, SpeedMeasure):
        measure = SpeedMeasure.of(measure)
    if gamma is None:
        def g(y):
            return np.asarray(h(y), dtype=float)
    else:
        if gamma < 0:
            raise ValueError("gamma must be >= 0")

        def g(y):
            return np.abs(y) ** gamma * np.abs(np.asarray(h(y), dtype=float))
    neg = [b for b in breakpoints if b < 0]
    pos = [b for b in breakpoints if b > 0]
    left = _require(integrate(g, -math.inf, 0.0, spec, breakpoints=neg, scale=scale), "measure integral")
    right = _require(integrate(g, 0.0, math.inf, spec, breakpoints=pos, scale=scale), "measure integral")
    total = measure.left_density * left + measure.right_density * right
    if measure.rho > 0.0 and (gamma is None or gamma == 0):
        h0 = float(np.asarray(h(np.array([0.0])))[0])
        total += measure.rho * (h0 if gamma is None else abs(h0))
    return total
