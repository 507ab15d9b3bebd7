"""Joint law of the terminal value, the local time at 0 and the time spent in [0, inf).

Excursion theory gives, for paths that reach 0, the density

    h(o - rho*l, a*l + x+ + y+) * h(t - o, (1 - a)*l + x- + y-)   on rho*l < o < t

with respect to m(dy) dl do, where h(s, b) is the first-passage density of
Brownian motion to level b and a = (1 + beta)/2 is the share of local time
carried by the positive side.  Paths that never reach 0 contribute the killed
density u1 - u2 with l = 0 and o equal to t or 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..numerics import DEFAULT_QUADRATURE, QuadratureSpec, erfc, integrate
from .density import _require, killed_density
from .params import AnyParams, check_time, skew_weight

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class JointLawPoint:
    """A point (y, l, o) of the joint law at horizon t from start x."""

    y: float
    ell: float
    o: float
    t: float
    x: float = 0.0

    def __post_init__(self):
        check_time(self.t)
        if self.ell < 0:
            raise ValueError("local time must be >= 0")


def first_passage_density(s, b):
    """Density at time s of the first hitting time of level b by Brownian motion."""
    s = np.asarray(s, dtype=float)
    b = np.abs(np.asarray(b, dtype=float))
    pos = s > 0
    safe = np.where(pos, s, 1.0)
    out = np.where(pos, b * _INV_SQRT_2PI / (safe * np.sqrt(safe)) * np.exp(-b * b / (2.0 * safe)), 0.0)
    return out[()] if out.ndim == 0 else out


def gaussian_density(s, b):
    """Centered normal density with variance s evaluated at b."""
    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=float)
    pos = s > 0
    safe = np.where(pos, s, 1.0)
    out = np.where(pos, _INV_SQRT_2PI / np.sqrt(safe) * np.exp(-b * b / (2.0 * safe)), 0.0)
    return out[()] if out.ndim == 0 else out


def positive_share(beta: float) -> float:
    """Fraction of the symmetric local time accrued by the positive part."""
    return 0.5 * (1.0 + beta)


def joint_density(params: AnyParams, point: JointLawPoint):
    """Absolutely continuous part of the joint law, w.r.t. m(dy) dl do.

    Points outside rho*l < o < t have density 0.
    """
    params.require_non_reflected()
    a = positive_share(params.beta)
    x, y, ell, o, t = point.x, point.y, point.ell, point.o, point.t
    if not (params.rho * ell < o < t):
        return 0.0
    first = first_passage_density(o - params.rho * ell, a * ell + max(x, 0.0) + max(y, 0.0))
    second = first_passage_density(t - o, (1.0 - a) * ell + max(-x, 0.0) + max(-y, 0.0))
    return float(first * second)


def joint_singular_density(params: AnyParams, t: float, x: float, y) -> np.ndarray:
    """Lebesgue density in y of the paths that never reach 0 (l = 0, o in {0, t})."""
    return killed_density(t, x, y)


def _split_density(params: AnyParams, x: float, ell: float, s1, s2):
    # s1 = o - rho*l and s2 = t - o are passed separately to avoid cancellation.
    a = positive_share(params.beta)
    b1 = a * ell + max(x, 0.0)
    b2 = (1.0 - a) * ell + max(-x, 0.0)
    h1, h2 = first_passage_density(s1, b1), first_passage_density(s2, b2)
    g1, g2 = gaussian_density(s1, b1), gaussian_density(s2, b2)
    return 2.0 * a * g1 * h2 + 2.0 * (1.0 - a) * h1 * g2 + params.rho * h1 * h2


def local_occupation_density(params: AnyParams, t: float, x: float, ell, o):
    """Density of (l, o) on the part of paths that reach 0, with y integrated out."""
    ell = np.asarray(ell, dtype=float)
    o = np.asarray(o, dtype=float)
    inside = (params.rho * ell < o) & (o < t)
    s1 = np.where(inside, o - params.rho * ell, 1.0)
    s2 = np.where(inside, t - o, 1.0)
    return np.where(inside, _split_density(params, x, ell, s1, s2), 0.0)


def no_hit_probability(t: float, x: float) -> float:
    """P_x(the path has not reached 0 by time t)."""
    return float(1.0 - erfc(abs(x) / math.sqrt(2.0 * t)))


def _occupation_integral(F: Callable[[np.ndarray, np.ndarray], np.ndarray], width: float,
                         spec: QuadratureSpec, what: str) -> float:
    # F receives (s1, s2) with s1 + s2 = width.  The substitution
    # s1 = width * w(u), w(u) = u^2 (3 - 2u), cancels the inverse square-root
    # singularities at both ends, and w(1 - u) = 1 - w(u) gives s2 without
    # cancellation.  Geometric cuts near u = 0 and u = 1 resolve
    # first-passage peaks at small levels.
    def G(u):
        v = 1.0 - u
        return F(width * u * u * (3.0 - 2.0 * u), width * v * v * (3.0 - 2.0 * v)) * width * 6.0 * u * v

    cuts = [2.0**-k for k in range(2, 30)] + [1.0 - 2.0**-k for k in range(2, 30)]
    return _require(integrate(G, 0.0, 1.0, spec, breakpoints=cuts), what)


def joint_expectation(params: AnyParams, t: float, x: float, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9),
                      include_singular: bool = True) -> float:
    """E_x[f(L_t, O_t)] for f of local time and occupation time of [0, inf).

    The y-integral is done in closed form; the (l, o) integral by nested
    adaptive quadrature.
    """
    params.require_non_reflected()
    t = check_time(t)
    a = positive_share(params.beta)
    ell_hi = 40.0 * math.sqrt(t) + 0.0
    if params.rho > 0:
        ell_hi = min(ell_hi, t / params.rho)

    def inner(ell: float) -> float:
        lo = params.rho * ell
        if lo >= t:
            return 0.0
        return _occupation_integral(
            lambda s1, s2: f(np.full_like(s1, ell), lo + s1) * _split_density(params, x, ell, s1, s2),
            t - lo, spec, "joint law inner integral")

    def outer(ells: np.ndarray) -> np.ndarray:
        return np.array([inner(float(e)) for e in ells])

    res = integrate(outer, 0.0, ell_hi, spec, breakpoints=[ell_hi * 2.0**-k for k in range(1, 12)])
    total = _require(res, "joint law outer integral")
    if include_singular and x != 0.0:
        o_value = t if x > 0 else 0.0
        total += float(f(np.array([0.0]), np.array([o_value]))[0]) * no_hit_probability(t, x)
    return total


def joint_terminal_marginal(params: AnyParams, t: float, x: float, y: float,
                            spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)) -> float:
    """Integrate the joint density over (l, o) at fixed y, w.r.t. m(dy).

    Adding the singular part divided by a(y) recovers the transition density.
    """
    a = positive_share(params.beta)
    ell_hi = 40.0 * math.sqrt(t)
    if params.rho > 0:
        ell_hi = min(ell_hi, t / params.rho)

    def inner(ell: float) -> float:
        lo = params.rho * ell
        if lo >= t:
            return 0.0
        b1 = a * ell + max(x, 0.0) + max(y, 0.0)
        b2 = (1.0 - a) * ell + max(-x, 0.0) + max(-y, 0.0)
        return _occupation_integral(
            lambda s1, s2: first_passage_density(s1, b1) * first_passage_density(s2, b2),
            t - lo, spec, "joint marginal inner integral")

    res = integrate(lambda ells: np.array([inner(float(e)) for e in ells]), 0.0, ell_hi, spec,
                    breakpoints=[ell_hi * 2.0**-k for k in range(1, 12)])
    value = _require(res, "joint marginal outer integral")
    return value + float(killed_density(t, x, y)) / float(skew_weight(params.beta, y))
