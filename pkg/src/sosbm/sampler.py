"""Exact simulation of skew-sticky and skew-oscillating-sticky paths on a grid.

One step from x over time t uses the strong Markov property at the first
visit to 0:

1. Propose y ~ N(x, t).  If y has the sign of x, keep it with probability
   1 - exp(-2xy/t), the chance a Brownian bridge from x to y avoids 0.
2. Otherwise draw the hitting time tau given tau < t, as x^2 / Z^2 with
   |Z| conditioned to exceed |x| / sqrt(t).
3. From 0 over the remaining time s: stay at 0 with probability
   erfcx(sqrt(2s)/rho); else choose the side + with probability
   (1 + beta)/2 and a magnitude G - E conditioned positive, where
   G ~ N(0, s) and E is exponential with mean rho/2.

Each step has bounded expected cost and no discretization bias.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numba as nb
import numpy as np

from .errors import NegativeStartError, ZeroStickinessError
from .kernel.density import TransitionCdf, atom_probability, continuous_density, u1
from .kernel.params import AnyParams, SkewStickyParams, SosBmParams, check_time
from .numerics import erfcx_nonneg_scalar
from .paths import SamplePath, Trace, steps_for
from .transforms import map_params

T = TypeVar("T")

# Below this rejection efficiency the proposal sampler switches to inversion.
MIN_REJECTION_EFFICIENCY = 0.05
ENVELOPE_HEADROOM = 1.1


@dataclass(frozen=True)
class RngStream:
    """Independent random stream for path ``stream`` of an experiment seeded by ``seed``."""

    seed: int
    stream: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream]))


@nb.njit(cache=True, nogil=True)
def _normal_tail(c, rng):
    # |Z| given |Z| > c for a standard normal Z.
    if c < 0.5:
        while True:
            z = abs(rng.standard_normal())
            if z > c:
                return z
    lam = 0.5 * (c + math.sqrt(c * c + 4.0))
    while True:
        z = c + rng.standard_exponential() / lam
        d = z - lam
        if rng.random() <= math.exp(-0.5 * d * d):
            return z


@nb.njit(cache=True, nogil=True)
def _excursion_from_zero(t, rho, beta, rng):
    if rho > 0.0:
        if rng.random() < erfcx_nonneg_scalar(math.sqrt(2.0 * t) / rho):
            return 0.0
    positive = rng.random() < 0.5 * (1.0 + beta)
    sd = math.sqrt(t)
    if rho == 0.0:
        mag = sd * abs(rng.standard_normal())
    else:
        # Draw G from N(0, t) restricted to G > 0 and reweighted by
        # P(E < G) = 1 - exp(-2G/rho), then E given E < G.  Short steps
        # propose G from the Rayleigh law, whose shape matches the target.
        while True:
            if sd < rho:
                g = sd * math.sqrt(2.0 * rng.standard_exponential())
                u = 2.0 * g / rho
                accept = -math.expm1(-u) / u
            else:
                g = sd * abs(rng.standard_normal())
                accept = -math.expm1(-2.0 * g / rho)
            if rng.random() >= accept:
                continue
            e = -0.5 * rho * math.log1p(rng.random() * math.expm1(-2.0 * g / rho))
            mag = g - e
            if mag > 0.0:
                break
    return mag if positive else -mag


@nb.njit(cache=True, nogil=True)
def _step(x, t, rho, beta, rng):
    if x != 0.0:
        y = x + math.sqrt(t) * rng.standard_normal()
        if x * y > 0.0 and rng.random() >= math.exp(-2.0 * x * y / t):
            return y
        ax = abs(x)
        z = _normal_tail(ax / math.sqrt(t), rng)
        tau = (ax / z) ** 2
        rest = t - tau
        if rest <= 0.0:
            return 0.0
        return _excursion_from_zero(rest, rho, beta, rng)
    return _excursion_from_zero(t, rho, beta, rng)


@nb.njit(cache=True, nogil=True)
def _fill_path(out, dt, rho, beta, rng):
    for i in range(1, out.shape[0]):
        out[i] = _step(out[i - 1], dt, rho, beta, rng)


@nb.njit(cache=True, nogil=True)
def _draw_many(x, t, rho, beta, count, rng):
    out = np.empty(count)
    for i in range(count):
        out[i] = _step(x, t, rho, beta, rng)
    return out


def _skew_sticky(params: AnyParams) -> tuple[SkewStickyParams, float, float]:
    """Skew-sticky parameters driving the path, and the volatilities to map back."""
    params.require_non_reflected()
    if params.sigma_minus == params.sigma_plus == 1.0:
        return SkewStickyParams(params.rho, params.beta), 1.0, 1.0
    target = map_params(params.as_sos()).target
    return target, params.sigma_minus, params.sigma_plus


def _to_state(x, sigma_minus: float, sigma_plus: float):
    # Space map sending the oscillating process to the skew-sticky one.
    return np.where(np.asarray(x) > 0, np.asarray(x) / sigma_plus, np.asarray(x) / sigma_minus)


def _from_state(y, sigma_minus: float, sigma_plus: float):
    return np.where(np.asarray(y) > 0, np.asarray(y) * sigma_plus, np.asarray(y) * sigma_minus)


def sample_transition(params: AnyParams, t_step: float, x: float, rng: np.random.Generator,
                      size: int | None = None, method: str = "exact"):
    """Draw X_{t_step} given X_0 = x.

    ``method="exact"`` uses the hitting-time construction; ``"rejection"``
    uses a Gaussian proposal under the envelope (1 + |beta|) u1 with 10%
    headroom and falls back to quantile inversion when the acceptance rate
    would drop below 5%.  Atom draws are exactly 0.0 in both cases.
    """
    t_step = check_time(t_step)
    sks, sm, sp = _skew_sticky(params)
    count = 1 if size is None else int(size)
    if method == "exact":
        y0 = float(_to_state(x, sm, sp))
        draws = _draw_many(y0, t_step, sks.rho, sks.beta, count, rng)
        draws = _from_state(draws, sm, sp)
    elif method == "rejection":
        if (sm, sp) != (1.0, 1.0):
            raise ValueError("rejection sampling is implemented for unit volatilities only")
        draws = _rejection_draws(sks, t_step, float(x), count, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(draws[0]) if size is None else draws


def rejection_efficiency(params: SkewStickyParams, t: float, x: float) -> float:
    """Expected acceptance rate of the Gaussian-proposal sampler."""
    envelope = ENVELOPE_HEADROOM * (1.0 + abs(params.beta))
    return (1.0 - float(atom_probability(params, t, x))) / envelope


def _rejection_draws(params: SkewStickyParams, t: float, x: float, count: int, rng: np.random.Generator) -> np.ndarray:
    atom = float(atom_probability(params, t, x))
    out = np.zeros(count)
    continuous = rng.random(count) >= atom
    need = int(continuous.sum())
    if need == 0:
        return out
    if rejection_efficiency(params, t, x) < MIN_REJECTION_EFFICIENCY:
        cdf = TransitionCdf(params, t, x)
        lo, hi = cdf.left_of_zero, cdf.left_of_zero + cdf.atom
        u = rng.random(need) * (1.0 - atom)
        # Map uniform mass of the continuous part around the atom's jump.
        u = np.where(u < lo, u, u + (hi - lo))
        out[continuous] = cdf.quantile(np.minimum(u, np.nextafter(1.0, 0.0)))
        return out
    envelope = ENVELOPE_HEADROOM * (1.0 + abs(params.beta))
    accepted: list[np.ndarray] = []
    got = 0
    sd = math.sqrt(t)
    while got < need:
        batch = max(16, int(1.3 * (need - got) * envelope / (1.0 - atom)))
        y = x + sd * rng.standard_normal(batch)
        ratio = continuous_density(params, t, x, y) / (envelope * u1(t, x, y))
        keep = y[rng.random(batch) < ratio]
        accepted.append(keep)
        got += len(keep)
    out[continuous] = np.concatenate(accepted)[:need]
    return out


def simulate_path(params: AnyParams, x: float, n: int, t: float, rng: np.random.Generator,
                  seed: int | None = None, stream: int | None = None) -> SamplePath:
    """Observations at times i/n, i = 0..[nt], exact in law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = check_time(t)
    sks, sm, sp = _skew_sticky(params)
    values = np.empty(steps_for(n, t) + 1)
    values[0] = float(_to_state(x, sm, sp))
    _fill_path(values, 1.0 / n, sks.rho, sks.beta, rng)
    if (sm, sp) != (1.0, 1.0):
        values = _from_state(values, sm, sp)
        values[0] = x
    return SamplePath(params, n, t, float(x), values, seed, stream)


def simulate_stream(params: AnyParams, x: float, n: int, t: float, stream: RngStream) -> SamplePath:
    return simulate_path(params, x, n, t, stream.generator(), stream.seed, stream.stream)


def default_jobs() -> int:
    return os.cpu_count() or 1


def map_paths(params: AnyParams, x: float, n: int, t: float, seed: int, count: int,
              func: Callable[[SamplePath], T], jobs: int | None = None, first_stream: int = 0) -> list[T]:
    """Apply ``func`` to ``count`` independent paths; results are in stream order.

    Path k uses stream ``first_stream + k`` of ``seed``, so results do not
    depend on ``jobs``.
    """
    jobs = default_jobs() if jobs is None else max(1, int(jobs))

    def one(k: int) -> T:
        return func(simulate_stream(params, x, n, t, RngStream(seed, first_stream + k)))

    if jobs == 1 or count <= 1:
        return [one(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, range(count)))


def simulate_endpoints(params: AnyParams, x: float, n: int, t: float, seed: int, count: int,
                       jobs: int | None = None) -> np.ndarray:
    """Terminal values of ``count`` independent paths."""
    return np.array(map_paths(params, x, n, t, seed, count, lambda p: p.values[-1], jobs))


def sample_reflected(rho: float, x: float, n: int, t: float, rng: np.random.Generator,
                     seed: int | None = None, stream: int | None = None) -> SamplePath:
    """Sticky reflected Brownian motion as |Y| for Y skew-sticky with beta = 0."""
    if x < 0:
        raise NegativeStartError(f"reflected process must start at x >= 0, got {x}")
    params = SkewStickyParams(rho, 0.0)
    path = simulate_path(params, x, n, t, rng, seed, stream)
    return SamplePath(params, n, path.t, float(x), np.abs(path.values), seed, stream)


def zero_visit_trace(path: SamplePath) -> Trace:
    """(1/n) * #{i < [ns] : X_{i/n} = 0} at each grid time s."""
    hits = (path.values[:-1] == 0.0).astype(float)
    values = np.concatenate([[0.0], np.cumsum(hits)]) / path.n
    return Trace(path.times, values)


def reference_local_time(path: SamplePath) -> Trace:
    """Local time at 0 estimated from time spent at 0, divided by rho."""
    rho = path.rho
    if rho is None or rho <= 0.0:
        raise ZeroStickinessError("the occupation-based local time needs rho > 0")
    trace = zero_visit_trace(path)
    return Trace(trace.times, trace.values / rho)


def rejection_envelope(params: SkewStickyParams) -> float:
    """Envelope constant of the proposal sampler, for reporting."""
    return ENVELOPE_HEADROOM * (1.0 + abs(params.beta))


__all__ = [
    "RngStream", "SamplePath", "map_paths", "reference_local_time",
    "rejection_efficiency", "rejection_envelope", "sample_reflected", "sample_transition",
    "simulate_endpoints", "simulate_path", "simulate_stream", "zero_visit_trace",
]
