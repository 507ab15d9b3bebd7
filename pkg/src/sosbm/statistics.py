"""High-frequency statistics of sampled paths.

Every statistic is a running sum over the grid, returned as a ``Trace`` whose
entry i covers the observations X_0, ..., X_{(i-1)/n}.  Sums run in index
order, so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, ZeroNormalizerError
from .kernel.density import semigroup_apply
from .kernel.params import AnyParams, SkewStickyParams, SpeedMeasure
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, integrate, normal_sf
from .paths import SamplePath, Trace
from .reports import VerificationReport

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A bounded integrable g with its one-sided integrals.

    ``positive_integral`` and ``negative_integral`` are the integrals of g
    over (0, inf) and (-inf, 0).
    """

    __test__ = False  # not a pytest class

    name: str
    evaluator: Evaluator = field(repr=False)
    sup_norm: float
    abs_integral: float
    positive_integral: float
    negative_integral: float
    vanishes_at_zero: bool
    support_radius: float | None = None

    def __call__(self, y) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(y, dtype=float)), dtype=float)

    @property
    def value_at_zero(self) -> float:
        return float(self(np.array([0.0]))[0])

    def positive_part(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, self(y), 0.0)

    def negative_part(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.where(y < 0, self(y), 0.0)

    def scaled(self, factor: float) -> "TestFunction":
        f = self.evaluator
        return TestFunction(f"{factor!r}*{self.name}", lambda y: factor * f(y), abs(factor) * self.sup_norm,
                            abs(factor) * self.abs_integral, factor * self.positive_integral,
                            factor * self.negative_integral, self.vanishes_at_zero, self.support_radius)

    @classmethod
    def from_callable(cls, name: str, evaluator: Evaluator, support_radius: float | None = None,
                      spec: QuadratureSpec = DEFAULT_QUADRATURE, probe: int = 4001) -> "TestFunction":
        """Build a test function, measuring its integrals and bound numerically."""
        radius = 50.0 if support_radius is None else support_radius
        grid = np.linspace(-radius, radius, probe)
        sup = float(np.max(np.abs(evaluator(grid))))
        h0 = float(np.asarray(evaluator(np.array([0.0])))[0])
        sup = max(sup, abs(h0))
        hi = math.inf if support_radius is None else support_radius
        if support_radius is None:
            # Infinite ranges are truncated at truncation_sd; the tail there must be negligible.
            edge = np.array([-spec.truncation_sd, spec.truncation_sd])
            if np.max(np.abs(evaluator(edge))) > 1e-10 * max(sup, 1e-300):
                raise ParameterError(f"test function {name!r} does not decay within |y| <= {spec.truncation_sd}; "
                                     "pass support_radius")
        pos = integrate(evaluator, 0.0, hi, spec, scale=1.0)
        neg = integrate(evaluator, -hi, 0.0, spec, scale=1.0)
        ab = integrate(lambda y: np.abs(evaluator(y)), -hi, hi, spec, breakpoints=(0.0,), scale=1.0)
        if not (pos.converged and neg.converged and ab.converged) or not math.isfinite(ab.value):
            raise ParameterError(f"test function {name!r} is not integrable")
        return cls(name, evaluator, sup, ab.value, pos.value, neg.value, h0 == 0.0, support_radius)


def _indicator_positive(y):
    return ((y > 0) & (y <= 1)).astype(float)


def _indicator_negative(y):
    return ((y >= -1) & (y < 0)).astype(float)


def _hat(y):
    return np.where(y != 0, np.maximum(1.0 - np.abs(y), 0.0), 0.0)


def _hat_with_peak(y):
    return np.maximum(1.0 - np.abs(y), 0.0)


def _punctured_gaussian(y):
    return np.where(y != 0, np.exp(-0.5 * y * y), 0.0)


_HALF_GAUSS = math.sqrt(math.pi / 2.0)

CATALOG: dict[str, TestFunction] = {
    "indicator_pos": TestFunction("indicator_pos", _indicator_positive, 1.0, 1.0, 1.0, 0.0, True, 1.0),
    "indicator_neg": TestFunction("indicator_neg", _indicator_negative, 1.0, 1.0, 0.0, 1.0, True, 1.0),
    "hat": TestFunction("hat", _hat, 1.0, 1.0, 0.5, 0.5, True, 1.0),
    "gauss": TestFunction("gauss", _punctured_gaussian, 1.0, 2.0 * _HALF_GAUSS, _HALF_GAUSS, _HALF_GAUSS, True),
    # Negative control: g(0) = 1 violates the hypothesis of the local-time limit.
    "hat0": TestFunction("hat0", _hat_with_peak, 1.0, 1.0, 0.5, 0.5, False, 1.0),
}


def test_function(name: str) -> TestFunction:
    try:
        return CATALOG[name]
    except KeyError:
        raise ParameterError(f"unknown test function {name!r}; choose from {sorted(CATALOG)}") from None


test_function.__test__ = False


def limit_constant(g: TestFunction, params: AnyParams) -> float:
    """m0(g): the Lebesgue part of the speed measure applied to g."""
    m = SpeedMeasure.of(params)
    return m.left_density * g.negative_integral + m.right_density * g.positive_integral


@dataclass(frozen=True)
class NormalizingSequence:
    """The scale u_n of a local-time statistic; must diverge slower than n."""

    family: str
    evaluator: Callable[[float], float] = field(repr=False)
    exponent: float | None = None

    def __call__(self, n: float) -> float:
        return float(self.evaluator(float(n)))

    @classmethod
    def power(cls, exponent: float) -> "NormalizingSequence":
        if not 0.0 < exponent < 1.0:
            raise ParameterError(f"power exponent must lie in (0, 1), got {exponent}")
        return cls("power", lambda n: n**exponent, exponent)

    @classmethod
    def sqrt(cls) -> "NormalizingSequence":
        return cls.power(0.5)

    @classmethod
    def log(cls) -> "NormalizingSequence":
        return cls("log", math.log)

    @classmethod
    def custom(cls, evaluator: Callable[[float], float], check: bool = True) -> "NormalizingSequence":
        seq = cls("custom", evaluator)
        if check:
            seq.check_divergence()
        return seq

    @classmethod
    def parse(cls, text: str) -> "NormalizingSequence":
        """'sqrt', 'log' or 'power:<alpha>'."""
        text = text.strip().lower()
        if text == "sqrt":
            return cls.sqrt()
        if text == "log":
            return cls.log()
        if text.startswith("power:"):
            return cls.power(float(text.split(":", 1)[1]))
        raise ParameterError(f"unknown normalizing sequence {text!r}")

    @property
    def label(self) -> str:
        if self.family == "power":
            return "sqrt" if self.exponent == 0.5 else f"power:{self.exponent!r}"
        return self.family

    def check_divergence(self, n_max: float = 1e9) -> None:
        """Numerical audit of u_n -> inf and u_n/n -> 0 on [10, n_max]."""
        ns = np.logspace(1, math.log10(n_max), 25)
        u = np.array([self(n) for n in ns])
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise ParameterError("u_n must be finite and positive")
        if not np.all(np.diff(u) > 0):
            raise ParameterError("u_n must increase along the audit range")
        ratio = u / ns
        if not (np.all(np.diff(ratio) < 0) and ratio[-1] < 1e-2):
            raise ParameterError("u_n/n must decrease towards 0 along the audit range")


@dataclass(frozen=True)
class TransformFunction:
    """A C2 map T with T(0) = 0, T'(0) = 1 and eps <= T' <= 1/eps, |T''| <= 1/eps."""

    name: str
    value: Evaluator = field(repr=False)
    derivative: Evaluator = field(repr=False)
    second_derivative: Evaluator = field(repr=False)
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ParameterError(f"ellipticity must lie in (0, 1], got {self.epsilon}")
        zero = np.array([0.0])
        if float(self.value(zero)[0]) != 0.0:
            raise ParameterError("T(0) must be 0")
        if abs(float(self.derivative(zero)[0]) - 1.0) > 1e-12:
            raise ParameterError("T'(0) must be 1")
        grid = np.concatenate([-np.logspace(-6, 6, 400), [0.0], np.logspace(-6, 6, 400)])
        d1 = self.derivative(grid)
        d2 = self.second_derivative(grid)
        if np.any(d1 < self.epsilon) or np.any(d1 > 1.0 / self.epsilon):
            raise ParameterError(f"T' leaves [{self.epsilon}, {1.0 / self.epsilon}]")
        if np.any(np.abs(d2) > 1.0 / self.epsilon):
            raise ParameterError(f"|T''| exceeds {1.0 / self.epsilon}")

    def __call__(self, y) -> np.ndarray:
        return self.value(np.asarray(y, dtype=float))

    @classmethod
    def identity(cls) -> "TransformFunction":
        return cls("identity", lambda y: y, np.ones_like, np.zeros_like, 1.0)

    @classmethod
    def soft_quadratic(cls) -> "TransformFunction":
        """T(y) = y + y^2 / (2 (1 + |y|)); T' ranges over (1/2, 3/2)."""
        return cls(
            "soft_quadratic",
            lambda y: y + y * y / (2.0 * (1.0 + np.abs(y))),
            lambda y: 1.0 + y * (2.0 + np.abs(y)) / (2.0 * (1.0 + np.abs(y)) ** 2),
            lambda y: (1.0 + np.abs(y)) ** -3,
            0.5,
        )


def _running_sum(terms: np.ndarray, scale: float, path: SamplePath) -> Trace:
    sums = np.concatenate([[0.0], np.cumsum(terms)])
    return Trace(path.times, scale * sums)


def _warn_if_not_vanishing(g: TestFunction) -> None:
    if not g.vanishes_at_zero:
        warnings.warn(f"test function {g.name!r} has g(0) != 0; the local-time limit does not apply",
                      stacklevel=3)


def local_time_statistic(path: SamplePath, g: TestFunction, u: NormalizingSequence) -> Trace:
    """(u_n/n) * sum_{i <= [ns]} g(u_n X_{(i-1)/n})."""
    _warn_if_not_vanishing(g)
    un = u(path.n)
    return _running_sum(g(un * path.values[:-1]), un / path.n, path)


def transformed_statistic(path: SamplePath, g: TestFunction, transform: TransformFunction,
                          u: NormalizingSequence) -> Trace:
    """The local-time statistic with g replaced by y -> g(u_n T(y/u_n))."""
    _warn_if_not_vanishing(g)
    un = u(path.n)
    return _running_sum(g(un * transform(path.values[:-1])), un / path.n, path)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True

    def __post_init__(self):
        if self.lo > self.hi or (self.lo == self.hi and not (self.closed_lo and self.closed_hi)):
            raise ParameterError(f"empty interval {self}")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(-math.inf, math.inf, False, False)

    @classmethod
    def positive(cls) -> "Interval":
        return cls(0.0, math.inf, False, False)

    @classmethod
    def negative(cls) -> "Interval":
        return cls(-math.inf, 0.0, False, False)

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        above = y >= self.lo if self.closed_lo else y > self.lo
        below = y <= self.hi if self.closed_hi else y < self.hi
        return above & below


def occupation_counts(path: SamplePath, interval: Interval) -> np.ndarray:
    """Running integer counts #{i <= [ns] : X_{(i-1)/n} in U}."""
    return np.concatenate([[0], np.cumsum(interval.contains(path.values[:-1]), dtype=np.int64)])


def occupation_statistic(path: SamplePath, interval: Interval) -> Trace:
    """(1/n) * #{i <= [ns] : X_{(i-1)/n} in U}."""
    return Trace(path.times, occupation_counts(path, interval) / path.n)


def one_sided_sums(path: SamplePath, g: TestFunction, u: NormalizingSequence,
                   sigma_plus: float = 1.0, sigma_minus: float = 1.0) -> tuple[Trace, Trace]:
    """Local-time statistics of the two halves of g, normalized to tend to (1 +/- beta) L."""
    if g.positive_integral == 0.0 or g.negative_integral == 0.0:
        raise ZeroNormalizerError(f"test function {g.name!r} needs nonzero mass on both half-lines")
    un = u(path.n)
    y = un * path.values[:-1]
    plus = _running_sum(g.positive_part(y), un / path.n * sigma_plus**2 / g.positive_integral, path)
    minus = _running_sum(g.negative_part(y), un / path.n * sigma_minus**2 / g.negative_integral, path)
    return plus, minus


def quadratic_variation_sums(path: SamplePath) -> tuple[Trace, Trace]:
    """Running sums of squared increments of max(X, 0) and max(-X, 0)."""
    pos = np.maximum(path.values, 0.0)
    neg = np.maximum(-path.values, 0.0)
    qv_pos = np.concatenate([[0.0], np.cumsum(np.diff(pos) ** 2)])
    qv_neg = np.concatenate([[0.0], np.cumsum(np.diff(neg) ** 2)])
    return Trace(path.times, qv_pos), Trace(path.times, qv_neg)


@dataclass(frozen=True)
class MonteCarloSummary:
    mean: float
    se: float
    count: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "MonteCarloSummary":
        """Mean and standard error.  Values are reduced in the order given."""
        arr = np.asarray(values, dtype=float)
        count = len(arr)
        if count == 0:
            return cls(math.nan, math.nan, 0)
        mean = float(np.sum(arr) / count)
        se = float(np.std(arr, ddof=1) / math.sqrt(count)) if count > 1 else math.nan
        return cls(mean, se, count)


# Rescaled mean absolute displacement.

def _g_hat_brownian(y):
    a = np.abs(np.asarray(y, dtype=float))
    return 2.0 * np.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi) - 2.0 * a * normal_sf(a)


def _scaled_params(params: AnyParams, n: float) -> SkewStickyParams:
    if params.sigma_minus != 1.0 or params.sigma_plus != 1.0:
        raise ParameterError("the displacement statistic is defined for unit volatilities")
    params.require_non_reflected()
    return SkewStickyParams(params.rho * math.sqrt(n), params.beta)


def g_hat_n(params: AnyParams, n: float, y, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """E_y|X_1| - |y| under the process with parameters (rho sqrt(n), beta).

    Computed as the kernel integral of |z| - |y|, which avoids cancelling
    two large numbers when |y| is large.  ``y`` may be an array.
    """
    scaled = _scaled_params(params, n)
    y_arr = np.asarray(y, dtype=float)
    if scaled.rho == 0.0:
        out = _g_hat_brownian(y_arr)
        return float(out) if out.ndim == 0 else out
    values = []
    for yi in np.atleast_1d(y_arr).ravel():
        shift = abs(float(yi))
        apply = semigroup_apply(scaled, 1.0, lambda z, s=shift: np.abs(z) - s, spec)
        values.append(apply(float(yi)))
    out = np.array(values).reshape(y_arr.shape)
    return float(out) if out.ndim == 0 else out


class GHatTable:
    """Interpolated y -> g_hat_n(y) for evaluating the statistic along long paths.

    The function is even in y, so it is tabulated on [0, radius] and vanishes
    (below double precision) beyond the radius.
    """

    def __init__(self, params: AnyParams, n: float, radius: float = 12.0, points: int = 1201,
                 spec: QuadratureSpec = DEFAULT_QUADRATURE):
        self.n = n
        self.radius = radius
        # Denser nodes near 0 where the function bends most.
        self.nodes = radius * np.linspace(0.0, 1.0, points) ** 2
        self.values = np.asarray(g_hat_n(params, n, self.nodes, spec))

    def __call__(self, y) -> np.ndarray:
        a = np.abs(np.asarray(y, dtype=float))
        return np.interp(a, self.nodes, self.values, right=0.0)


def g_hat_statistic(path: SamplePath, table: GHatTable) -> Trace:
    """(1/sqrt(n)) * sum g_hat_n(sqrt(n) X_{(i-1)/n}); unbiased for E|X_s| - |x|."""
    if table.n != path.n:
        raise ParameterError(f"table built for n={table.n}, path has n={path.n}")
    root = math.sqrt(path.n)
    return _running_sum(table(root * path.values[:-1]), 1.0 / root, path)


def speed_measure_integral(params: AnyParams, h: Evaluator, moment: float | None = None,
                           spec: QuadratureSpec = DEFAULT_QUADRATURE,
                           breakpoints: tuple[float, ...] = ()) -> float:
    """m(h) when ``moment`` is None, otherwise the integral of |y|^moment |h(y)| m(dy)."""
    from .kernel.density import measure_integral

    return measure_integral(SpeedMeasure.of(params), h, moment, spec, breakpoints=breakpoints)


def g_hat_mass(params: AnyParams, n: float, spec: QuadratureSpec = QuadratureSpec(1e-10, 1e-8)) -> float:
    """m_n(g_hat_n), the scaled speed measure applied to the displacement function.

    For rho = 0 the half-line integrals are 1/2 each in closed form.
    """
    scaled = _scaled_params(params, n)
    m = SpeedMeasure.of(scaled)
    if scaled.rho == 0.0:
        return 0.5 * (m.left_density + m.right_density)
    return speed_measure_integral(scaled, lambda y: g_hat_n(params, n, y, spec), spec=spec)


def verify_prop_5_7(params: AnyParams, ladder: Sequence[float] = (1e2, 1e4, 1e6), tolerance: float = 0.02,
                    floor: float = 1e-8, spec: QuadratureSpec = QuadratureSpec(1e-10, 1e-8)) -> VerificationReport:
    """Check m_n(g_hat_n) -> 1 along an n-ladder.

    The gap |m_n(g_hat_n) - 1| must not grow along the ladder, except below
    ``floor`` where it is dominated by quadrature error.
    """
    report = VerificationReport("g_hat_mass")
    gaps = []
    for n in ladder:
        value = g_hat_mass(params, n, spec)
        gap = abs(value - 1.0)
        gaps.append(gap)
        report.add("m_n(g_hat_n)", None, float(n), None, value, 1.0, gap, math.isfinite(value))
    report.summary["final_gap"] = gaps[-1]
    report.checks["final_gap"] = gaps[-1] < tolerance
    report.summary["monotone"] = float(len(gaps))
    report.checks["monotone"] = all(b <= max(a, floor) for a, b in zip(gaps, gaps[1:]))
    return report
