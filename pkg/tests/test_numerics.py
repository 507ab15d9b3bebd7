import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosbm.errors import BracketError
from sosbm.numerics import (
    QuadratureSpec,
    erfc,
    find_root,
    integrate,
    ks_distance,
    ks_threshold,
    mills_constant,
    normal_cdf,
    normal_sf,
    scaled_erfc,
)

mpmath.mp.dps = 40


def mp_erfc(z: float) -> float:
    return float(mpmath.erfc(mpmath.mpf(z)))


def mp_erfcx(z: float) -> float:
    z = mpmath.mpf(z)
    return float(mpmath.exp(z * z) * mpmath.erfc(z))


class TestErfc:
    def test_examples(self):
        assert erfc(0.0) == 1.0
        assert erfc(math.sqrt(2.0)) == pytest.approx(0.0455003, abs=1e-7)
        assert erfc(math.sqrt(2.0)) == pytest.approx(2.0 * 0.0227501, rel=1e-5)
        assert erfc(-1.0) == pytest.approx(1.8427008, abs=1e-7)

    @pytest.mark.parametrize("z", np.concatenate([np.linspace(-6, 6, 121), np.linspace(6, 26.5, 60)]))
    def test_relative_accuracy_against_mpmath(self, z):
        assert erfc(z) == pytest.approx(mp_erfc(z), rel=1e-12, abs=0)

    def test_monotone_decreasing(self):
        z = np.linspace(-10, 27, 20001)
        values = erfc(z)
        assert np.all(np.diff(values) <= 0)

    def test_reflection_identity(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-10, 10, 10_000)
        assert np.max(np.abs(erfc(z) + erfc(-z) - 2.0)) <= 1e-12

    def test_normal_tails(self):
        assert normal_sf(2.0) == pytest.approx(0.0227501319481792, rel=1e-12)
        assert normal_cdf(1.959963984540054) == pytest.approx(0.975, rel=1e-12)


class TestScaledErfc:
    def test_examples(self):
        assert scaled_erfc(0.0) == 1.0
        assert scaled_erfc(math.sqrt(2.0)) == pytest.approx(0.336204, abs=1e-6)
        assert scaled_erfc(100.0) == pytest.approx(1.0 / (100.0 * math.sqrt(math.pi)), rel=1e-4)

    @pytest.mark.parametrize("z", [1e-8, 0.01, 0.3, 0.5, 1.0, 2.0, 3.9, 4.1, 7.0, 12.0, 50.0, 1e3, 1e6])
    def test_against_mpmath(self, z):
        assert scaled_erfc(z) == pytest.approx(mp_erfcx(z), rel=1e-13)

    @pytest.mark.parametrize("z", [-0.5, -2.0, -5.0])
    def test_negative_arguments(self, z):
        assert scaled_erfc(z) == pytest.approx(mp_erfcx(z), rel=1e-12)

    def test_consistent_with_erfc(self):
        z = np.linspace(0, 20, 2001)
        assert np.allclose(scaled_erfc(z) * np.exp(-z * z), erfc(z), rtol=1e-10, atol=0)

    def test_no_overflow_for_huge_arguments(self):
        values = scaled_erfc(np.array([1e10, 1e100, 1e300]))
        assert np.all(np.isfinite(values)) and np.all(values > 0)

    def test_mills_bound(self):
        k = mills_constant()
        assert k == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-6)
        assert k <= 2.0 / math.sqrt(math.pi)
        z = np.logspace(-4, 8, 5000)
        assert np.all(scaled_erfc(z) <= k / z * (1 + 1e-12))


class TestIntegrate:
    def test_gaussian_normalization(self):
        res = integrate(lambda y: np.exp(-0.5 * y * y) / math.sqrt(2 * math.pi), -math.inf, math.inf)
        assert res.converged
        assert res.value == pytest.approx(1.0, abs=1e-10)

    def test_half_line(self):
        res = integrate(lambda y: np.exp(-0.5 * y * y) / math.sqrt(2 * math.pi), 0.0, math.inf)
        assert res.value == pytest.approx(0.5, abs=1e-12)

    def test_breakpoint_kink(self):
        res = integrate(lambda y: np.abs(y - 0.3) * np.exp(-y * y), -math.inf, math.inf, breakpoints=(0.3,))
        exact = float(mpmath.quad(lambda y: abs(y - mpmath.mpf("0.3")) * mpmath.exp(-y * y),
                                  [-mpmath.inf, 0.3, mpmath.inf]))
        assert res.value == pytest.approx(exact, rel=1e-10)

    def test_jump_discontinuity(self):
        res = integrate(lambda y: np.where(y > 0, 1.5, 0.5) * np.exp(-y * y), -math.inf, math.inf, breakpoints=(0.0,))
        assert res.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)

    def test_reversed_limits(self):
        assert integrate(np.cos, 1.0, 0.0).value == pytest.approx(-math.sin(1.0), rel=1e-13)

    def test_empty_interval(self):
        assert integrate(np.cos, 2.0, 2.0).value == 0.0

    def test_nonconvergence_is_flagged(self):
        spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=16)
        res = integrate(lambda y: np.sin(1.0 / np.maximum(y, 1e-300)), 1e-6, 1.0, spec)
        assert not res.converged

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(max_subdivisions=8)
        with pytest.raises(ValueError):
            QuadratureSpec(abs_tol=0.0)

    def test_deterministic(self):
        f = lambda y: np.exp(-y * y) * np.cos(3 * y)
        assert integrate(f, -math.inf, math.inf) == integrate(f, -math.inf, math.inf)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(-2, 2), st.floats(-2, 2))
    def test_linearity(self, coeffs, a, b):
        f = lambda y: (coeffs[0] + coeffs[1] * y) * np.exp(-0.5 * y * y)
        g = lambda y: (coeffs[2] + coeffs[3] * y * y) * np.exp(-0.5 * (y - 1) ** 2)
        rf, rg = integrate(f, -math.inf, math.inf), integrate(g, -math.inf, math.inf)
        rc = integrate(lambda y: a * f(y) + b * g(y), -math.inf, math.inf)
        tol = abs(a) * rf.error + abs(b) * rg.error + rc.error + 1e-12
        assert abs(rc.value - (a * rf.value + b * rg.value)) <= tol


class TestFindRoot:
    def test_examples(self):
        assert find_root(lambda x: x - 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)
        assert find_root(lambda x: float(normal_cdf(x)) - 0.975, 0.0, 4.0) == pytest.approx(1.959964, abs=1e-6)
        assert find_root(lambda x: x**3, -1.0, 2.0) == pytest.approx(0.0, abs=1e-4)

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            find_root(lambda x: x * x + 1.0, -1.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.floats(0.1, 10))
    def test_image_within_tolerance(self, shift, slope):
        f = lambda x: math.tanh(slope * (x - shift))
        root = find_root(f, -10.0, 10.0, tol=1e-12)
        assert abs(f(root)) <= 1e-10


class TestKolmogorovSmirnov:
    def test_threshold(self):
        assert ks_threshold(10**5) == pytest.approx(1.63 / math.sqrt(10**5))
        assert ks_threshold(100, 0.05) == pytest.approx(0.136)

    def test_uniform_sample(self):
        u = np.random.default_rng(1).random(20_000)
        assert ks_distance(u, lambda x: np.clip(x, 0, 1)) < ks_threshold(len(u))

    def test_atom_handled_with_left_limits(self):
        # Half the mass at 0, the rest uniform on (0, 1].
        rng = np.random.default_rng(2)
        u = rng.random(20_000)
        samples = np.where(u < 0.5, 0.0, rng.random(20_000))
        cdf = lambda x: np.where(x < 0, 0.0, 0.5 + 0.5 * np.clip(x, 0, 1))
        assert ks_distance(samples, cdf, {0.0: 0.5}) < ks_threshold(len(samples))
        # Without the atom correction the jump at 0 is misread.
        wrong = lambda x: np.clip(x, 0, 1)
        assert ks_distance(samples, wrong) > 0.4
