import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosbm.errors import NonEllipticError, NonInvertibleError
from sosbm.kernel import SosBmParams
from sosbm.transforms import (
    inverse_map_params,
    local_time_factor,
    map_params,
    oscillating_equivalent,
    pushforward_params,
    t1,
    t1_inverse,
    t1_slopes,
    t2,
    verify_reduction,
)


class TestT1:
    def test_examples(self):
        p = SosBmParams(1.0, 0.0, 2.0, 1.0)
        assert t1(p, -4.0) == -2.0
        assert t1(p, 3.0) == 3.0
        assert t1(p, 0.0) == 0.0

    def test_inverse_on_random_points(self):
        p = SosBmParams(0.5, 0.2, 0.7, 3.0)
        x = np.random.default_rng(0).normal(scale=5.0, size=1000)
        assert np.allclose(t1_inverse(p, t1(p, x)), x, rtol=1e-15, atol=0)

    def test_keeps_sign(self):
        p = SosBmParams(0.5, 0.2, 0.7, 3.0)
        x = np.linspace(-3, 3, 61)
        assert np.array_equal(np.sign(t1(p, x)), np.sign(x))


class TestT2:
    def test_arctan_example(self):
        assert t2(lambda y: 1.0 + y * y, 1.0) == pytest.approx(math.pi / 4, rel=1e-12)

    def test_piecewise_constant_is_identity(self):
        sigma = lambda y: np.where(y > 0, 2.0, 0.5)
        for x in (-3.0, -0.2, 0.0, 1.7):
            assert t2(sigma, x) == pytest.approx(x, abs=1e-12)

    def test_odd_for_even_sigma(self):
        sigma = lambda y: 2.0 + np.cos(y)
        assert t2(sigma, -1.3) == pytest.approx(-t2(sigma, 1.3), rel=1e-12)

    def test_degenerate_sigma(self):
        with pytest.raises(NonEllipticError):
            t2(lambda y: np.abs(y), 1.0)
        with pytest.raises(NonEllipticError):
            t2(lambda y: 1.0 - y, 2.0)


class TestParameterMap:
    def test_example(self):
        m = map_params(SosBmParams(1.0, 0.0, 1.0, 2.0))
        assert m.target.rho == pytest.approx(4.0 / 3.0, rel=1e-15)
        assert m.target.beta == pytest.approx(-1.0 / 3.0, rel=1e-15)
        assert m.local_time_factor == pytest.approx(3.0 / 4.0)

    def test_unit_volatility_is_identity(self):
        m = map_params(SosBmParams(0.7, 0.4, 1.0, 1.0))
        assert m.target.rho == 0.7
        assert m.target.beta == pytest.approx(0.4, rel=1e-15)
        assert m.local_time_factor == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 10), st.floats(-0.99, 0.99), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_round_trip(self, rho, beta, sm, sp):
        source = SosBmParams(rho, beta, sm, sp)
        back = inverse_map_params(map_params(source).target, sm, sp)
        assert back.rho == pytest.approx(rho, rel=1e-12, abs=1e-12)
        assert back.beta == pytest.approx(beta, rel=1e-12, abs=1e-12)

    def test_rho_zero_links_skew_and_oscillating(self):
        # Without stickiness a volatility jump alone produces skewness after t1.
        m = map_params(SosBmParams(0.0, 0.0, 1.0, 3.0))
        assert m.target.rho == 0.0
        assert m.target.beta == pytest.approx((1.0 - 3.0) / (1.0 + 3.0))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 10), st.floats(-0.99, 0.99), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_pushforward_agrees(self, rho, beta, sm, sp):
        source = SosBmParams(rho, beta, sm, sp)
        a, b = map_params(source).target, pushforward_params(source)
        assert b.rho == pytest.approx(a.rho, rel=1e-12, abs=1e-300)
        assert b.beta == pytest.approx(a.beta, rel=1e-12, abs=1e-12)

    def test_oscillating_equivalent_has_same_image(self):
        source = SosBmParams(1.3, 0.4, 0.8, 1.7)
        twin = oscillating_equivalent(source)
        assert twin.beta == 0.0
        a, b = map_params(source).target, map_params(twin).target
        assert b.rho == pytest.approx(a.rho, rel=1e-14)
        assert b.beta == pytest.approx(a.beta, abs=1e-14)


class TestLocalTimeFactor:
    def test_examples(self):
        assert local_time_factor(1.0, 1.0, 0.3) == 1.0
        assert local_time_factor(1.0, 0.5, 0.0) == 0.75
        assert local_time_factor(2.0, 2.0, -0.7) == 2.0

    def test_matches_parameter_map(self):
        source = SosBmParams(1.0, 0.2, 0.5, 2.0)
        left, right = t1_slopes(source)
        assert local_time_factor(left, right, source.beta) == pytest.approx(map_params(source).local_time_factor)

    def test_chain_with_inverse_is_one(self):
        # Through t1 and back the local time is unchanged.
        source = SosBmParams(1.0, 0.2, 0.5, 2.0)
        image = map_params(source).target
        left, right = t1_slopes(source)
        forward = local_time_factor(left, right, source.beta)
        back = local_time_factor(source.sigma_minus, source.sigma_plus, image.beta)
        assert forward * back == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("left,right", [(0.0, 1.0), (1.0, -1.0), (math.inf, 1.0)])
    def test_non_invertible(self, left, right):
        with pytest.raises(NonInvertibleError):
            local_time_factor(left, right, 0.0)


class TestReduction:
    def test_unit_volatility(self):
        report = verify_reduction(SosBmParams(1.0, 0.3, 1.0, 1.0), n=1, t=1.0, paths=20_000, seed=2)
        assert report.passed, report

    @pytest.mark.parametrize("sm", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("sp", [0.5, 1.0, 2.0])
    def test_grid(self, sm, sp):
        report = verify_reduction(SosBmParams(1.0, 0.2, sm, sp), n=2, t=1.0, paths=10_000, seed=3, x=0.1)
        assert report.passed, report

    def test_reflected_source_rejected(self):
        from sosbm.errors import ReflectionUnsupportedError

        with pytest.raises(ReflectionUnsupportedError):
            verify_reduction(SosBmParams(1.0, 1.0, 1.0, 2.0), n=1, t=1.0, paths=10, seed=0)
