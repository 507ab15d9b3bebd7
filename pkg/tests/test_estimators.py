import math

import numpy as np
import pytest

from sosbm.errors import ReflectionUnsupportedError
from sosbm.estimators import REPORT_FIELDS, estimate_full, estimate_rho_beta, estimate_sigmas, visited_zero
from sosbm.kernel import SkewStickyParams, SosBmParams
from sosbm.paths import SamplePath
from sosbm.sampler import RngStream, simulate_path
from sosbm.statistics import NormalizingSequence, test_function

HAT = test_function("hat")
SQRT = NormalizingSequence.sqrt()


def make_path(values, params=SkewStickyParams(1.0, 0.0)):
    values = np.asarray(values, dtype=float)
    n = len(values) - 1
    return SamplePath(params, n, 1.0, float(values[0]), values)


@pytest.fixture(scope="module")
def sticky_path():
    return simulate_path(SkewStickyParams(1.0, 0.5), 0.0, 100_000, 1.0, RngStream(2, 0).generator())


def test_visited_zero():
    assert visited_zero(np.array([1.0, 0.0, 2.0]))
    assert visited_zero(np.array([1.0, -0.5]))
    assert not visited_zero(np.array([1.0, 0.5, 2.0]))


class TestRhoBeta:
    def test_path_that_never_reaches_zero(self):
        report = estimate_rho_beta(make_path(np.linspace(1.0, 2.0, 101)), HAT, SQRT)
        assert not report.hit_zero
        assert report.rho_hat is None and report.beta_hat is None
        assert report.diagnostics["note"] == "path did not reach 0"

    def test_path_stuck_at_zero(self):
        report = estimate_rho_beta(make_path(np.zeros(101)), HAT, SQRT)
        assert report.hit_zero
        assert report.rho_hat is None
        assert report.diagnostics["zero_count"] == 100
        assert report.diagnostics["note"] == "one-sided sums vanish"

    def test_example(self):
        # u_4 = 2: S+ = 1.3, S- = 0.5 and one visit to 0 among the left endpoints.
        report = estimate_rho_beta(make_path([0.25, -0.25, 0.0, 0.1, 0.0]), HAT, SQRT)
        assert report.rho_hat == pytest.approx(2 * 0.25 / 1.8)
        assert report.beta_hat == pytest.approx(0.8 / 1.8)

    def test_reflection_flips_beta(self, sticky_path):
        mirrored = SamplePath(sticky_path.params, sticky_path.n, 1.0, 0.0, -sticky_path.values)
        a = estimate_rho_beta(sticky_path, HAT, SQRT)
        b = estimate_rho_beta(mirrored, HAT, SQRT)
        assert b.beta_hat == pytest.approx(-a.beta_hat, abs=1e-12)
        assert b.rho_hat == pytest.approx(a.rho_hat, rel=1e-12)

    def test_common_volatility_scale(self, sticky_path):
        # Scaling both volatilities by k multiplies S+ and S- by k^2.
        a = estimate_rho_beta(sticky_path, HAT, SQRT)
        b = estimate_rho_beta(sticky_path, HAT, SQRT, sigma_plus=3.0, sigma_minus=3.0)
        assert b.beta_hat == pytest.approx(a.beta_hat, rel=1e-12)
        assert b.rho_hat == pytest.approx(a.rho_hat / 9.0, rel=1e-12)

    def test_ranges(self, sticky_path):
        report = estimate_rho_beta(sticky_path, HAT, SQRT)
        assert report.rho_hat >= 0
        assert -1.0 <= report.beta_hat <= 1.0
        assert report.diagnostics["beta_raw"] == report.beta_hat

    def test_beta_clamped_with_raw_kept(self):
        # On the left g dips below 0 near the origin but integrates to 0.6, so S- can be negative.
        from sosbm.statistics import TestFunction

        def lopsided(y):
            left = np.where(y > -0.2, -1.0, 1.0) * ((y >= -1) & (y < 0))
            right = ((y > 0) & (y <= 1)).astype(float)
            return left + right

        g = TestFunction("lopsided", lopsided, 1.0, 2.0, 1.0, 0.6, True, 1.0)
        report = estimate_rho_beta(make_path([0.0, 0.25, 0.25, -0.05, 0.0]), g, SQRT)
        assert report.diagnostics["s_minus"] < 0
        assert report.diagnostics["beta_raw"] > 1.0
        assert report.beta_hat == 1.0

    def test_rho_zero_path(self):
        # Started off 0, a path without stickiness never sits exactly at 0.
        path = simulate_path(SkewStickyParams(0.0, 0.0), 0.05, 10_000, 1.0, np.random.default_rng(1))
        report = estimate_rho_beta(path, HAT, SQRT)
        assert report.hit_zero
        assert report.rho_hat == 0.0


class TestSigmas:
    def test_example(self):
        report = estimate_sigmas(make_path([1.0, 2.0, 1.0, 2.0, 1.0]))
        assert report.sigma_plus_hat == pytest.approx(2.0)
        assert report.sigma_minus_hat is None
        assert not report.hit_negative

    def test_both_sides(self):
        report = estimate_sigmas(make_path([-1.0, -3.0, -1.0, 1.0, 2.0]))
        # max(-X, 0) moves by 2, -2, -1, 0 while three of four left endpoints lie below 0.
        assert report.sigma_minus_hat == pytest.approx(math.sqrt(9.0 / 0.75))
        assert report.sigma_plus_hat == pytest.approx(math.sqrt(2.0 / 0.25))

    def test_simulated_oscillating_path(self):
        params = SosBmParams(1.0, 0.3, 1.0, 2.0)
        path = simulate_path(params, 0.0, 100_000, 1.0, RngStream(3, 0).generator())
        report = estimate_sigmas(path)
        assert report.sigma_minus_hat == pytest.approx(1.0, rel=0.05)
        assert report.sigma_plus_hat == pytest.approx(2.0, rel=0.05)


class TestFull:
    def test_merges_everything(self):
        params = SosBmParams(1.0, 0.3, 1.0, 2.0)
        path = simulate_path(params, 0.0, 100_000, 1.0, RngStream(3, 1).generator())
        report = estimate_full(path, HAT, SQRT)
        assert None not in (report.rho_hat, report.beta_hat, report.sigma_minus_hat, report.sigma_plus_hat)
        row = report.row()
        assert len(row) == len(REPORT_FIELDS)
        assert row[REPORT_FIELDS.index("hit_zero")] == "true"

    def test_uses_estimated_volatilities(self, sticky_path):
        full = estimate_full(sticky_path, HAT, SQRT)
        sig = estimate_sigmas(sticky_path)
        direct = estimate_rho_beta(sticky_path, HAT, SQRT, sig.sigma_plus_hat, sig.sigma_minus_hat)
        assert full.rho_hat == direct.rho_hat
        assert full.beta_hat == direct.beta_hat

    def test_one_sided_path_defaults_volatility(self):
        report = estimate_full(make_path([0.0, 0.2, 0.4, 0.2, 0.0]), HAT, SQRT)
        assert report.sigma_minus_hat is None
        assert report.rho_hat is not None

    def test_reflected_params_rejected(self):
        path = make_path([0.0, 0.2, 0.0], params=SosBmParams(1.0, 1.0, 1.0, 1.0))
        with pytest.raises(ReflectionUnsupportedError):
            estimate_full(path, HAT, SQRT)

    def test_absent_cells_are_blank(self):
        row = estimate_rho_beta(make_path(np.linspace(1.0, 2.0, 11)), HAT, SQRT).row()
        assert row[REPORT_FIELDS.index("rho_hat")] == ""
        assert row[REPORT_FIELDS.index("note")] == "path did not reach 0"
