"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``python3 -m pytest tests/test_acceptance.py -v``.
The Monte Carlo criteria use fixed seeds, so reruns give the same numbers.
"""

import math
import time

import numpy as np
import pytest

from sosbm.experiments import (
    ExperimentConfig,
    chapman_kolmogorov_suite,
    g_hat_mass_suite,
    gamma_suite,
    kernel_bound_suite,
    nonincreasing_with_tolerance,
    normalization_suite,
    reduction_suite,
    relative_error,
    run_ladder,
    scaling_suite,
    semigroup_suite,
)
from sosbm.kernel import SkewStickyParams, TransitionCdf, atom_probability
from sosbm.numerics import ks_distance, ks_threshold
from sosbm.sampler import sample_transition
from sosbm.statistics import g_hat_mass

pytestmark = pytest.mark.slow


@pytest.fixture
def announce(capsys):
    """Print one result line past pytest's output capture, then assert.

    ``prior`` adds time already spent in shared fixtures.
    """
    start = time.perf_counter()

    def done(number: int, title: str, ok: bool, detail: str, budget: float, prior: float = 0.0) -> None:
        elapsed = time.perf_counter() - start + prior
        in_time = elapsed < budget
        verdict = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\ncriterion {number:>2} {verdict}: {title}; {detail}; {elapsed:.1f}s of {budget:.0f}s")
        assert ok, detail
        assert in_time, f"took {elapsed:.1f}s, budget {budget:.0f}s"

    return done


def test_01_kernel_normalization(announce):
    report = normalization_suite()
    worst = report.summary["max_gap"]
    announce(1, "kernel mass is 1 on the 400-point grid", report.passed, f"max |mass - 1| = {worst:.2e}", 60)


def test_02_chapman_kolmogorov(announce):
    report = chapman_kolmogorov_suite(points=50, seed=0)
    worst = report.summary["max_gap"]
    announce(2, "Chapman-Kolmogorov, 50 random points per cell", report.passed and worst < 1e-6,
             f"{len(report.rows)} points, max gap = {worst:.2e}", 300)


def test_03_scaling_identity(announce):
    report = scaling_suite(cs=(0.25, 4.0), tolerance=1e-7)
    worst = max(r.ratio for r in report.rows if r.ratio is not None)
    announce(3, "density scaling for c in {0.25, 4}", report.passed, f"max discrepancy = {worst:.2e}", 60)


SAMPLER_CELLS = [
    (SkewStickyParams(0.0, 0.0), 1.0, 0.4),
    (SkewStickyParams(1.0, 0.0), 1.0, 0.0),
    (SkewStickyParams(1.0, 0.5), 1.0, -1.0),
    (SkewStickyParams(0.1, -0.9), 0.5, 0.3),
    (SkewStickyParams(10.0, 0.9), 0.1, 0.0),
    (SkewStickyParams(2.0, -0.5), 2.0, 1.5),
]


def test_04_sampler_exactness(announce):
    n = 100_000
    threshold = ks_threshold(n, 0.01)
    lines, ok = [], True
    for k, (params, t, x) in enumerate(SAMPLER_CELLS):
        draws = sample_transition(params, t, x, np.random.default_rng(1000 + k), size=n)
        cdf = TransitionCdf(params, t, x)
        ks = ks_distance(draws, cdf, {0.0: cdf.atom})
        p = float(atom_probability(params, t, x))
        freq = float(np.mean(draws == 0.0))
        sd = math.sqrt(p * (1.0 - p) / n)
        atom_ok = abs(freq - p) <= 3.0 * sd if p > 0 else freq == 0.0
        ok &= ks < threshold and atom_ok
        lines.append(f"ks={ks:.4f} atom {freq:.4f} vs {p:.4f}")
    announce(4, "one-step KS at 1% for 6 cells plus atom frequency", ok,
             f"threshold {threshold:.4f}: " + " | ".join(lines), 120)


def _ladder(u: str) -> tuple:
    config = ExperimentConfig(rho=1.0, beta=0.5, x=0.0, t=1.0, g="hat", u=u, paths=200, seed=0,
                              ladder=(1000, 10_000, 100_000))
    start = time.perf_counter()
    rows = run_ladder(config)
    return config, rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def sqrt_ladder():
    return _ladder("sqrt")


@pytest.fixture(scope="module")
def log_ladder():
    return _ladder("log")


def test_05_local_time_consistency(announce, sqrt_ladder, log_ladder):
    ok, parts = True, []
    for label, (config, rows, _) in (("sqrt", sqrt_ladder), ("log", log_ladder)):
        first, last = rows[0], rows[-1]
        z_ok = abs(last.z_score) <= 2.0
        shrink_ok = abs(last.discrepancy) < abs(first.discrepancy)
        ok &= z_ok and shrink_ok
        parts.append(f"u_n={label}: z={last.z_score:+.2f}, |disc| {abs(first.discrepancy):.4f} -> "
                     f"{abs(last.discrepancy):.4f}")
    prior = sqrt_ladder[2] + log_ladder[2]
    announce(5, "statistic matches m0(g) times reference local time at n = 1e5", ok, "; ".join(parts), 600, prior)


def test_06_rho_beta_estimators(announce, sqrt_ladder):
    config, rows, seconds = sqrt_ladder
    ok, parts = True, []
    for name, truth in (("rho_hat", 1.0), ("beta_hat", 0.5)):
        errors = [relative_error(r.medians[name], truth) for r in rows]
        ses = [r.median_ses[name] / abs(truth) for r in rows]
        final_ok = errors[-1] <= 0.1
        monotone = nonincreasing_with_tolerance(errors, ses)
        ok &= final_ok and monotone
        parts.append(f"{name} medians " + ", ".join(f"{r.medians[name]:.4f}" for r in rows)
                     + f" (rel err {errors[-1]:.3f}, nonincreasing={monotone})")
    announce(6, "median rho and beta within 10% at n = 1e5", ok, "; ".join(parts), 600, seconds)


def test_07_joint_estimation(announce):
    config = ExperimentConfig(rho=1.0, beta=0.3, sigma_minus=1.0, sigma_plus=2.0, paths=200, seed=0,
                              ladder=(100_000,))
    row = run_ladder(config)[-1]
    truth = {"rho_hat": 1.0, "beta_hat": 0.3, "sigma_minus_hat": 1.0, "sigma_plus_hat": 2.0}
    errors = {k: relative_error(row.medians.get(k, math.nan), v) for k, v in truth.items()}
    ok = all(e <= 0.1 for e in errors.values())
    detail = ", ".join(f"{k} {row.medians.get(k, math.nan):.4f} (rel err {errors[k]:.3f})" for k in truth)
    announce(7, "oscillating case, four medians within 10% at n = 1e5", ok, detail, 600)


def test_08_g_hat_mass(announce):
    report = g_hat_mass_suite(ladder=(1e2, 1e4, 1e6))
    exact = g_hat_mass(SkewStickyParams(0.0, 0.0), 1e6)
    sticky = [g_hat_mass(SkewStickyParams(1.0, b), 1e6) for b in (0.0, 0.5)]
    ok = report.passed and exact == 1.0 and all(abs(v - 1.0) <= 0.02 for v in sticky)
    announce(8, "scaled speed measure of g_hat is 1 at n = 1e6", ok,
             f"rho=0 value {exact!r}; rho=1 values " + ", ".join(f"{v:.10f}" for v in sticky), 120)


def test_09_reduction_in_law(announce):
    reports = reduction_suite(paths=100_000, n=1, seed=0)
    ok = all(r.passed for r in reports)
    detail = " | ".join(f"{r.config}: ks={r.ks_statistic:.4f} < {r.ks_threshold:.4f}, zeros kept={r.zero_sets_match}"
                        for r in reports)
    announce(9, "t1 image of oscillating draws matches the skew-sticky kernel", ok, detail, 300)


def test_10_bound_audits(announce):
    bound = kernel_bound_suite()
    semigroup = semigroup_suite()
    gamma = gamma_suite()
    fitted = [r.lhs for r in bound.rows if r.quantity.startswith("fitted K")]
    finite = all(math.isfinite(k) for k in fitted) and all(math.isfinite(r.lhs) for r in gamma.rows)
    spreads = {k: v for k, v in bound.summary.items() if k.startswith("spread")}
    slopes = [r.lhs for r in semigroup.rows]
    ok = bound.passed and semigroup.passed and gamma.passed and finite
    detail = (f"max fitted K {max(fitted):.3f}, max spread across rho {max(spreads.values()):.3f}, "
              f"slopes in [{min(slopes):.3f}, {max(slopes):.3f}]")
    announce(10, "kernel envelope and semigroup decay audits", ok, detail, 300)
