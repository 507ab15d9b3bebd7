"""Estimators of stickiness, skewness and one-sided volatilities from a sampled path.

Estimates are conditional: each one is reported only when the path shows
the event it needs (a visit to 0 for rho and beta, a visit to a half-line
for that side's volatility).  Visits are detected on the grid, which misses
excursions that begin and end between two observations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .paths import SamplePath
from .reports import format_float
from .statistics import (
    Interval,
    NormalizingSequence,
    TestFunction,
    occupation_counts,
    occupation_statistic,
    one_sided_sums,
    quadratic_variation_sums,
)

REPORT_FIELDS = (
    "n", "t", "hit_zero", "hit_positive", "hit_negative",
    "rho_hat", "beta_hat", "sigma_minus_hat", "sigma_plus_hat",
    "zero_count", "s_plus", "s_minus", "beta_raw", "qv_plus", "qv_minus",
    "occupation_plus", "occupation_minus", "note",
)


@dataclass
class EstimateReport:
    n: int
    t: float
    hit_zero: bool = False
    hit_positive: bool = False
    hit_negative: bool = False
    rho_hat: float | None = None
    beta_hat: float | None = None
    sigma_minus_hat: float | None = None
    sigma_plus_hat: float | None = None
    diagnostics: dict[str, float | str | None] = field(default_factory=dict)

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        """Fill absent estimates and diagnostics from ``other``."""
        for name in ("rho_hat", "beta_hat", "sigma_minus_hat", "sigma_plus_hat"):
            if getattr(self, name) is None:
                setattr(self, name, getattr(other, name))
        self.hit_zero |= other.hit_zero
        self.hit_positive |= other.hit_positive
        self.hit_negative |= other.hit_negative
        notes = [s for s in (self.diagnostics.get("note"), other.diagnostics.get("note")) if s]
        self.diagnostics = {**other.diagnostics, **self.diagnostics}
        if notes:
            self.diagnostics["note"] = "; ".join(notes)
        return self

    def row(self) -> list[str]:
        data = {k: v for k, v in asdict(self).items() if k != "diagnostics"}
        data.update(self.diagnostics)
        cells = []
        for name in REPORT_FIELDS:
            value = data.get(name)
            if isinstance(value, bool):
                cells.append("true" if value else "false")
            elif isinstance(value, float):
                cells.append(format_float(value))
            else:
                cells.append("" if value is None else str(value))
        return cells


def visited_zero(values: np.ndarray) -> bool:
    """Grid surrogate for the path reaching 0: an exact zero or a sign change."""
    if np.any(values == 0.0):
        return True
    signs = np.sign(values)
    return bool(np.any(signs[1:] != signs[:-1]))


def _require_non_reflected(path: SamplePath) -> None:
    if path.params is not None:
        path.params.require_non_reflected()


def estimate_rho_beta(path: SamplePath, g: TestFunction, u: NormalizingSequence,
                      sigma_plus: float = 1.0, sigma_minus: float = 1.0) -> EstimateReport:
    """rho_hat = 2 * occupation of {0} / (S+ + S-) and beta_hat = (S+ - S-)/(S+ + S-)."""
    values = path.values
    report = EstimateReport(path.n, path.t, hit_zero=visited_zero(values),
                            hit_positive=bool(np.any(values > 0)), hit_negative=bool(np.any(values < 0)))
    plus, minus = one_sided_sums(path, g, u, sigma_plus, sigma_minus)
    s_plus, s_minus = plus.terminal, minus.terminal
    zero_count = int(occupation_counts(path, Interval.point(0.0))[-1])
    report.diagnostics.update(zero_count=zero_count, s_plus=s_plus, s_minus=s_minus)
    if not report.hit_zero:
        report.diagnostics["note"] = "path did not reach 0"
        return report
    total = s_plus + s_minus
    if not total > 0.0:
        report.diagnostics["note"] = "one-sided sums vanish"
        return report
    report.rho_hat = 2.0 * occupation_statistic(path, Interval.point(0.0)).terminal / total
    raw = (s_plus - s_minus) / total
    report.diagnostics["beta_raw"] = raw
    report.beta_hat = min(1.0, max(-1.0, raw))
    return report


def estimate_sigmas(path: SamplePath) -> EstimateReport:
    """sigma_hat on each side: sqrt(quadratic variation / occupation) of that half-line."""
    values = path.values
    report = EstimateReport(path.n, path.t, hit_zero=visited_zero(values),
                            hit_positive=bool(np.any(values > 0)), hit_negative=bool(np.any(values < 0)))
    qv_plus, qv_minus = (tr.terminal for tr in quadratic_variation_sums(path))
    occ_plus = occupation_statistic(path, Interval.positive()).terminal
    occ_minus = occupation_statistic(path, Interval.negative()).terminal
    report.diagnostics.update(qv_plus=qv_plus, qv_minus=qv_minus,
                              occupation_plus=occ_plus, occupation_minus=occ_minus)
    if report.hit_positive and occ_plus > 0.0:
        report.sigma_plus_hat = math.sqrt(qv_plus / occ_plus)
    if report.hit_negative and occ_minus > 0.0:
        report.sigma_minus_hat = math.sqrt(qv_minus / occ_minus)
    return report


def estimate_full(path: SamplePath, g: TestFunction, u: NormalizingSequence) -> EstimateReport:
    """Volatilities first, then stickiness and skewness normalized by them.

    A side the path never visited contributes nothing to its one-sided sum,
    so a missing volatility estimate is replaced by 1 there.
    """
    _require_non_reflected(path)
    sig = estimate_sigmas(path)
    sp = sig.sigma_plus_hat if sig.sigma_plus_hat is not None else 1.0
    sm = sig.sigma_minus_hat if sig.sigma_minus_hat is not None else 1.0
    return estimate_rho_beta(path, g, u, sp, sm).merge(sig)
