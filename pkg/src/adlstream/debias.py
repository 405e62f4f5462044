"""Recursive summary statistics and the adaptive debiased lasso estimate.

For a tracked coordinate j and observations i in (n_l, m], with
w_i = phi''(x_i'beta_i), g_i = x_i'gamma_i and r_i = phi'(x_i'beta_i) - y_i:

    a1 = sum x_i r_i            a2 = sum g_i w_i x_i
    a3 = sum g_i w_i x_i'beta_i a4 = sum g_i w_i x_ij
    a5 = sum g_i^2 r_i^2

The point estimate is beta_mj - (a1'gamma_m + a2'beta_m - a3) / a4 and its
standard error sqrt(a5) / |a4|.  Raw sums are used throughout; the 1/(m - n_l)
normalisations cancel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, DataError, DegenerateInformationError, DomainError, SequencingError
from .glm_family import GlmFamily


@dataclass
class SummaryStats:
    """The five accumulators for coordinate ``j``, summed over (n_l, m].

    a2 through a5 use compensated summation.  a4 repeats exactly the arithmetic
    applied to a2[j], so the two stay bitwise equal.
    """

    j: int
    n_l: int
    a1: np.ndarray
    a2: np.ndarray
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0
    m: int = field(default=-1)
    _c2: np.ndarray = field(default=None, repr=False)
    _c3: float = field(default=0.0, repr=False)
    _c4: float = field(default=0.0, repr=False)
    _c5: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.m < 0:
            self.m = self.n_l
        if self._c2 is None:
            self._c2 = np.zeros_like(self.a2)

    @property
    def count(self) -> int:
        return self.m - self.n_l

    def arrays(self) -> list[np.ndarray]:
        return [self.a1, self.a2, self._c2]


@dataclass(frozen=True)
class AdlEstimate:
    point: float
    stderr: float
    ci_low: float
    ci_high: float
    alpha: float
    m: int
    j: int

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    @property
    def length(self) -> float:
        return self.ci_high - self.ci_low

    def to_record(self) -> dict:
        return {
            "m": self.m,
            "j": self.j,
            "point": self.point,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def stats_init(p: int, j: int, n_l: int) -> SummaryStats:
    if not 0 <= j < p:
        raise ConfigError(f"target index {j} outside [0, {p})")
    if n_l < 0:
        raise ConfigError("n_l must be non-negative")
    return SummaryStats(j=j, n_l=n_l, a1=np.zeros(p), a2=np.zeros(p))


def _kahan(total: float, comp: float, inc: float) -> tuple[float, float]:
    y = inc - comp
    t = total + y
    return t, (t - total) - y


def stats_update(
    stats: SummaryStats,
    x: np.ndarray,
    y: float,
    beta_i: np.ndarray,
    gamma_i: np.ndarray,
    family: GlmFamily,
    i: int | None = None,
) -> SummaryStats:
    """Fold observation ``i`` (default: the next one) into the accumulators."""
    if i is None:
        i = stats.m + 1
    if i <= stats.n_l:
        raise SequencingError(f"summary update at i={i} but accumulation starts after n_l={stats.n_l}")
    if i != stats.m + 1:
        raise SequencingError(f"summary update at i={i}, expected i={stats.m + 1}")
    j = stats.j
    if gamma_i[j] != -1.0:
        raise ValueError(f"gamma_i[{j}] must be -1, got {gamma_i[j]}")
    eta = float(x @ beta_i)
    w = family.phi_ddot(eta) if math.isfinite(eta) else math.nan
    r = family.phi_dot(eta) - y if math.isfinite(eta) else math.nan
    g = float(x @ gamma_i)
    coef = g * w
    inc3 = coef * eta
    inc5 = (g * r) ** 2
    if not all(math.isfinite(v) for v in (coef, r, inc3, inc5)):
        raise DataError(f"non-finite summary-statistic increment at observation {i}")

    stats.a1 += r * x
    inc2 = coef * x
    y2 = inc2 - stats._c2
    t2 = stats.a2 + y2
    stats._c2 = (t2 - stats.a2) - y2
    stats.a2 = t2
    stats.a3, stats._c3 = _kahan(stats.a3, stats._c3, inc3)
    stats.a4, stats._c4 = _kahan(stats.a4, stats._c4, coef * x[j])
    stats.a5, stats._c5 = _kahan(stats.a5, stats._c5, inc5)
    stats.m = i
    assert stats.a4 == stats.a2[j], "a4 drifted from a2[j]"
    return stats


def _check_identifiable(stats: SummaryStats):
    if stats.a4 == 0.0:
        raise DegenerateInformationError(
            f"a4 = 0 at m={stats.m} for j={stats.j}: estimate not yet identifiable"
        )


def adl_point(stats: SummaryStats, beta_m: np.ndarray, gamma_m: np.ndarray) -> float:
    _check_identifiable(stats)
    numer = float(stats.a1 @ gamma_m) + float(stats.a2 @ beta_m) - stats.a3
    return float(beta_m[stats.j]) - numer / stats.a4


def adl_stderr(stats: SummaryStats) -> float:
    _check_identifiable(stats)
    return math.sqrt(max(stats.a5, 0.0)) / abs(stats.a4)


def normal_quantile(q: float) -> float:
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    return float(ndtri(q))


def confidence_interval(point: float, stderr: float, alpha: float) -> tuple[float, float]:
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if stderr < 0:
        raise ValueError("stderr must be non-negative")
    half = normal_quantile(1.0 - alpha / 2.0) * stderr
    return point - half, point + half


def adl_estimate(
    stats: SummaryStats, beta_m: np.ndarray, gamma_m: np.ndarray, alpha: float = 0.05
) -> AdlEstimate:
    point = adl_point(stats, beta_m, gamma_m)
    se = adl_stderr(stats)
    lo, hi = confidence_interval(point, se, alpha)
    return AdlEstimate(point, se, lo, hi, alpha, stats.m, stats.j)
