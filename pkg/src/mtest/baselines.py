"""Fisher and Barnard exact tests for 2x2 tables.

Self-contained baselines for power comparisons against the m-test, so the
package does not depend on external statistics libraries.  Fisher's test
conditions on both margins (hypergeometric); Barnard's test fixes only the
column margins and maximizes over the nuisance success probability.

Both are deterministic pure functions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .exactprob import TableCounts, log_factorial_array

__all__ = ["barnard_pvalue", "fisher_pvalue", "DEFAULT_GRID_POINTS"]

#: Nuisance-grid resolution used by barnard_pvalue unless overridden.
DEFAULT_GRID_POINTS = 100

#: Probability-ordering ties, log space (same rule as the m-test scan).
_TIE_TOLERANCE = 1e-9

#: Slack when comparing Barnard statistics (they are ratios of floats).
_STAT_TOLERANCE = 1e-12


def _require_2x2(t: TableCounts) -> tuple[int, int, int, int]:
    if t.d != 2 or t.m != 2:
        raise ValueError(f"expected a 2x2 table, got {t.d}x{t.m}")
    (s1, s2), (f1, f2) = t.counts
    return s1, f1, s2, f2


def fisher_pvalue(t: TableCounts, sided: str = "two") -> float:
    """Fisher's exact test p-value for a 2x2 table.

    Conditions on both margins: the first column's success count follows a
    hypergeometric law.  ``sided="two"`` sums the probabilities of all
    conditional tables no more probable than the observed one
    (probability ordering); ``sided="one_greater"`` sums the upper tail
    (first column at least as success-rich as observed).

    A table with an empty row or column margin carries no evidence and
    yields p = 1.
    """
    if sided not in ("two", "one_greater"):
        raise ValueError(f"sided must be 'two' or 'one_greater', got {sided!r}")
    s1, f1, s2, f2 = _require_2x2(t)
    n1, n2 = s1 + f1, s2 + f2
    n_total = n1 + n2
    s_total = s1 + s2
    if s_total == 0 or s_total == n_total:
        return 1.0
    lf = log_factorial_array(n_total + 1)
    lo = max(0, s_total - n2)
    hi = min(n1, s_total)
    k = np.arange(lo, hi + 1)
    logp = (
        (lf[n1] - lf[k] - lf[n1 - k])
        + (lf[n2] - lf[s_total - k] - lf[n2 - s_total + k])
        - (lf[n_total] - lf[s_total] - lf[n_total - s_total])
    )
    obs = float(logp[s1 - lo])
    if sided == "two":
        included = logp <= obs + _TIE_TOLERANCE
    else:
        included = k >= s1
    return min(1.0, float(np.exp(logp[included]).sum()))


def _score_statistic(s1: int, n1: int, s2: int, n2: int) -> float:
    pooled = (s1 + s2) / (n1 + n2)
    if pooled <= 0.0 or pooled >= 1.0:
        return 0.0
    return abs(s1 / n1 - s2 / n2) / math.sqrt(
        pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    )


def barnard_pvalue(t: TableCounts, grid_points: int = DEFAULT_GRID_POINTS) -> float:
    """Barnard's exact unconditional test p-value for a 2x2 table.

    Orders tables by the pooled-variance score statistic
    |p1 - p2| / sqrt(p (1-p) (1/n1 + 1/n2)) (zero when the pooled rate p is
    0 or 1), then maximizes the rejection-region probability over the
    nuisance success probability.  The maximization scans ``grid_points``
    midpoints (k - 0.5) / grid_points and polishes around the best one so
    the reported maximum does not depend on the grid phase.
    """
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    s1, f1, s2, f2 = _require_2x2(t)
    n1, n2 = s1 + f1, s2 + f2
    n_total = n1 + n2
    t_obs = _score_statistic(s1, n1, s2, n2)

    lf = log_factorial_array(n_total + 1)
    a = np.arange(n1 + 1)[:, None]
    b = np.arange(n2 + 1)[None, :]
    stats = np.empty((n1 + 1, n2 + 1))
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            stats[i, j] = _score_statistic(i, n1, j, n2)
    region = stats >= t_obs - _STAT_TOLERANCE
    lcoef = ((lf[n1] - lf[a] - lf[n1 - a]) + (lf[n2] - lf[b] - lf[n2 - b]))[region]
    ssum = (a + b)[region]

    def tail_probability(theta: float) -> float:
        logs = lcoef + ssum * math.log(theta) + (n_total - ssum) * math.log1p(-theta)
        return float(np.exp(logs).sum())

    thetas = (np.arange(1, grid_points + 1) - 0.5) / grid_points
    values = [tail_probability(th) for th in thetas]
    best_idx = int(np.argmax(values))
    best = values[best_idx]
    eps = 1e-12
    lo = max(eps, thetas[best_idx] - 1.0 / grid_points)
    hi = min(1.0 - eps, thetas[best_idx] + 1.0 / grid_points)
    polish = minimize_scalar(
        lambda th: -tail_probability(th),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    best = max(best, float(-polish.fun))
    return min(1.0, best)
