"""Log-space probability kernels for the m-test.

The m-test scores a d x m contingency table of outcome counts (rows are
outcomes, columns are independent experiments with fixed totals n_j) by the
probability of observing the table when the unknown outcome probabilities
are integrated uniformly over their whole domain.  The integral has a
closed form built from factorials::

    P(table) = (d-1)! * prod_j multinomial(n_j; o_1j..o_dj)
                      * prod_r R_r! / (N + d - 1)!

where R_r is the sum of row r and N = sum_j n_j.  For two outcomes this
reduces to ``prod_j C(n_j, s_j) * S! * F! / (N+1)!`` with S successes and
F failures in total.

Everything here is evaluated in natural-log space so that large marginals
cannot underflow.  Besides the closed form, the module implements the
base-case/step recurrences that reach any table from the all-in-last-row
table by moving one count at a time, and the one-sided quantities for 2x2
tables, where the second experiment's success probability is restricted to
lie below the first.

All functions are pure.  They share one module-level log-factorial table;
grow it up-front (any large call does so) before using threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "CapacityError",
    "NumericError",
    "LogFactorialTable",
    "MarginalSpec",
    "TableCounts",
    "log_binomial",
    "log_factorial",
    "log_factorial_array",
    "log_multinomial",
    "one_sided_base",
    "one_sided_log_prob",
    "one_sided_step_s1",
    "one_sided_step_s2",
    "two_sided_base",
    "two_sided_log_prob",
    "two_sided_step",
]

LogProb = float  # natural logarithm of a probability


class CapacityError(RuntimeError):
    """A requested computation exceeds a configured size guard."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalSpec:
    """Fixed column totals of a table space: m experiments, d outcomes."""

    n: tuple[int, ...]
    d: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if len(self.n) < 1:
            raise ValueError("at least one column marginal is required")
        if any(v < 1 for v in self.n):
            raise ValueError(f"column marginals must be >= 1, got {self.n}")
        if self.d < 2:
            raise ValueError(f"outcome count d must be >= 2, got {self.d}")

    @property
    def m(self) -> int:
        return len(self.n)

    @property
    def total(self) -> int:
        """Grand total N = sum of all column marginals."""
        return sum(self.n)


@dataclass(frozen=True)
class TableCounts:
    """A d x m matrix of nonnegative outcome counts.

    Rows are outcomes, columns are experiments.  For d = 2 the first row
    holds the successes s_j and the second row the failures f_j.
    """

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(v) for v in row) for row in self.counts)
        object.__setattr__(self, "counts", rows)
        if len(rows) < 2:
            raise ValueError("a table needs at least two outcome rows")
        m = len(rows[0])
        if m < 1:
            raise ValueError("a table needs at least one column")
        if any(len(row) != m for row in rows):
            raise ValueError("all rows must have the same number of columns")
        if any(v < 0 for row in rows for v in row):
            raise ValueError("counts must be nonnegative")
        if any(sum(row[j] for row in rows) < 1 for j in range(m)):
            raise ValueError("every column total must be >= 1")

    @classmethod
    def from_2x2(cls, s1: int, f1: int, s2: int, f2: int) -> "TableCounts":
        """Build the 2x2 table with successes (s1, s2) and failures (f1, f2)."""
        return cls(((s1, s2), (f1, f2)))

    @property
    def d(self) -> int:
        return len(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts[0])

    @property
    def column_sums(self) -> tuple[int, ...]:
        return tuple(sum(row[j] for row in self.counts) for j in range(self.m))

    @property
    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def total(self) -> int:
        return sum(self.row_sums)

    @property
    def marginals(self) -> MarginalSpec:
        return MarginalSpec(n=self.column_sums, d=self.d)


# ---------------------------------------------------------------------------
# log-factorial table
# ---------------------------------------------------------------------------

#: Largest argument the shared table will grow to; guards against absurd
#: allocations from corrupt inputs (10^7 entries is 80 MB).
DEFAULT_TABLE_LIMIT = 10_000_000


class LogFactorialTable:
    """Precomputed ln(k!) values with amortized on-demand growth.

    Growth doubles the capacity.  Reads are thread-safe once the table
    covers the needed range; growth itself is not synchronized.
    """

    def __init__(self, size: int = 1024, limit: int | None = DEFAULT_TABLE_LIMIT):
        self.limit = limit
        self._lf = self._build(min(size, limit + 1 if limit is not None else size))

    @staticmethod
    def _build(size: int) -> np.ndarray:
        return gammaln(np.arange(max(size, 2), dtype=np.float64) + 1.0)

    def ensure(self, n: int) -> None:
        """Grow the table so that ln(k!) is available for all k <= n."""
        if n < len(self._lf):
            return
        if self.limit is not None and n > self.limit:
            raise ValueError(
                f"log-factorial argument {n} exceeds the table limit {self.limit}"
            )
        size = max(n + 1, 2 * len(self._lf))
        if self.limit is not None:
            size = min(size, self.limit + 1)
        self._lf = self._build(size)

    @property
    def array(self) -> np.ndarray:
        """The underlying ln(k!) vector (do not mutate)."""
        return self._lf

    def log_factorial(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"factorial argument must be >= 0, got {k}")
        self.ensure(k)
        return float(self._lf[k])

    def log_binomial(self, n: int, k: int) -> float:
        if k < 0 or k > n:
            raise ValueError(f"binomial coefficient needs 0 <= k <= n, got n={n}, k={k}")
        self.ensure(n)
        lf = self._lf
        return float(lf[n] - lf[k] - lf[n - k])

    def log_multinomial(self, n: int, counts) -> float:
        if any(c < 0 for c in counts):
            raise ValueError("multinomial counts must be nonnegative")
        if sum(counts) != n:
            raise ValueError(f"multinomial counts must sum to {n}")
        self.ensure(n)
        lf = self._lf
        return float(lf[n] - sum(lf[c] for c in counts))


_TABLE = LogFactorialTable()


def log_factorial(k: int) -> float:
    """ln(k!) from the shared table."""
    return _TABLE.log_factorial(k)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) with relative error below 1e-12."""
    return _TABLE.log_binomial(n, k)


def log_multinomial(n: int, counts) -> float:
    """ln of the multinomial coefficient n! / prod(counts!)."""
    return _TABLE.log_multinomial(n, counts)


def log_factorial_array(max_value: int) -> np.ndarray:
    """Shared ln(k!) vector covering at least 0..max_value (for array code)."""
    _TABLE.ensure(max_value)
    return _TABLE.array


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


# ---------------------------------------------------------------------------
# two-sided probabilities
# ---------------------------------------------------------------------------


def two_sided_log_prob(t: TableCounts) -> LogProb:
    """ln of the integrated (two-sided) probability of a table.

    Evaluates ``(d-1)! * prod_j multinomial(n_j; o_.j) * prod_r R_r! /
    (N+d-1)!`` in log space.  The value is finite and <= 0 for every table
    with positive column totals.
    """
    d = t.d
    n_total = t.total
    _TABLE.ensure(n_total + d)
    lf = _TABLE.array
    lp = float(lf[d - 1]) - float(lf[n_total + d - 1])
    for j, nj in enumerate(t.column_sums):
        lp += float(lf[nj])
        for row in t.counts:
            lp -= float(lf[row[j]])
    for r in t.row_sums:
        lp += float(lf[r])
    return lp


def two_sided_base(spec: MarginalSpec) -> LogProb:
    """ln probability of the table with every count in the last outcome row.

    Equals ``ln((d-1)! * N! / (N+d-1)!)``, which is ``ln(1/(N+1))`` for two
    outcomes.
    """
    d, n_total = spec.d, spec.total
    _TABLE.ensure(n_total + d)
    lf = _TABLE.array
    return float(lf[d - 1] + lf[n_total] - lf[n_total + d - 1])


def two_sided_step(
    t: TableCounts, logp: LogProb, col: int, row_to: int, row_from: int
) -> LogProb:
    """ln probability after moving one count from row_from to row_to in col.

    Given ``logp = two_sided_log_prob(t)``, returns the log probability of
    the table with ``o[row_to][col]`` incremented and ``o[row_from][col]``
    decremented, using the multiplicative update

        o_from * (1 + R_to) / ((o_to + 1) * R_from)

    where the row sums R are taken on ``t`` before the move.
    """
    if not 0 <= col < t.m:
        raise ValueError(f"column index {col} out of range")
    if not 0 <= row_to < t.d or not 0 <= row_from < t.d:
        raise ValueError("row index out of range")
    if row_to == row_from:
        raise ValueError("row_to and row_from must differ")
    o_from = t.counts[row_from][col]
    if o_from < 1:
        raise ValueError(f"cannot move a count out of empty cell ({row_from}, {col})")
    o_to = t.counts[row_to][col]
    rows = t.row_sums
    return (
        logp
        + math.log(o_from)
        + math.log(1 + rows[row_to])
        - math.log(o_to + 1)
        - math.log(rows[row_from])
    )


# ---------------------------------------------------------------------------
# one-sided probabilities (2x2)
# ---------------------------------------------------------------------------


def _log_prob_2x2(s1: int, f1: int, s2: int, f2: int) -> float:
    """Two-sided log probability of a 2x2 table given as four cells."""
    n1, n2 = s1 + f1, s2 + f2
    n_total = n1 + n2
    _TABLE.ensure(n_total + 2)
    lf = _TABLE.array
    return float(
        (lf[n1] - lf[s1] - lf[f1])
        + (lf[n2] - lf[s2] - lf[f2])
        + lf[s1 + s2]
        + lf[f1 + f2]
        - lf[n_total + 1]
    )


def _check_one_sided_cells(s1: int, f1: int, s2: int, f2: int) -> tuple[int, int]:
    for name, v in (("s1", s1), ("f1", f1), ("s2", s2), ("f2", f2)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    n1, n2 = s1 + f1, s2 + f2
    if n1 < 1 or n2 < 1:
        raise ValueError("both column totals must be >= 1")
    return n1, n2


def one_sided_base(n1: int, n2: int) -> LogProb:
    """ln of the one-sided probability of the table s1=0, f1=n1, s2=n2, f2=0.

    Closed form: 1 / ((n1+n2+1) * (n1+n2+2) * C(n1+n2, n1)).
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("column totals must be >= 1")
    n_total = n1 + n2
    return (
        -math.log(n_total + 1)
        - math.log(n_total + 2)
        - log_binomial(n_total, n1)
    )


def one_sided_step_s1(s1: int, f1: int, s2: int, f2: int, logpm: LogProb) -> LogProb:
    """ln P-(s1+1, f1-1, s2, f2) from ln P-(s1, f1, s2, f2).

    Adds the two-sided probability of the augmented table (s1+1, f1, s2, f2),
    whose first column total is n1+1, divided by n1+1.  The result is never
    below ``logpm``.
    """
    n1, _ = _check_one_sided_cells(s1, f1, s2, f2)
    if f1 < 1:
        raise ValueError("f1 must be >= 1 to move a failure to a success")
    inc = _log_prob_2x2(s1 + 1, f1, s2, f2) - math.log(n1 + 1)
    return _logaddexp(logpm, inc)


def one_sided_step_s2(s1: int, f1: int, s2: int, f2: int, logpm: LogProb) -> LogProb:
    """ln P-(s1, f1, s2-1, f2+1) from ln P-(s1, f1, s2, f2).

    Adds the two-sided probability of the augmented table (s1, f1, s2, f2+1),
    whose second column total is n2+1, divided by n2+1.  The result is never
    below ``logpm``.
    """
    _, n2 = _check_one_sided_cells(s1, f1, s2, f2)
    if s2 < 1:
        raise ValueError("s2 must be >= 1 to move a success to a failure")
    inc = _log_prob_2x2(s1, f1, s2, f2 + 1) - math.log(n2 + 1)
    return _logaddexp(logpm, inc)


def one_sided_log_prob(s1: int, f1: int, s2: int, f2: int) -> LogProb:
    """ln of the one-sided probability of a 2x2 table.

    Walks the recurrence chain from the base table (0, n1, n2, 0): first all
    s1 increments along s2 = n2, then all s2 decrements within the target
    row.  The chain order is fixed so results are deterministic; any order
    gives the same value mathematically.
    """
    n1, n2 = _check_one_sided_cells(s1, f1, s2, f2)
    lp = one_sided_base(n1, n2)
    for i in range(s1):
        lp = one_sided_step_s1(i, n1 - i, n2, 0, lp)
    for t in range(n2, s2, -1):
        lp = one_sided_step_s2(s1, f1, t, n2 - t, lp)
    return lp
