"""Table-space enumeration and m-test p-values.

A table space is the set of all d x m count matrices with the given column
totals; its size is prod_j C(n_j + d - 1, d - 1).  The p-value of an
observed table is the total probability of the tables whose probability
does not exceed the observed one (the observed table's probability acts as
an offset).  One-sided p-values are doubled because only half of the
nuisance-parameter space is integrated, and clamped to 1.

The scan over the space is partitioned by the last column's composition
index.  Partitions are processed as vectorized blocks (a pure-Python
odometer is kept as a fallback for spaces whose prefix product is too large
to materialize) and combined in a fixed order, so results are identical for
any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .exactprob import (
    CapacityError,
    MarginalSpec,
    TableCounts,
    log_factorial_array,
    one_sided_base,
    one_sided_log_prob,
    two_sided_log_prob,
    _log_prob_2x2,
    _logaddexp,
)

__all__ = [
    "PValueResult",
    "count_tables",
    "compositions",
    "enumerate_tables",
    "one_sided_pvalue",
    "probability_grid",
    "two_sided_normalization",
    "two_sided_pvalue",
    "DEFAULT_MAX_TABLES",
    "MAX_TABLES_ENV",
    "TIE_TOLERANCE",
]

#: Tables whose log probability is within this of the offset count as ties.
#: Real ties in these spaces are exact rational equalities (symmetry
#: partners); an absolute log-space tolerance catches them without
#: absorbing genuinely larger probabilities.
TIE_TOLERANCE = 1e-9

#: Refuse enumerations beyond this many tables unless overridden.
DEFAULT_MAX_TABLES = 100_000_000

#: Environment variable overriding the enumeration cap.
MAX_TABLES_ENV = "MTEST_MAX_TABLES"

# Block sizing for the vectorized scan: partitions are processed in groups
# whose (group x prefix) element count stays near _CHUNK; prefixes larger
# than _PREFIX_LIMIT rows are not materialized at all.
_CHUNK = 1 << 18
_PREFIX_LIMIT = 1 << 22


def _max_tables(override: int | None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get(MAX_TABLES_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_MAX_TABLES


@dataclass(frozen=True)
class PValueResult:
    """An m-test p-value plus scan diagnostics.

    ``p_value`` is clamped to [0, 1]; ``p_value_unclamped`` keeps the raw
    accumulated value (the doubling of one-sided sums can push central
    tables slightly above 1).  ``log_p_value`` is the log of the clamped
    p-value and stays meaningful when ``p_value`` underflows.
    """

    p_value: float
    log_p_value: float
    p_value_unclamped: float
    offset_log_prob: float
    tables_total: int
    tables_included: int
    sided: str


def compositions(n: int, d: int) -> list[tuple[int, ...]]:
    """All d-part compositions of n (ordered nonnegative parts), ascending.

    The list is in lexicographic order, so (0, ..., 0, n) comes first and
    (n, 0, ..., 0) last; its length is C(n + d - 1, d - 1).
    """
    if d < 1:
        raise ValueError("need at least one part")
    if d == 1:
        return [(n,)]
    out: list[tuple[int, ...]] = []
    stack = [((), n)]
    while stack:
        prefix, rest = stack.pop()
        if len(prefix) == d - 1:
            out.append(prefix + (rest,))
            continue
        # push descending so the ascending branch is processed first
        for v in range(rest, -1, -1):
            stack.append((prefix + (v,), rest - v))
    return out


def count_tables(spec: MarginalSpec) -> int:
    """Number of d x m tables with the given column totals (exact integer)."""
    total = 1
    for nj in spec.n:
        total *= math.comb(nj + spec.d - 1, spec.d - 1)
    return total


def enumerate_tables(spec: MarginalSpec) -> Iterator[TableCounts]:
    """Yield every table with the given column totals exactly once.

    Odometer order: per-column compositions in lexicographic order, with
    the leftmost column advancing fastest.  The first table is the one
    with every count in the last outcome row.
    """
    cols = [compositions(nj, spec.d) for nj in spec.n]
    d, m = spec.d, spec.m
    for rev_idx in product(*(range(len(c)) for c in reversed(cols))):
        idx = rev_idx[::-1]
        chosen = [cols[j][idx[j]] for j in range(m)]
        yield TableCounts(tuple(tuple(chosen[j][r] for j in range(m)) for r in range(d)))


# ---------------------------------------------------------------------------
# vectorized scan machinery
# ---------------------------------------------------------------------------


def _column_block(n: int, d: int, lf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Composition counts (k, d) and log multinomial coefficients (k,)."""
    counts = np.asarray(compositions(n, d), dtype=np.int64)
    logm = lf[n] - lf[counts].sum(axis=1)
    return counts, logm


def _prefix_block(
    blocks: list[tuple[np.ndarray, np.ndarray]], d: int
) -> tuple[np.ndarray, np.ndarray]:
    """Combine column blocks into the product space, leftmost fastest.

    An empty block list yields the one-row empty product, so spaces with a
    single column still partition over that column.
    """
    counts = np.zeros((1, d), dtype=np.int64)
    logm = np.zeros(1)
    for col_counts, col_logm in blocks:
        b = counts.shape[0]
        k = col_counts.shape[0]
        counts = np.tile(counts, (k, 1)) + np.repeat(col_counts, b, axis=0)
        logm = np.tile(logm, k) + np.repeat(col_logm, b)
    return counts, logm


class _LogSumTally:
    """Order-fixed log-sum-exp accumulator with compensated summation.

    Keeps the running maximum M and a Kahan-compensated sum of
    exp(x - M); rescales both when a new maximum arrives.  Feeding the
    same values in the same order always produces the same result, so
    partition order (not worker count) determines the output.
    """

    def __init__(self) -> None:
        self.count = 0
        self._max = -math.inf
        self._sum = 0.0
        self._carry = 0.0

    def add(self, count: int, log_partial: float) -> None:
        self.count += int(count)
        if log_partial == -math.inf:
            return
        if log_partial <= self._max:
            self._accumulate(math.exp(log_partial - self._max))
            return
        scale = math.exp(self._max - log_partial) if self._max > -math.inf else 0.0
        self._sum *= scale
        self._carry *= scale
        self._max = log_partial
        self._accumulate(1.0)

    def _accumulate(self, value: float) -> None:
        y = value - self._carry
        t = self._sum + y
        self._carry = (t - self._sum) - y
        self._sum = t

    @property
    def log_sum(self) -> float:
        if self._sum <= 0.0 or self._max == -math.inf:
            return -math.inf
        return self._max + math.log(self._sum)


def _two_sided_scan(
    spec: MarginalSpec,
    log_threshold: float,
    max_tables: int | None = None,
    threads: int = 1,
) -> tuple[int, float, int]:
    """Count and log-sum the tables with log probability <= log_threshold.

    Returns (included_count, log_sum_of_included, tables_total).  With
    ``log_threshold = +inf`` this sums the whole space (normalization).
    """
    total = count_tables(spec)
    cap = _max_tables(max_tables)
    if total > cap:
        raise CapacityError(
            f"{total} tables exceed the enumeration cap {cap}; "
            f"raise {MAX_TABLES_ENV} or max_tables to override"
        )
    d, m, n_total = spec.d, spec.m, spec.total
    lf = log_factorial_array(n_total + d)
    const = float(lf[d - 1] - lf[n_total + d - 1])

    prefix_size = 1
    for nj in spec.n[:-1]:
        prefix_size *= math.comb(nj + d - 1, d - 1)
    if prefix_size > _PREFIX_LIMIT:
        return _two_sided_scan_python(spec, log_threshold, total, const, lf)

    cols = [_column_block(nj, d, lf) for nj in spec.n]
    pre_counts, pre_logm = _prefix_block(cols[:-1], d)
    last_counts, last_logm = cols[-1]

    b = pre_counts.shape[0]
    group = max(1, _CHUNK // b)
    starts = range(0, last_counts.shape[0], group)

    def process(start: int) -> tuple[int, float, float]:
        stop = min(start + group, last_counts.shape[0])
        rows = pre_counts[None, :, :] + last_counts[start:stop, None, :]
        logp = lf[rows].sum(axis=2)
        logp += pre_logm[None, :] + last_logm[start:stop, None] + const
        mask = logp <= log_threshold
        cnt = int(mask.sum())
        if cnt == 0:
            return 0, -math.inf, 0.0
        vals = logp[mask]
        m_b = float(vals.max())
        s_b = float(np.exp(vals - m_b).sum())
        return cnt, m_b, s_b

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(process, starts))
    else:
        results = [process(s) for s in starts]

    tally = _LogSumTally()
    for cnt, m_b, s_b in results:
        if cnt:
            tally.add(cnt, m_b + math.log(s_b))
    return tally.count, tally.log_sum, total


def _two_sided_scan_python(
    spec: MarginalSpec, log_threshold: float, total: int, const: float, lf: np.ndarray
) -> tuple[int, float, int]:
    """Streaming odometer scan; slow but memory-flat."""
    lf_list = lf.tolist()
    cols = [compositions(nj, spec.d) for nj in spec.n]
    logms = [
        [
            lf_list[nj] - sum(lf_list[c] for c in comp)
            for comp in col
        ]
        for nj, col in zip(spec.n, cols)
    ]
    tally = _LogSumTally()
    for rev_idx in product(*(range(len(c)) for c in reversed(cols))):
        idx = rev_idx[::-1]
        rows = [0] * spec.d
        logm = const
        for j, i in enumerate(idx):
            comp = cols[j][i]
            logm += logms[j][i]
            for r in range(spec.d):
                rows[r] += comp[r]
        logp = logm + sum(lf_list[r] for r in rows)
        if logp <= log_threshold:
            tally.add(1, logp)
    return tally.count, tally.log_sum, total


def two_sided_normalization(
    spec: MarginalSpec, max_tables: int | None = None, threads: int = 1
) -> float:
    """Sum of the two-sided probabilities over the whole table space.

    A correctness self-check: the result should equal 1 up to rounding.
    """
    _, log_sum, _ = _two_sided_scan(spec, math.inf, max_tables, threads)
    return math.exp(log_sum)


def two_sided_pvalue(
    t: TableCounts, max_tables: int | None = None, threads: int = 1
) -> PValueResult:
    """Two-sided m-test p-value of an observed d x m table.

    Sums the probabilities of all same-marginal tables whose log
    probability is at most the observed one plus TIE_TOLERANCE.
    """
    offset = two_sided_log_prob(t)
    included, log_sum, total = _two_sided_scan(
        t.marginals, offset + TIE_TOLERANCE, max_tables, threads
    )
    raw = math.exp(log_sum)
    return PValueResult(
        p_value=min(1.0, max(0.0, raw)),
        log_p_value=min(0.0, log_sum),
        p_value_unclamped=raw,
        offset_log_prob=offset,
        tables_total=total,
        tables_included=included,
        sided="two",
    )


# ---------------------------------------------------------------------------
# one-sided scan (2x2)
# ---------------------------------------------------------------------------


def _one_sided_row_edge(n1: int, n2: int) -> list[float]:
    """log P- along the s2 = n2 edge, for s1 = 0..n1."""
    lf = log_factorial_array(n1 + n2 + 2)
    edge = [one_sided_base(n1, n2)]
    denom = math.log(n1 + 1)
    for i in range(1, n1 + 1):
        # augmented table (i, n1-i+1, n2, 0): first column total n1+1
        inc = float(
            (lf[n1 + 1] - lf[i] - lf[n1 - i + 1])
            + lf[i + n2]
            + lf[n1 - i + 1]
            - lf[n1 + n2 + 2]
        ) - denom
        edge.append(_logaddexp(edge[-1], inc))
    return edge


def _one_sided_row(s1: int, n1: int, n2: int, edge_log: float) -> np.ndarray:
    """log P-(s1, s2) for s2 = 0..n2, from the edge value at s2 = n2.

    The row is the edge value plus the suffix sums of the decrement terms,
    each term being the two-sided probability of an augmented table whose
    second column total is n2+1, divided by n2+1.
    """
    lf = log_factorial_array(n1 + n2 + 2)
    f1 = n1 - s1
    t = np.arange(1, n2 + 1)
    incs = (
        (lf[n1] - lf[s1] - lf[f1])
        + (lf[n2 + 1] - lf[t] - lf[n2 + 1 - t])
        + lf[s1 + t]
        + lf[f1 + n2 + 1 - t]
        - lf[n1 + n2 + 2]
        - math.log(n2 + 1)
    )
    row = np.empty(n2 + 1)
    row[n2] = edge_log
    if n2 > 0:
        suffix = np.logaddexp.accumulate(incs[::-1])[::-1]
        row[:n2] = np.logaddexp(edge_log, suffix)
    return row


def one_sided_pvalue(
    s1: int, f1: int, s2: int, f2: int, max_tables: int | None = None
) -> PValueResult:
    """One-sided m-test p-value of a 2x2 table (first column favored).

    Sums the one-sided probabilities over tables at or below the observed
    one, doubles the result (only half the nuisance space is integrated),
    and clamps to 1.  The one-sided probability grows with s1 and shrinks
    with s2, so each row scan stops at the first value above the offset
    and the row loop stops once a whole row is above it.
    """
    lp_obs = one_sided_log_prob(s1, f1, s2, f2)  # validates the cells
    n1, n2 = s1 + f1, s2 + f2
    total = (n1 + 1) * (n2 + 1)
    cap = _max_tables(max_tables)
    if total > cap:
        raise CapacityError(
            f"{total} tables exceed the enumeration cap {cap}; "
            f"raise {MAX_TABLES_ENV} or max_tables to override"
        )
    threshold = lp_obs + TIE_TOLERANCE
    edge = _one_sided_row_edge(n1, n2)
    tally = _LogSumTally()
    for row_s1 in range(n1 + 1):
        if edge[row_s1] > threshold:
            break  # rows only grow from here on
        row = _one_sided_row(row_s1, n1, n2, edge[row_s1])
        included = row <= threshold
        cnt = int(included.sum())
        if cnt:
            tally.add(cnt, float(np.logaddexp.reduce(row[included])))
    log_sum = tally.log_sum + math.log(2.0)
    raw = math.exp(log_sum)
    return PValueResult(
        p_value=min(1.0, max(0.0, raw)),
        log_p_value=min(0.0, log_sum),
        p_value_unclamped=raw,
        offset_log_prob=lp_obs,
        tables_total=total,
        tables_included=tally.count,
        sided="one",
    )


def probability_grid(
    spec: MarginalSpec, sided: str = "two"
) -> list[tuple[int, int, float, float]]:
    """All (s1, s2, probability, log_probability) rows for a 2x2 space.

    The two-sided grid sums to 1 and the one-sided grid to 1/2.  Rows are
    ordered s1-major, s2 ascending within each row.
    """
    if spec.d != 2 or spec.m != 2:
        raise ValueError("probability grids are defined for 2x2 spaces only")
    n1, n2 = spec.n
    if sided == "two":
        lf = log_factorial_array(n1 + n2 + 2)
        a = np.arange(n1 + 1)[:, None]
        b = np.arange(n2 + 1)[None, :]
        s_tot = a + b
        logp = (
            (lf[n1] - lf[a] - lf[n1 - a])
            + (lf[n2] - lf[b] - lf[n2 - b])
            + lf[s_tot]
            + lf[n1 + n2 - s_tot]
            - lf[n1 + n2 + 1]
        )
    elif sided == "one":
        edge = _one_sided_row_edge(n1, n2)
        logp = np.empty((n1 + 1, n2 + 1))
        for s1_row in range(n1 + 1):
            logp[s1_row] = _one_sided_row(s1_row, n1, n2, edge[s1_row])
    else:
        raise ValueError(f"sided must be 'two' or 'one', got {sided!r}")
    return [
        (i, j, float(np.exp(logp[i, j])), float(logp[i, j]))
        for i in range(n1 + 1)
        for j in range(n2 + 1)
    ]
