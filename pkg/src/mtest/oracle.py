"""Exact-arithmetic and quadrature oracles for the probability kernels.

Everything in :mod:`mtest.exactprob` is floating point; this module computes
the same quantities slowly but exactly (arbitrary-precision rationals) or
independently (adaptive quadrature), so the fast kernels can be validated
against values that cannot silently drift.

Not built for speed.  Size guards keep accidental huge inputs from hanging
the caller; raise them explicitly if you really want a 1000-trial fraction.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .exactprob import CapacityError, NumericError, TableCounts

__all__ = [
    "rational_one_sided",
    "rational_two_sided",
    "quadrature_two_sided",
]

#: Default bound on the grand total N for rational computations.
DEFAULT_MAX_TOTAL = 500


def _guard_total(n_total: int, max_total: int) -> None:
    if n_total > max_total:
        raise CapacityError(
            f"grand total {n_total} exceeds the rational-oracle guard {max_total}"
        )


def rational_two_sided(t: TableCounts, max_total: int = DEFAULT_MAX_TOTAL) -> Fraction:
    """Exact two-sided probability of a table as a reduced fraction.

    Computes (d-1)! * prod_j multinomial(n_j; o_.j) * prod_r R_r! / (N+d-1)!
    in integer arithmetic.
    """
    d, n_total = t.d, t.total
    _guard_total(n_total, max_total)
    num = math.factorial(d - 1)
    for j, nj in enumerate(t.column_sums):
        coef = math.factorial(nj)
        for row in t.counts:
            coef //= math.factorial(row[j])
        num *= coef
    for r in t.row_sums:
        num *= math.factorial(r)
    return Fraction(num, math.factorial(n_total + d - 1))


def rational_one_sided(
    s1: int, f1: int, s2: int, f2: int, max_total: int = DEFAULT_MAX_TOTAL
) -> Fraction:
    """Exact one-sided probability of a 2x2 table as a reduced fraction.

    Expands the inner integral over the second experiment's success
    probability q on [0, theta] with the binomial theorem,

        int_0^theta q^s2 (1-q)^f2 dq
            = sum_k C(f2, k) (-1)^k theta^(s2+k+1) / (s2+k+1),

    and evaluates each resulting outer term as an exact Beta integral
    a! b! / (a+b+1)!.  The alternating signs are harmless in exact
    arithmetic.
    """
    for name, v in (("s1", s1), ("f1", f1), ("s2", s2), ("f2", f2)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    n1, n2 = s1 + f1, s2 + f2
    if n1 < 1 or n2 < 1:
        raise ValueError("both column totals must be >= 1")
    _guard_total(n1 + n2, max_total)
    total = Fraction(0)
    for k in range(f2 + 1):
        a = s1 + s2 + k + 1
        beta = Fraction(math.factorial(a) * math.factorial(f1), math.factorial(a + f1 + 1))
        total += Fraction(math.comb(f2, k) * (-1) ** k, s2 + k + 1) * beta
    return math.comb(n1, s1) * math.comb(n2, s2) * total


def quadrature_two_sided(t: TableCounts, tol: float = 1e-10) -> float:
    """Two-sided probability of a 2 x m table by adaptive Simpson quadrature.

    Integrates the binomial prefactor times theta^S (1-theta)^F over [0, 1]
    to absolute error <= tol.  Only defined for d = 2; raises NumericError
    if the recursion fails to converge within the depth cap.
    """
    if t.d != 2:
        raise ValueError("quadrature oracle handles two-outcome tables only")
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    s_total, f_total = t.row_sums
    log_pre = 0.0
    for j, nj in enumerate(t.column_sums):
        log_pre += math.lgamma(nj + 1) - math.lgamma(t.counts[0][j] + 1) - math.lgamma(
            t.counts[1][j] + 1
        )

    def integrand(theta: float) -> float:
        if theta <= 0.0:
            return math.exp(log_pre) if s_total == 0 else 0.0
        if theta >= 1.0:
            return math.exp(log_pre) if f_total == 0 else 0.0
        return math.exp(
            log_pre + s_total * math.log(theta) + f_total * math.log1p(-theta)
        )

    return _adaptive_simpson(integrand, 0.0, 1.0, tol)


_MAX_DEPTH = 60


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _recurse(f, a, b, fa, fm, fb, whole, tol, _MAX_DEPTH)


def _recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise NumericError(
            f"adaptive quadrature did not converge on [{a}, {b}] at tol={tol}"
        )
    half = 0.5 * tol
    return _recurse(f, a, m, fa, flm, fm, left, half, depth - 1) + _recurse(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )
