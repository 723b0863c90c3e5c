"""Oracle tests: exact fractions, exact identities, quadrature agreement."""

import math
from fractions import Fraction

import numpy as np
import pytest

from mtest.exactprob import CapacityError, MarginalSpec, NumericError, TableCounts
from mtest.enumeration import enumerate_tables
from mtest.oracle import (
    quadrature_two_sided,
    rational_one_sided,
    rational_two_sided,
)

from _helpers import random_table


class TestRationalTwoSided:
    @pytest.mark.parametrize(
        "counts,expected",
        [
            (((0, 0), (10, 7)), Fraction(1, 18)),
            (((1, 0), (0, 1)), Fraction(1, 6)),
            (((1,), (1,), (0,)), Fraction(1, 6)),
        ],
    )
    def test_values(self, counts, expected):
        assert rational_two_sided(TableCounts(counts)) == expected

    def test_reduced_form(self):
        value = rational_two_sided(TableCounts(((3, 1), (1, 3))))
        assert math.gcd(value.numerator, value.denominator) == 1
        assert value.denominator > 0

    def test_capacity_guard(self):
        t = TableCounts(((300, 300), (300, 300)))
        with pytest.raises(CapacityError):
            rational_two_sided(t, max_total=500)
        assert rational_two_sided(t, max_total=1200) > 0

    @pytest.mark.parametrize(
        "spec",
        [
            MarginalSpec((10, 7)),
            MarginalSpec((12, 12)),
            MarginalSpec((4, 4, 4), d=2),
            MarginalSpec((8, 8), d=3),
            MarginalSpec((2, 2, 2), d=3),
            MarginalSpec((6, 6), d=4),
        ],
    )
    def test_exact_normalization(self, spec):
        total = sum(rational_two_sided(t) for t in enumerate_tables(spec))
        assert total == Fraction(1)


class TestRationalOneSided:
    @pytest.mark.parametrize(
        "cells,expected",
        [
            ((0, 1, 1, 0), Fraction(1, 24)),
            ((1, 0, 0, 1), Fraction(5, 24)),
            ((0, 1, 2, 0), Fraction(1, 60)),
        ],
    )
    def test_values(self, cells, expected):
        assert rational_one_sided(*cells) == expected

    @pytest.mark.parametrize("n1,n2", [(1, 1), (3, 2), (7, 5), (12, 12)])
    def test_exact_normalization_half(self, n1, n2):
        total = sum(
            rational_one_sided(s1, n1 - s1, s2, n2 - s2)
            for s1 in range(n1 + 1)
            for s2 in range(n2 + 1)
        )
        assert total == Fraction(1, 2)

    def test_rejects_invalid_cells(self):
        with pytest.raises(ValueError):
            rational_one_sided(-1, 2, 1, 1)
        with pytest.raises(ValueError):
            rational_one_sided(0, 0, 1, 1)


class TestExactRecurrenceIdentities:
    def test_two_sided_step_ratio(self):
        rng = np.random.default_rng(29)
        for _ in range(200):
            t = random_table(rng, max_total=24)
            rows = t.row_sums
            candidates = [
                (j, r_to, r_from)
                for j in range(t.m)
                for r_to in range(t.d)
                for r_from in range(t.d)
                if r_to != r_from and t.counts[r_from][j] >= 1
            ]
            if not candidates:
                continue
            j, r_to, r_from = candidates[rng.integers(len(candidates))]
            moved = [list(row) for row in t.counts]
            moved[r_to][j] += 1
            moved[r_from][j] -= 1
            moved_t = TableCounts(tuple(tuple(row) for row in moved))
            ratio = Fraction(
                t.counts[r_from][j] * (1 + rows[r_to]),
                (t.counts[r_to][j] + 1) * rows[r_from],
            )
            assert rational_two_sided(moved_t) == ratio * rational_two_sided(t)

    def test_one_sided_additive_steps(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            n1, n2 = rng.integers(1, 10, size=2)
            s1 = int(rng.integers(0, n1 + 1))
            s2 = int(rng.integers(0, n2 + 1))
            f1, f2 = n1 - s1, n2 - s2
            base = rational_one_sided(s1, f1, s2, f2)
            if f1 >= 1:
                augmented = TableCounts(((s1 + 1, s2), (f1, f2)))
                expected = base + rational_two_sided(augmented) / (n1 + 1)
                assert rational_one_sided(s1 + 1, f1 - 1, s2, f2) == expected
            if s2 >= 1:
                augmented = TableCounts(((s1, s2), (f1, f2 + 1)))
                expected = base + rational_two_sided(augmented) / (n2 + 1)
                assert rational_one_sided(s1, f1, s2 - 1, f2 + 1) == expected

    def test_one_sided_chain_from_base(self):
        # walking base -> s1 increments -> s2 decrements in exact arithmetic
        # reproduces the expansion value for every cell of a small grid
        n1, n2 = 6, 5
        for s1 in range(n1 + 1):
            for s2 in range(n2 + 1):
                value = rational_one_sided(0, n1, n2, 0)
                for i in range(s1):
                    augmented = TableCounts(((i + 1, n2), (n1 - i, 0)))
                    value += rational_two_sided(augmented) / (n1 + 1)
                for t in range(n2, s2, -1):
                    augmented = TableCounts(((s1, t), (n1 - s1, n2 - t + 1)))
                    value += rational_two_sided(augmented) / (n2 + 1)
                assert value == rational_one_sided(s1, n1 - s1, s2, n2 - s2)


class TestQuadrature:
    def test_single_trial_table(self):
        t = TableCounts(((1, 0), (0, 1)))
        assert quadrature_two_sided(t, tol=1e-12) == pytest.approx(1 / 6, abs=1e-12)

    def test_base_table(self):
        t = TableCounts(((0, 0), (10, 7)))
        assert quadrature_two_sided(t, tol=1e-10) == pytest.approx(1 / 18, abs=1e-10)

    def test_matches_rational_on_random_tables(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            t = random_table(rng, d=2, max_total=20)
            exact = float(rational_two_sided(t))
            assert quadrature_two_sided(t, tol=1e-10) == pytest.approx(exact, abs=1e-10)

    def test_tol_range(self):
        t = TableCounts(((1, 0), (0, 1)))
        with pytest.raises(ValueError):
            quadrature_two_sided(t, tol=1e-15)
        with pytest.raises(ValueError):
            quadrature_two_sided(t, tol=1e-3)

    def test_rejects_more_than_two_rows(self):
        with pytest.raises(ValueError):
            quadrature_two_sided(TableCounts(((1,), (1,), (0,))))

    def test_depth_cap_raises_numeric_error(self, monkeypatch):
        import mtest.oracle as oracle

        monkeypatch.setattr(oracle, "_MAX_DEPTH", 0)
        with pytest.raises(NumericError):
            quadrature_two_sided(TableCounts(((7, 2), (3, 8))), tol=1e-14)
