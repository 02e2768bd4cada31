"""Sparse polynomial coverings and non-flatness certificates."""

import math
from fractions import Fraction

import numpy as np
import pytest

from fflab.errors import (
    DegenerateRange,
    NotInFamily,
    OracleMissing,
    QTooSmall,
)
from fflab.oscillatory import polynomial_phase
from fflab.polycover import (
    SparsePolynomial,
    covering_intervals,
    nonflat_certificate,
    real_roots,
    small_value_intervals,
)


def random_family_member(rng, k, N):
    exps = sorted(rng.choice(np.arange(0, N + 1), size=k, replace=False))[::-1]
    coeffs = rng.integers(1, N ** 4 + 1, size=k) * rng.choice([-1, 1], size=k)
    return SparsePolynomial(tuple((int(c), int(u)) for c, u in zip(coeffs, exps)),
                            k=k, N=N)


class TestSparsePolynomial:
    def test_construction_sorts_and_validates(self):
        p = SparsePolynomial(((1, 2), (3, 5)))
        assert p.terms == ((3, 5), (1, 2))
        assert p.degree == 5
        with pytest.raises(ValueError):
            SparsePolynomial(((0, 2),))
        with pytest.raises(ValueError):
            SparsePolynomial(((1, 2), (2, 2)))

    def test_family_bounds(self):
        SparsePolynomial(((9999, 10), (-1, 0)), k=2, N=10)
        with pytest.raises(NotInFamily):
            SparsePolynomial(((10001, 10),), k=2, N=10)
        with pytest.raises(NotInFamily):
            SparsePolynomial(((1, 11),), k=2, N=10)
        with pytest.raises(NotInFamily):
            SparsePolynomial(((1, 3), (1, 2), (1, 1)), k=2, N=10)

    def test_string_roundtrip(self):
        p = SparsePolynomial.from_string("3:7,-2:1")
        assert str(p) == "3:7,-2:1"
        assert p(2.0) == pytest.approx(3 * 128 - 4)

    def test_evaluation_error_bound(self):
        p = SparsePolynomial(((810000, 30), (-1, 0)))
        x = 2.9999
        val, err = p.evaluate(x)
        exact = 810000 * Fraction(x) ** 30 - 1
        assert abs(val - float(exact)) <= err

    def test_derivative(self):
        p = SparsePolynomial(((2, 12), (-2, 11), (5, 0)))
        assert p.derivative().terms == ((24, 11), (-22, 10))


class TestRootIsolation:
    def test_monomial_has_no_roots_above_one(self):
        assert real_roots(SparsePolynomial(((3, 20),)), 2.0, 3.0) == []

    def test_single_interior_root(self):
        p = SparsePolynomial(((1, 10), (-3000, 0)))
        roots = real_roots(p, 2.0, 3.0)
        assert len(roots) == 1
        assert roots[0] == pytest.approx(3000 ** 0.1, rel=1e-10)

    def test_root_at_endpoint(self):
        p = SparsePolynomial(((1, 12), (-2, 11)))   # x^11 (x - 2)
        roots = real_roots(p, 2.0, 3.0)
        assert len(roots) == 1
        assert roots[0] == pytest.approx(2.0, abs=1e-9)

    def test_count_bounded_by_descartes(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            p = random_family_member(rng, 3, 20)
            roots = real_roots(p, 1.5, 4.0)
            assert len(roots) <= 2 * 3

    def test_dense_scan_agreement(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            p = random_family_member(rng, 3, 15)
            roots = real_roots(p, 2.0, 3.0)
            xs = np.linspace(2.0, 3.0, 200_001)
            vals = p.evaluate_array(xs)[0]
            crossings = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
            # every sign change sits next to an isolated root
            for i in crossings:
                assert any(abs(r - xs[i]) < 2e-5 for r in roots)


class TestCoveringIntervals:
    def test_monomial_needs_no_covering(self):
        p = SparsePolynomial(((1, 20),), k=2, N=20)
        cov = covering_intervals(p, 2.0, 3.0, 0.5)
        assert cov.count == 0
        assert cov.sigma_scale == 0.0

    def test_single_root_example(self):
        p = SparsePolynomial(((1, 10), (-3000, 0)), k=2, N=10)
        cov = covering_intervals(p, 2.0, 3.0, 0.5)
        assert cov.count == 1
        lo, hi = cov.float_intervals()[0]
        assert lo < 3000 ** 0.1 < hi
        # dense-grid oracle: nothing below threshold off the covering
        xs = np.linspace(2.0, 3.0, 1_000_001)
        vals = np.abs(p.evaluate_array(xs)[0])
        outside = cov.outside_mask(xs)
        assert vals[outside].min() >= cov.threshold

    def test_endpoint_root_example(self):
        p = SparsePolynomial(((1, 12), (-2, 11)), k=2, N=12)
        cov = covering_intervals(p, 2.0, 3.0, 0.5)
        assert cov.count == 1
        lo, hi = cov.float_intervals()[0]
        assert lo == pytest.approx(2.0, abs=1e-12)
        assert hi < 2.5

    def test_random_members_sound(self):
        rng = np.random.default_rng(101)
        xs = np.linspace(2.0, 3.0, 100_001)
        for _ in range(15):
            p = random_family_member(rng, 3, 20)
            cov = covering_intervals(p, 2.0, 3.0, 0.5)
            assert cov.count <= 8
            vals = np.abs(p.evaluate_array(xs)[0])
            outside = cov.outside_mask(xs, margin=1e-5)
            if outside.any():
                assert vals[outside].min() >= cov.threshold * 0.999999

    def test_roots_contained(self):
        rng = np.random.default_rng(59)
        for _ in range(10):
            p = random_family_member(rng, 3, 18)
            cov = covering_intervals(p, 2.0, 3.0, 0.4)
            for r in real_roots(p, 2.0, 3.0):
                assert not cov.outside_mask(np.array([r]))[0]

    def test_monotone_in_epsilon(self):
        p = SparsePolynomial(((1, 10), (-3000, 0)), k=2, N=10)
        sizes = []
        for eps in (0.2, 0.5, 0.8):
            cov = covering_intervals(p, 2.0, 3.0, eps)
            sizes.append(sum(h - l for l, h in cov.float_intervals()))
        assert sizes[0] >= sizes[1] >= sizes[2]

    def test_guards(self):
        p = SparsePolynomial(((1, 5),), k=2, N=10)
        with pytest.raises(DegenerateRange):
            covering_intervals(p, 0.5, 3.0, 0.5)
        with pytest.raises(DegenerateRange):
            covering_intervals(p, 2.0, 2.0, 0.5)
        with pytest.raises(NotInFamily):
            covering_intervals(SparsePolynomial(((1, 5),)), 2.0, 3.0, 0.5)
        with pytest.raises(ValueError):
            covering_intervals(p, 2.0, 3.0, 1.5)


class TestSmallValueIntervals:
    def test_constant_polynomial(self):
        p = SparsePolynomial(((1, 0),))
        cov = small_value_intervals(p, 2.0, 3.0, 8.0)
        assert cov.count == 0

    def test_linear_root(self):
        p = SparsePolynomial(((2, 1), (-5, 0)))      # 2x - 5
        cov = small_value_intervals(p, 2.0, 3.0, 8.0)
        assert cov.count == 1
        lo, hi = cov.intervals[0]
        assert lo < Fraction(5, 2) < hi
        assert hi - lo <= Fraction(2) ** -8

    def test_q_guard(self):
        p = SparsePolynomial(((2, 1), (-5, 0)))
        with pytest.raises(QTooSmall):
            small_value_intervals(p, 2.0, 3.0, 3.0)

    def test_random_members(self):
        rng = np.random.default_rng(211)
        for _ in range(5):
            p = random_family_member(rng, 3, 12)
            q = 7.3
            cov = small_value_intervals(p, 2.0, 3.0, q)
            assert cov.count <= 8
            width_cap = 2.0 ** float(-p.degree * q)
            for lo, hi in cov.intervals:
                assert float(hi - lo) <= width_cap * (1 + 1e-12)
            # any interior root must be covered
            for r in real_roots(p, 2.0, 3.0):
                covered = any(float(l) <= r <= float(h) for l, h in cov.intervals)
                assert covered


class TestNonFlat:
    def test_linear_phase_certificate(self):
        phase = polynomial_phase([0.0, 1.0])
        cert = nonflat_certificate(phase, (0.0, 1.0), 1, 1.0)
        assert cert.certified
        assert cert.delta == 0.5

    def test_quadratic_needs_second_order(self):
        phase = polynomial_phase([0.0, -1.0, 1.0])    # x^2 - x
        cert = nonflat_certificate(phase, (0.0, 1.0), 2, 0.5)
        assert cert.certified
        assert cert.delta == 0.25
        # first order alone fails at the stationary point
        ref = nonflat_certificate(phase, (0.0, 1.0), 1, 0.5)
        assert not ref.certified
        assert abs(ref.witness - 0.5) < 0.05

    def test_zero_phase_refuted(self):
        phase = polynomial_phase([0.0])
        ref = nonflat_certificate(phase, (0.0, 1.0), 1, 1.0)
        assert not ref.certified

    def test_oracle_missing(self):
        phase = polynomial_phase([0.0, 0.0, 1.0])
        with pytest.raises(OracleMissing):
            nonflat_certificate(phase, (0.0, 1.0), 9, 1.0)

    def test_rho_shrinks_oscillation(self):
        phase = polynomial_phase([0.0, 0.0, 0.0, 1.0], interval=(0, 1))
        cert = nonflat_certificate(phase, (0.0, 1.0), 3, 0.8)
        assert cert.certified
        # the cubic's derivatives move by at most c0/4 within any rho-window
        xs = np.linspace(0, 1, 2001)
        for order in range(0, 4):
            vals = phase.derivative(order)(xs)
            win = max(2, int(cert.rho / (xs[1] - xs[0])))
            sl = np.lib.stride_tricks.sliding_window_view(vals, win)
            assert (sl.max(axis=-1) - sl.min(axis=-1)).max() <= 0.8 / 4 + 1e-9
