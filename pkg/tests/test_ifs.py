"""Symbolic word/cut-set machinery and point sampling."""

import math
from fractions import Fraction

import numpy as np
import pytest

from fflab.errors import (
    BadWeights,
    DegenerateAttractor,
    ExplosionGuard,
    NonContracting,
    SupportViolation,
)
from fflab.ifs import (
    Word,
    cut_set,
    cut_set_arrays,
    cylinder_interval,
    load_ifs_config,
    sample_point,
    validate_ifs,
)

from conftest import random_valid_ifs


class TestValidation:
    def test_cantor_valid(self, cantor):
        assert cantor.alphabet_size == 2
        assert cantor.is_homogeneous
        assert cantor.maps[0].fixed_point == 0
        assert cantor.maps[1].fixed_point == 1

    def test_lebesgue_valid(self, lebesgue):
        assert lebesgue.attractor_bounds() == (0.0, 1.0)

    def test_equal_fixed_points_rejected(self):
        with pytest.raises(DegenerateAttractor):
            validate_ifs([("1/2", "0"), ("1/2", "0")], ["1/2", "1/2"], ("0", "1"))

    def test_single_map_rejected(self):
        with pytest.raises(DegenerateAttractor):
            validate_ifs([("1/2", "0")], ["1"], ("0", "1"))

    def test_non_contracting(self):
        with pytest.raises(NonContracting):
            validate_ifs([("1", "0"), ("1/2", "1/2")], ["1/2", "1/2"], ("0", "1"))
        with pytest.raises(NonContracting):
            validate_ifs([("0", "0"), ("1/2", "1/2")], ["1/2", "1/2"], ("0", "1"))

    def test_support_violation(self):
        with pytest.raises(SupportViolation):
            validate_ifs([("1/2", "3/4"), ("1/2", "0")], ["1/2", "1/2"], ("0", "1"))

    def test_bad_weights(self):
        with pytest.raises(BadWeights):
            validate_ifs([("1/3", "0"), ("1/3", "2/3")], ["1/2", "1/3"], ("0", "1"))
        with pytest.raises(BadWeights):
            validate_ifs([("1/3", "0"), ("1/3", "2/3")], ["1", "0"], ("0", "1"))

    def test_negative_ratios_allowed(self):
        ifs = validate_ifs([("-1/2", "1/2"), ("1/3", "2/3")],
                           ["1/2", "1/2"], ("0", "1"))
        assert ifs.maps[0].ratio == Fraction(-1, 2)


class TestWords:
    def test_incremental_matches_recompute(self, cantor):
        rng = np.random.default_rng(5)
        for _ in range(50):
            letters = rng.integers(0, 2, size=int(rng.integers(1, 14)))
            w = Word.from_letters(cantor, letters.tolist())
            r = math.prod(cantor.maps[i].ratio_float for i in letters)
            p = math.prod(float(cantor.weights[i]) for i in letters)
            t = float(w.exact_translation(cantor))
            assert w.ratio_product == pytest.approx(r, rel=1e-14)
            assert w.mass == pytest.approx(p, rel=1e-14)
            assert w.translation == pytest.approx(t, rel=1e-14, abs=1e-15)

    def test_cylinder_intervals(self, cantor):
        w2 = Word.from_letters(cantor, [1])
        assert cylinder_interval(w2, cantor.support_floats) == (
            pytest.approx(2 / 3), pytest.approx(1.0))
        w12 = Word.from_letters(cantor, [0, 1])
        lo, hi = cylinder_interval(w12, cantor.support_floats)
        assert (lo, hi) == (pytest.approx(2 / 9), pytest.approx(3 / 9))

    def test_cylinder_length_is_ratio_times_support(self):
        ifs = validate_ifs([("-2/5", "2/5"), ("1/4", "3/4")],
                           ["1/2", "1/2"], ("0", "1"))
        rng = np.random.default_rng(11)
        for _ in range(20):
            letters = rng.integers(0, 2, size=6).tolist()
            w = Word.from_letters(ifs, letters)
            lo, hi = cylinder_interval(w, ifs.support_floats)
            assert hi - lo == pytest.approx(abs(w.ratio_product), rel=1e-12)


def brute_force_cut_set(ifs, scale):
    """Oracle: expand every branch, stop at the defining condition."""
    out = []

    def rec(word):
        if abs(word.ratio_product) <= scale:
            out.append(word.letters)
            return
        for i in range(ifs.alphabet_size):
            rec(word.extend(ifs, i))

    rec(Word.empty())
    return sorted(out)


class TestCutSets:
    def test_cantor_scale_ninth(self, cantor):
        cs = cut_set(cantor, 1 / 9)
        assert len(cs) == 4
        assert all(len(w.letters) == 2 for w in cs.words)
        assert all(w.ratio_product == pytest.approx(1 / 9) for w in cs.words)

    def test_mixed_ratios_example(self):
        ifs = validate_ifs([("1/2", "0"), ("1/4", "3/4")],
                           ["1/2", "1/2"], ("0", "1"))
        cs = cut_set(ifs, 1 / 8)
        got = sorted(w.letters for w in cs.words)
        assert got == brute_force_cut_set(ifs, 1 / 8)
        assert got == [(0, 0, 0), (0, 0, 1), (0, 1), (1, 0), (1, 1)]

    def test_single_letters_at_coarse_scale(self):
        ifs = validate_ifs([("1/2", "0"), ("1/4", "3/4")],
                           ["1/2", "1/2"], ("0", "1"))
        cs = cut_set(ifs, 1 / 2)
        assert sorted(w.letters for w in cs.words) == [(0,), (1,)]

    def test_stopping_condition(self, cantor):
        for scale in (0.4, 0.11, 0.04, 0.01):
            for w in cut_set(cantor, scale).words:
                assert abs(w.ratio_product) <= scale
                parent = w.ratio_product / cantor.maps[w.letters[-1]].ratio_float
                assert abs(parent) > scale

    def test_partition_of_mass(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            ifs = random_valid_ifs(rng)
            for scale in (0.3, 0.1, 0.04):
                cs = cut_set(ifs, scale)
                assert abs(cs.masses().sum() - 1.0) < 1e-10

    def test_nesting(self, cantor):
        coarse = {w.letters for w in cut_set(cantor, 1 / 9).words}
        fine = cut_set(cantor, 1 / 81)
        for w in fine.words:
            prefixes = [w.letters[:k] for k in range(len(w.letters) + 1)]
            assert sum(p in coarse for p in prefixes) == 1

    def test_ratio_count_logarithmic(self):
        # log-commensurable ratios keep the distinct-ratio count linear in log(1/b)
        ifs = validate_ifs([("1/2", "0"), ("1/4", "3/4")],
                           ["1/2", "1/2"], ("0", "1"))
        for j in (4, 6, 8, 10, 12):
            b = 2.0 ** -j
            cs = cut_set(ifs, b)
            assert cs.distinct_ratio_count() <= 2 * math.log(1 / b)

    def test_budget_guard(self, cantor):
        with pytest.raises(ExplosionGuard):
            cut_set(cantor, 1e-9, budget=100)
        with pytest.raises(ExplosionGuard):
            cut_set_arrays(cantor, 1e-9, budget=100)

    def test_arrays_match_words(self, cantor):
        cs = cut_set(cantor, 0.03)
        r, t, p = cut_set_arrays(cantor, 0.03)
        assert len(r) == len(cs)
        assert np.sort(r) == pytest.approx(np.sort(cs.ratio_products()))
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        got = np.sort(t)
        want = np.sort([w.translation for w in cs.words])
        assert got == pytest.approx(want)

    def test_cylinders_cover_samples(self):
        rng = np.random.default_rng(23)
        ifs = random_valid_ifs(rng)
        cs = cut_set(ifs, 0.05)
        support = ifs.support_floats
        cyls = [cylinder_interval(w, support) for w in cs.words]
        for seed in range(30):
            x = float(sample_point(ifs, seed, 60).value)
            slack = 2.0 ** -50
            assert any(lo - slack <= x <= hi + slack for lo, hi in cyls)


class TestSampling:
    def test_deterministic(self, cantor):
        a = sample_point(cantor, 42, 64)
        b = sample_point(cantor, 42, 64)
        assert a.value == b.value
        assert float(a.error_radius) <= 2.0 ** -64

    def test_cantor_digits(self, cantor):
        # base-3 digits up to the guaranteed precision use only {0, 2}
        for seed in range(20):
            sp = sample_point(cantor, seed, 48)
            digits = math.floor(48 * math.log(2) / math.log(3))
            x = sp.value
            for _ in range(digits):
                x *= 3
                d = int(x)
                assert d in (0, 2)
                x -= d

    def test_depth_one_at_one_bit(self, lebesgue):
        sp = sample_point(lebesgue, 3, 1)
        assert sp.depth == 1
        assert float(sp.value) in (0.0, 0.5)

    def test_lebesgue_uniform_ks(self, lebesgue):
        xs = np.array([float(sample_point(lebesgue, s, 53).value)
                       for s in range(10_000)])
        xs.sort()
        n = len(xs)
        up = np.arange(1, n + 1) / n
        lo = np.arange(0, n) / n
        ks = max(np.abs(up - xs).max(), np.abs(lo - xs).max())
        assert ks < 0.02


class TestConfig:
    def test_roundtrip(self, tmp_path):
        cfg = tmp_path / "m.cfg"
        cfg.write_text(
            "# comment\nmap 1/3 0\nmap 1/3 2/3   # inline\n"
            "weights 3/4 1/4\nsupport 0 1\n"
        )
        ifs = load_ifs_config(cfg)
        assert ifs.weights == (Fraction(3, 4), Fraction(1, 4))
        assert ifs.maps[1].translation == Fraction(2, 3)

    def test_default_weights(self, tmp_path):
        cfg = tmp_path / "m.cfg"
        cfg.write_text("map 0.5 0\nmap 0.5 0.5\nsupport 0 1\n")
        ifs = load_ifs_config(cfg)
        assert ifs.weights == (Fraction(1, 2), Fraction(1, 2))

    def test_bad_directive(self, tmp_path):
        cfg = tmp_path / "m.cfg"
        cfg.write_text("maps 1/2 0\n")
        with pytest.raises(ValueError):
            load_ifs_config(cfg)
