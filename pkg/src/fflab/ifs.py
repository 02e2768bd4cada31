"""Symbolic machinery for self-similar iterated function systems.

Maps, weights and supports are kept as exact rationals (anything the
:class:`fractions.Fraction` constructor accepts, including strings like
``"1/3"`` or ``"0.25"``), with float mirrors for the numeric pipelines.
Words carry their contraction product, translation and mass; cut-sets
collect the words stopped at a given geometric scale.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadWeights,
    DegenerateAttractor,
    ExplosionGuard,
    NonContracting,
    SupportViolation,
)

#: Hard cap on the number of words an explicit cut-set may hold.
DEFAULT_WORD_BUDGET = 10_000_000

DEFAULTS = {
    "word_budget": DEFAULT_WORD_BUDGET,
    "weight_sum_tolerance": 1e-12,
}

_RatLike = "Fraction | int | float | str"


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class SimilarityMap:
    """One contracting similarity x -> ratio*x + translation."""

    ratio: Fraction
    translation: Fraction

    def __post_init__(self):
        object.__setattr__(self, "ratio", _rat(self.ratio))
        object.__setattr__(self, "translation", _rat(self.translation))

    @property
    def ratio_float(self) -> float:
        return float(self.ratio)

    @property
    def translation_float(self) -> float:
        return float(self.translation)

    @property
    def fixed_point(self) -> Fraction:
        return self.translation / (1 - self.ratio)

    def __call__(self, x):
        if isinstance(x, Fraction):
            return self.ratio * x + self.translation
        return self.ratio_float * x + self.translation_float


@dataclass(frozen=True)
class IteratedFunctionSystem:
    """A validated self-similar IFS with weights and support interval."""

    maps: tuple[SimilarityMap, ...]
    weights: tuple[Fraction, ...]
    support: tuple[Fraction, Fraction]
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def alphabet_size(self) -> int:
        return len(self.maps)

    def _cached(self, key, maker):
        if key not in self._arrays:
            self._arrays[key] = maker()
        return self._arrays[key]

    @property
    def ratios(self) -> np.ndarray:
        return self._cached(
            "ratios", lambda: np.array([m.ratio_float for m in self.maps])
        )

    @property
    def translations(self) -> np.ndarray:
        return self._cached(
            "translations",
            lambda: np.array([m.translation_float for m in self.maps]),
        )

    @property
    def weight_floats(self) -> np.ndarray:
        return self._cached(
            "weights", lambda: np.array([float(w) for w in self.weights])
        )

    @property
    def support_floats(self) -> tuple[float, float]:
        return float(self.support[0]), float(self.support[1])

    @property
    def support_width(self) -> float:
        return float(self.support[1] - self.support[0])

    @property
    def support_center(self) -> float:
        return float((self.support[0] + self.support[1]) / 2)

    @property
    def min_ratio(self) -> float:
        return float(min(abs(m.ratio) for m in self.maps))

    @property
    def max_ratio(self) -> float:
        return float(max(abs(m.ratio) for m in self.maps))

    @property
    def is_homogeneous(self) -> bool:
        return len({m.ratio for m in self.maps}) == 1

    def attractor_bounds(self) -> tuple[float, float]:
        """Bounding interval of the attractor (fixed point of the hull map)."""
        lo, hi = self.support
        for _ in range(4096):
            pts = [m(lo) for m in self.maps] + [m(hi) for m in self.maps]
            nlo, nhi = min(pts), max(pts)
            if nlo == lo and nhi == hi:
                break
            lo, hi = nlo, nhi
            if float(hi - lo) <= 1e-15 * max(1.0, abs(float(hi))):
                break
        return float(lo), float(hi)

    def content_hash(self) -> str:
        parts = []
        for m in self.maps:
            parts.append(f"{m.ratio}:{m.translation}")
        parts.append(",".join(str(w) for w in self.weights))
        parts.append(f"{self.support[0]}:{self.support[1]}")
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def validate_ifs(maps, weights, support) -> IteratedFunctionSystem:
    """Validate maps/weights/support and assemble an IFS.

    ``maps`` is an iterable of ``SimilarityMap`` or ``(ratio, translation)``
    pairs; values may be given as Fractions, ints, floats or strings.
    Raises :class:`NonContracting`, :class:`SupportViolation`,
    :class:`DegenerateAttractor` or :class:`BadWeights`.
    """
    built = []
    for m in maps:
        if not isinstance(m, SimilarityMap):
            r, t = m
            m = SimilarityMap(_rat(r), _rat(t))
        built.append(m)
    if not built:
        raise DegenerateAttractor("need at least one map")

    lo, hi = (_rat(support[0]), _rat(support[1]))
    if not lo < hi:
        raise ValueError(f"support needs lo < hi, got [{lo}, {hi}]")

    for m in built:
        if m.ratio == 0 or abs(m.ratio) >= 1:
            raise NonContracting(f"ratio {m.ratio} outside (-1,1)\\{{0}}")
    for m in built:
        a, b = sorted((m(lo), m(hi)))
        if a < lo or b > hi:
            raise SupportViolation(
                f"map {float(m.ratio)}*x+{float(m.translation)} sends "
                f"[{float(lo)}, {float(hi)}] to [{float(a)}, {float(b)}]"
            )

    fixed = {m.fixed_point for m in built}
    if len(fixed) < 2:
        raise DegenerateAttractor("all fixed points coincide")

    ws = tuple(_rat(w) for w in weights)
    if len(ws) != len(built):
        raise BadWeights(f"{len(ws)} weights for {len(built)} maps")
    if any(w <= 0 for w in ws):
        raise BadWeights("weights must be strictly positive")
    if abs(float(sum(ws)) - 1.0) > DEFAULTS["weight_sum_tolerance"]:
        raise BadWeights(f"weights sum to {float(sum(ws))}, not 1")

    return IteratedFunctionSystem(tuple(built), ws, (lo, hi))


@dataclass(frozen=True)
class Word:
    """A finite word with its contraction product, translation and mass.

    ``translation`` is the image of 0 under the left-to-right composition
    of the word's maps; all three scalars are maintained incrementally.
    """

    letters: tuple[int, ...]
    ratio_product: float
    translation: float
    mass: float

    @classmethod
    def empty(cls) -> "Word":
        return cls((), 1.0, 0.0, 1.0)

    @classmethod
    def from_letters(cls, ifs: IteratedFunctionSystem, letters: Sequence[int]) -> "Word":
        w = cls.empty()
        for i in letters:
            w = w.extend(ifs, i)
        return w

    def extend(self, ifs: IteratedFunctionSystem, letter: int) -> "Word":
        m = ifs.maps[letter]
        return Word(
            self.letters + (letter,),
            self.ratio_product * m.ratio_float,
            self.translation + self.ratio_product * m.translation_float,
            self.mass * float(ifs.weights[letter]),
        )

    def exact_translation(self, ifs: IteratedFunctionSystem) -> Fraction:
        t = Fraction(0)
        r = Fraction(1)
        for i in self.letters:
            t += r * ifs.maps[i].translation
            r *= ifs.maps[i].ratio
        return t


@dataclass(frozen=True)
class CutSet:
    """All words stopped exactly when |r_w| drops to the given scale."""

    scale: float
    words: tuple[Word, ...]

    def __len__(self):
        return len(self.words)

    def masses(self) -> np.ndarray:
        return np.array([w.mass for w in self.words])

    def ratio_products(self) -> np.ndarray:
        return np.array([w.ratio_product for w in self.words])

    def distinct_ratio_count(self) -> int:
        return len({w.ratio_product for w in self.words})


def cut_set(ifs: IteratedFunctionSystem, scale: float,
            budget: int = DEFAULT_WORD_BUDGET) -> CutSet:
    """Expand the word tree depth-first, stopping once |r_w| <= scale.

    Every returned word satisfies |r_w| <= scale < |r_parent|.  Raises
    :class:`ExplosionGuard` when more than ``budget`` words would be needed.
    """
    if not 0 < scale < 1:
        raise ValueError(f"scale must lie in (0,1), got {scale}")
    out = []
    stack = [Word.empty()]
    n = ifs.alphabet_size
    while stack:
        w = stack.pop()
        if abs(w.ratio_product) <= scale:
            out.append(w)
            if len(out) > budget:
                raise ExplosionGuard(
                    f"cut-set at scale {scale} exceeds budget {budget}"
                )
        else:
            for i in range(n - 1, -1, -1):
                stack.append(w.extend(ifs, i))
    out.sort(key=lambda w: w.letters)
    return CutSet(scale, tuple(out))


def cut_set_arrays(ifs: IteratedFunctionSystem, scale: float,
                   budget: int = DEFAULT_WORD_BUDGET):
    """Vectorised cut-set: returns (ratio, translation, mass) leaf arrays.

    Same stopping rule as :func:`cut_set` without materialising letters.
    """
    if not 0 < scale < 1:
        raise ValueError(f"scale must lie in (0,1), got {scale}")
    rs = ifs.ratios
    ts = ifs.translations
    ps = ifs.weight_floats
    r = np.array([1.0])
    t = np.array([0.0])
    p = np.array([1.0])
    done_r, done_t, done_p = [], [], []
    total = 0
    while r.size:
        stop = np.abs(r) <= scale
        if stop.any():
            done_r.append(r[stop])
            done_t.append(t[stop])
            done_p.append(p[stop])
            total += int(stop.sum())
            if total > budget:
                raise ExplosionGuard(
                    f"cut-set at scale {scale} exceeds budget {budget}"
                )
        grow = ~stop
        r, t, p = r[grow], t[grow], p[grow]
        if total + r.size * ifs.alphabet_size > budget:
            raise ExplosionGuard(
                f"cut-set at scale {scale} exceeds budget {budget}"
            )
        if r.size:
            t = (t[:, None] + r[:, None] * ts[None, :]).ravel()
            p = (p[:, None] * ps[None, :]).ravel()
            r = (r[:, None] * rs[None, :]).ravel()
    if not done_r:
        return (np.empty(0), np.empty(0), np.empty(0))
    return (np.concatenate(done_r), np.concatenate(done_t), np.concatenate(done_p))


def cylinder_interval(word: Word, support) -> tuple[float, float]:
    """Image of the support under the word's composition, endpoints sorted."""
    lo, hi = float(support[0]), float(support[1])
    a = word.ratio_product * lo + word.translation
    b = word.ratio_product * hi + word.translation
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class SamplePoint:
    """A mu-distributed point with a guaranteed error radius.

    ``value`` is exact (the translation of a depth-``depth`` word); the true
    attractor point coded by the infinite extension lies within
    ``error_radius`` of it.
    """

    value: Fraction
    error_radius: Fraction
    depth: int
    seed: int

    def __float__(self) -> float:
        return float(self.value)


def sampling_depth(ifs: IteratedFunctionSystem, precision_bits: int) -> int:
    # worst-case ratio guarantees diam(f_w(J)) <= 2^-bits * |J|
    return max(1, math.ceil(precision_bits * math.log(2) / math.log(1 / ifs.max_ratio)))


def sample_point(ifs: IteratedFunctionSystem, rng_seed: int,
                 precision_bits: int = 53) -> SamplePoint:
    """Draw one point of the invariant measure via a random word.

    Letters are i.i.d. with the IFS weights from a counter-based Philox
    stream, so results are reproducible from the 64-bit seed alone.
    """
    if precision_bits < 1:
        raise ValueError("precision_bits must be >= 1")
    depth = sampling_depth(ifs, precision_bits)
    rng = np.random.Generator(np.random.Philox(key=rng_seed))
    letters = rng.choice(ifs.alphabet_size, size=depth, p=ifs.weight_floats)
    t = Fraction(0)
    r = Fraction(1)
    for i in letters:
        m = ifs.maps[int(i)]
        t += r * m.translation
        r *= m.ratio
    width = ifs.support[1] - ifs.support[0]
    return SamplePoint(value=t, error_radius=abs(r) * width, depth=depth,
                       seed=int(rng_seed))


def load_ifs_config(path) -> IteratedFunctionSystem:
    """Read an IFS from a line-oriented text file.

    Recognised lines (``#`` starts a comment)::

        map <ratio> <translation>
        weights <w1> <w2> ...
        support <lo> <hi>

    All values are decimal or rational strings and are kept exact.
    """
    maps, weights, support = [], None, None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, *rest = line.split()
            if key == "map":
                if len(rest) != 2:
                    raise ValueError(f"{path}:{lineno}: map needs ratio and translation")
                maps.append((rest[0], rest[1]))
            elif key == "weights":
                weights = rest
            elif key == "support":
                if len(rest) != 2:
                    raise ValueError(f"{path}:{lineno}: support needs lo and hi")
                support = (rest[0], rest[1])
            else:
                raise ValueError(f"{path}:{lineno}: unknown directive {key!r}")
    if not maps or support is None:
        raise ValueError(f"{path}: config needs map lines and a support line")
    if weights is None:
        weights = [Fraction(1, len(maps))] * len(maps)
    return validate_ifs(maps, weights, support)
