"""Fine-scale statistics of power sequences modulo one.

Covers guaranteed-precision generation of {xi * x**n mod 1}, k-level
correlation sums with compactly supported test functions, nearest-gap
statistics against the unit-rate exponential law, integrals of sparse
polynomial phases against measures supported above 1, and the end-to-end
experiment that ties them together for measure-typical base points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
import numpy as np

from ._dd import dd_add, dd_mod1, dd_mul, dd_pow_int, two_prod
from .errors import (
    BudgetExceeded,
    InsufficientInputDigits,
    NotGreaterThanOne,
    PrecisionExhausted,
)
from .ifs import sample_point
from .kernels import eval_fourier
from .measure import SelfSimilarMeasure
from .polycover import SparsePolynomial

DEFAULTS = {
    "precision_margin_bits": 128,
    "emitted_error_cap": 2.0 ** -48,
    "tuple_budget": 500_000,
    "lattice_window_pad": 1,
    "phase_chunk": 1 << 18,
    "phase_delta0_clamp": (0.55, 0.95),
    "dd_magnitude_bits_cap": 62,
}


# ---------------------------------------------------------------------------
# power sequences at guaranteed precision


@dataclass(frozen=True)
class PowerSequence:
    """Fractional parts of xi * x**n with a per-term error guarantee."""

    x_label: str
    xi_label: str
    N: int
    fractional_parts: np.ndarray
    error_bound: float
    precision_bits: int


def _to_exact(value):
    """Convert input to an exact Fraction where possible."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return None  # e.g. an mpfr carrying its own precision


def power_fractional_sequence(x, xi, N: int, known_bits: Optional[int] = None,
                              margin_bits: Optional[int] = None) -> PowerSequence:
    """Compute {xi * x**n} for n = 1..N with per-term error <= 2**-48.

    Powers are accumulated at working precision
    P = ceil(N*log2(ceil(x))) + margin, never discarding integer parts, so
    the emitted doubles are reproducible bit-for-bit from the inputs.
    ``known_bits`` declares how many bits of x are trustworthy when x is
    not exact; exact inputs (strings, fractions, ints, floats) need none.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    exact = _to_exact(x)
    x_float = float(exact) if exact is not None else float(x)
    if x_float <= 1.0:
        raise NotGreaterThanOne(f"x = {x_float} must exceed 1")
    xi_exact = _to_exact(xi)
    if xi_exact is None or xi_exact == 0:
        raise ValueError("xi must be an exact nonzero number")

    xi_bits = max(0, math.ceil(math.log2(abs(float(xi_exact)) + 1)))
    if margin_bits is None:
        margin_bits = DEFAULTS["precision_margin_bits"]
    prec = (
        math.ceil(N * math.log2(math.ceil(x_float)))
        + margin_bits
        + xi_bits
    )
    if exact is None and known_bits is None and hasattr(x, "precision"):
        known_bits = x.precision
    if known_bits is not None and known_bits < prec:
        raise InsufficientInputDigits(
            f"x known to {known_bits} bits, need {prec}"
        )

    with gmpy2.context(precision=prec):
        if exact is not None:
            xx = gmpy2.mpfr(gmpy2.mpq(exact.numerator, exact.denominator))
        else:
            xx = gmpy2.mpfr(x)
        xi_hp = gmpy2.mpfr(gmpy2.mpq(xi_exact.numerator, xi_exact.denominator))
        fracs = np.empty(N, dtype=np.float64)
        power = gmpy2.mpfr(1)
        for n in range(N):
            power = power * xx
            y = xi_hp * power
            fracs[n] = float(y - gmpy2.floor(y))

    log2_err = (
        math.log2(abs(float(xi_exact)))
        + N * math.log2(x_float)
        + math.log2(N)
        + 1
        - prec
    )
    err = 2.0 ** log2_err + 2.0 ** -53
    if err > DEFAULTS["emitted_error_cap"]:
        raise PrecisionExhausted(
            f"per-term error {err:.3g} exceeds 2^-48; increase precision margin"
        )
    return PowerSequence(
        x_label=str(x), xi_label=str(xi), N=N,
        fractional_parts=fracs, error_bound=err, precision_bits=prec,
    )


# ---------------------------------------------------------------------------
# correlation sums


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported test function on R^(k-1), given in product form."""

    k: int
    factor: callable                # one-dimensional factor, vectorised
    support_radius: float
    integral: float                 # exact integral over R^(k-1)
    description: str

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        vals = self.factor(y)
        if y.ndim >= 1 and self.k > 2:
            vals = vals.prod(axis=-1)
        elif self.k == 2 and y.ndim >= 1:
            pass
        return vals


def bump_test_function(k: int) -> TestFunction:
    """Smooth default bump (1 - t^2)^3 on [-1, 1], in product form."""

    def factor(y):
        y = np.asarray(y, dtype=np.float64)
        inside = np.abs(y) < 1.0
        out = np.zeros_like(y)
        t = y[inside]
        out[inside] = (1.0 - t * t) ** 3
        return out

    return TestFunction(k=k, factor=factor, support_radius=1.0,
                        integral=(32.0 / 35.0) ** (k - 1),
                        description="bump(1-t^2)^3")


def box_test_function(k: int, radius: float = 1.0) -> TestFunction:
    """Indicator of the centred box [-radius, radius]^(k-1)."""

    def factor(y):
        y = np.asarray(y, dtype=np.float64)
        return (np.abs(y) <= radius).astype(np.float64)

    return TestFunction(k=k, factor=factor, support_radius=radius,
                        integral=(2.0 * radius) ** (k - 1),
                        description=f"box[{radius}]")


def correlation_volume_factor(k: int, N: int) -> float:
    """Exact distinct-tuple density: product of (1 - j/N), j < k."""
    c = Fraction(1)
    for j in range(1, k):
        c *= Fraction(N - j, N)
    return float(max(c, Fraction(0)))


@dataclass(frozen=True)
class CorrelationReport:
    """One correlation sum with its Poisson reference."""

    k: int
    n_points: int
    test_function: str
    R_k: float
    C_k: float
    f_integral: float
    deviation: float
    mode: str                      # "exact" or "subsampled"
    tuples_used: int
    seed: Optional[int] = None


def _pair_correlation_exact(points, f, window):
    n = len(points)
    total = 0.0
    chunk = max(1, int(4e6 // max(n, 1)))
    shifts = range(-DEFAULTS["lattice_window_pad"] - window,
                   DEFAULTS["lattice_window_pad"] + window + 1)
    for i0 in range(0, n, chunk):
        block = points[i0:i0 + chunk]
        d = block[:, None] - points[None, :]
        rows = np.arange(i0, min(i0 + chunk, n))
        for l in shifts:
            y = n * (d + l)
            mask = np.abs(y) <= f.support_radius
            mask[rows - i0, rows] = False   # distinct indices only
            if mask.any():
                total += float(f.factor(y[mask]).sum())
    return total


def _distinct_tuples(rng, n, k, count):
    rows = []
    need = count
    while need > 0:
        draw = rng.integers(0, n, size=(int(need * 1.2) + 8, k))
        ok = np.ones(len(draw), dtype=bool)
        for i in range(k):
            for j in range(i + 1, k):
                ok &= draw[:, i] != draw[:, j]
        rows.append(draw[ok][:need])
        need -= len(rows[-1])
    return np.concatenate(rows)


def _tuple_f_sum(points, idx, f, n):
    """Sum over sampled tuples of the lattice-summed test values."""
    delta = points[idx[:, :-1]] - points[idx[:, 1:]]
    km1 = delta.shape[1]
    total = np.zeros(len(idx))
    # lattice shifts: consecutive differences lie in (-1, 1)
    grids = np.meshgrid(*([np.arange(-1, 2)] * km1), indexing="ij")
    for shift in zip(*(g.ravel() for g in grids)):
        y = n * (delta + np.array(shift))
        if np.abs(y).min() > f.support_radius:
            continue
        vals = f.factor(y)
        total += vals.prod(axis=-1) if km1 > 1 else vals[:, 0]
    return float(total.sum())


def k_level_correlation(points, k: int, test_function: Optional[TestFunction] = None,
                        tuple_budget: int = DEFAULTS["tuple_budget"],
                        seed: int = 0, require_exact: bool = False) -> CorrelationReport:
    """Correlation sum of order k for points in [0, 1).

    Pairs (k = 2) are enumerated exactly.  Higher orders enumerate exactly
    when the distinct-tuple count fits the budget and otherwise estimate
    the sum from uniformly subsampled distinct tuples, which keeps the
    estimator unbiased; the mode used is reported.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    f = test_function if test_function is not None else bump_test_function(k)
    c_k = correlation_volume_factor(k, n) if n >= 1 else 0.0
    if n < k:
        return CorrelationReport(k=k, n_points=n, test_function=f.description,
                                 R_k=0.0, C_k=c_k, f_integral=f.integral,
                                 deviation=0.0, mode="exact", tuples_used=0,
                                 seed=seed)

    window = int(math.ceil(f.support_radius / n))
    if k == 2:
        total = _pair_correlation_exact(points, f, window)
        r_k = total / n
        mode, used = "exact", n * (n - 1)
    else:
        u_count = 1
        for j in range(k):
            u_count *= (n - j)
        if u_count <= tuple_budget:
            idx = _all_distinct_tuples(n, k)
            total = _tuple_f_sum(points, idx, f, n)
            r_k = total / n
            mode, used = "exact", u_count
        elif require_exact:
            raise BudgetExceeded(
                f"{u_count} distinct {k}-tuples exceed budget {tuple_budget}"
            )
        else:
            rng = np.random.Generator(np.random.Philox(key=seed))
            idx = _distinct_tuples(rng, n, k, tuple_budget)
            total = _tuple_f_sum(points, idx, f, n)
            r_k = (u_count / len(idx)) * total / n
            mode, used = "subsampled", len(idx)
    return CorrelationReport(
        k=k, n_points=n, test_function=f.description, R_k=float(r_k),
        C_k=c_k, f_integral=f.integral,
        deviation=float(abs(r_k - c_k * f.integral)),
        mode=mode, tuples_used=used, seed=seed,
    )


def _all_distinct_tuples(n, k):
    grids = np.meshgrid(*([np.arange(n)] * k), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    ok = np.ones(len(idx), dtype=bool)
    for i in range(k):
        for j in range(i + 1, k):
            ok &= idx[:, i] != idx[:, j]
    return idx[ok]


# ---------------------------------------------------------------------------
# gap statistics


@dataclass(frozen=True)
class GapReport:
    """Scaled nearest-neighbour gaps against the unit-rate exponential law."""

    n_points: int
    ordered_points: np.ndarray
    scaled_gaps: np.ndarray        # sorted ascending
    ks_distance: float
    s_grid: np.ndarray
    empirical_cdf: np.ndarray
    exponential_cdf: np.ndarray

    @property
    def mean_scaled_gap(self) -> float:
        return float(self.scaled_gaps.mean())


def gap_distribution(points) -> GapReport:
    """Sort points, include the wrap-around gap, scale by N, compare to
    1 - exp(-s) in Kolmogorov-Smirnov distance."""
    pts = np.sort(np.asarray(points, dtype=np.float64))
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points")
    gaps = np.empty(n)
    gaps[0] = pts[0] - (pts[-1] - 1.0)
    gaps[1:] = np.diff(pts)
    scaled = np.sort(n * gaps)
    ref = 1.0 - np.exp(-scaled)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    ks = float(np.max(np.maximum(np.abs(upper - ref), np.abs(lower - ref))))
    s_hi = max(4.0, float(scaled[-1]))
    s_grid = np.linspace(0.0, s_hi, 513)
    emp = np.searchsorted(scaled, s_grid, side="right") / n
    return GapReport(
        n_points=n, ordered_points=pts, scaled_gaps=scaled,
        ks_distance=ks, s_grid=s_grid, empirical_cdf=emp,
        exponential_cdf=1.0 - np.exp(-s_grid),
    )


# ---------------------------------------------------------------------------
# sparse-phase integrals over measures above 1


@dataclass(frozen=True)
class CorrelationPhase:
    """Integer phase of the correlation type: paired power differences.

    g(x) = sum_j l_j (x^u_j - x^u_{j+1}) + sum_j m_j (x^v_j - x^v_{j+1})
    with strictly decreasing exponent vectors and coefficients bounded by
    N^(1+eps) in modulus.
    """

    l: tuple
    m: tuple
    u: tuple
    v: tuple
    N: int
    eps: float

    def __post_init__(self):
        k = len(self.u)
        if len(self.v) != k or len(self.l) != k - 1 or len(self.m) != k - 1:
            raise ValueError("need |u| = |v| = k and |l| = |m| = k-1")
        for vec in (self.u, self.v):
            if any(b >= a for a, b in zip(vec, vec[1:])):
                raise ValueError("exponent vectors must strictly decrease")
            if vec[0] > self.N or vec[-1] < 1:
                raise ValueError("exponents must lie in [1, N]")
        cap = self.N ** (1 + self.eps)
        for vec in (self.l, self.m):
            if any(c == 0 or abs(c) > cap for c in vec):
                raise ValueError(f"coefficients must be nonzero with |c| <= {cap:.3g}")

    @property
    def k(self) -> int:
        return len(self.u)

    @property
    def has_dominant_leading_term(self) -> bool:
        if self.u[0] > self.v[0]:
            return True
        return self.u[0] == self.v[0] and self.l[0] + self.m[0] != 0

    def to_sparse_polynomial(self) -> SparsePolynomial:
        acc: dict[int, int] = {}

        def add(c, e):
            acc[e] = acc.get(e, 0) + c

        for j in range(self.k - 1):
            add(int(self.l[j]), int(self.u[j]))
            add(-int(self.l[j]), int(self.u[j + 1]))
            add(int(self.m[j]), int(self.v[j]))
            add(-int(self.m[j]), int(self.v[j + 1]))
        terms = tuple((c, e) for e, c in acc.items() if c != 0)
        return SparsePolynomial(terms)

    def meets_degree_condition(self) -> bool:
        g = self.to_sparse_polynomial()
        if not g.terms:
            return False
        return g.degree >= self.N ** (1.0 / (2 * self.k))


def _dd_poly(terms, xh, xl):
    th = np.zeros_like(xh)
    tl = np.zeros_like(xh)
    for c, u in terms:
        ph, pl = dd_pow_int(xh, xl, u)
        ph, pl = dd_mul(ph, pl, np.full_like(xh, float(c)), np.zeros_like(xh))
        th, tl = dd_add(th, tl, ph, pl)
    return th, tl


def correlation_phase_integral(measure: SelfSimilarMeasure,
                               phase: CorrelationPhase,
                               tolerance: float = 0.01,
                               scale_multiplier: float = 1.0,
                               delta0: Optional[float] = None,
                               budget: int = 40_000_000):
    """Integral of exp(2*pi*i*g) against a measure supported above 1.

    Expands along words to the scale q = (N^2 a^u1)^(-delta0), replaces
    each cylinder by its linearisation (phase factor at the midpoint times
    a transform value at the linearised frequency), and sums.  Phases of
    size up to 2^62 are reduced modulo one in double-double arithmetic.
    Returns (value, error_bound); raises PrecisionExhausted when
    degree*log2(b) leaves no room in the 106-bit format.
    """
    a, b = measure.support
    if a <= 1:
        raise NotGreaterThanOne("measure must be supported above 1")
    g = phase.to_sparse_polynomial()
    if not g.terms:
        return 1.0 + 0.0j, 0.0
    u1 = g.degree
    mag_bits = max(math.log2(abs(c)) + u * math.log2(b) for c, u in g.terms)
    mag_bits += math.log2(len(g.terms))
    if mag_bits > DEFAULTS["dd_magnitude_bits_cap"]:
        raise PrecisionExhausted(
            f"phase magnitude ~2^{mag_bits:.0f} exceeds the double-double budget"
        )

    lo_c, hi_c = DEFAULTS["phase_delta0_clamp"]
    if delta0 is None:
        half = math.log(b) / math.log(a) / 2
        delta0 = min(max((half + 1) / 2, lo_c), hi_c)
    q = (phase.N ** 2 * a ** u1) ** -delta0 * scale_multiplier
    q = min(q, 0.5)

    dg = g.derivative()
    sup_d1 = sum(abs(c) * b ** u for c, u in dg.terms)
    sup_d2 = sum(abs(c) * b ** u for c, u in dg.derivative().terms)
    lam_max = max(sup_d1 * q, 1.0)
    half_w = (b - a) / 2
    center = measure.ifs.support_center
    inner_tol = tolerance / 2
    dag = measure.dag_for(lam_max, inner_tol)

    ifs = measure.ifs
    rs, ts, ps = ifs.ratios, ifs.translations, ifs.weight_floats
    nlet = len(rs)
    total = 0.0 + 0.0j
    leaves = 0
    chunk = DEFAULTS["phase_chunk"]

    def flush(r, th, tl, p):
        nonlocal total, leaves
        if len(r) == 0:
            return
        leaves += len(r)
        if leaves > budget:
            raise BudgetExceeded(f"phase integral exceeded {budget} leaf words")
        # cylinder midpoint in double-double
        mh, ml = dd_add(th, tl, *two_prod(r, center))
        gh, gl = _dd_poly(g.terms, mh, ml)
        dh, dl = _dd_poly(dg.terms, mh, ml)
        y = (dh + dl) * r
        # subtract g'(mid)*r*center so the remaining transform argument is y
        sh, sl = dd_mul(dh, dl, *two_prod(r, center))
        ph, pl = dd_add(gh, gl, -sh, -sl)
        frac = dd_mod1(ph, pl)
        inner = eval_fourier(dag, y)
        total += np.sum(p * np.exp(2j * np.pi * frac) * inner)

    stack = [(np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))]
    while stack:
        r, th, tl, p = stack.pop()
        while True:
            stop = np.abs(r) <= q
            if stop.any():
                flush(r[stop], th[stop], tl[stop], p[stop])
            grow = ~stop
            if not grow.any():
                break
            r, th, tl, p = r[grow], th[grow], tl[grow], p[grow]
            if len(r) * nlet > chunk and len(r) > 1:
                half = len(r) // 2
                stack.append((r[half:], th[half:], tl[half:], p[half:]))
                r, th, tl, p = r[:half], th[:half], tl[:half], p[:half]
            # expand one level: t_child = t + r * t_i in double-double
            new_r = (r[:, None] * rs[None, :]).ravel()
            new_p = (p[:, None] * ps[None, :]).ravel()
            rep_th = np.repeat(th, nlet)
            rep_tl = np.repeat(tl, nlet)
            add_h, add_l = two_prod(np.repeat(r, nlet), np.tile(ts, len(r)))
            th, tl = dd_add(rep_th, rep_tl, add_h, add_l)
            r, p = new_r, new_p

    quad_err = math.pi * sup_d2 * (q * half_w) ** 2
    return complex(total), float(quad_err + inner_tol)


# ---------------------------------------------------------------------------
# end-to-end experiment for measure-typical base points


@dataclass(frozen=True)
class PoissonExperiment:
    """Correlation and gap statistics across measure-typical base points."""

    xi: float
    N: int
    k_list: tuple
    seeds: tuple
    x_values: tuple                      # float images of the sampled points
    correlations: dict                   # k -> list of CorrelationReport
    gap_ks: np.ndarray                   # per-seed KS distances
    sequence_error_bound: float

    def r_values(self, k) -> np.ndarray:
        return np.array([rep.R_k for rep in self.correlations[k]])

    def deviations(self, k) -> np.ndarray:
        return np.array([rep.deviation for rep in self.correlations[k]])

    def mean_deviation(self, k) -> float:
        return float(self.deviations(k).mean())

    def cross_seed_std(self, k) -> float:
        return float(self.r_values(k).std(ddof=1))

    @property
    def mean_gap_ks(self) -> float:
        return float(self.gap_ks.mean())


def poisson_experiment(measure: SelfSimilarMeasure, xi, N: int,
                       k_list: Sequence[int], seeds: Sequence[int],
                       test_function=None,
                       tuple_budget: int = DEFAULTS["tuple_budget"]) -> PoissonExperiment:
    """Sample base points from the measure and collect fine-scale statistics.

    Each seed draws one point x > 1 at precision sufficient for the whole
    power sequence, generates {xi * x**n} for n <= N, and records every
    requested correlation order plus the gap statistics.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    if N < 2:
        raise ValueError("need N >= 2 for gap statistics")
    lo, hi = measure.support
    if lo <= 1:
        raise NotGreaterThanOne("measure must be supported in (1, inf)")
    xi_bits = max(0, math.ceil(math.log2(abs(float(xi)) + 1)))
    prec = (
        math.ceil(N * math.log2(math.ceil(hi)))
        + DEFAULTS["precision_margin_bits"]
        + xi_bits
    )
    precision_bits = prec + 64

    correlations = {int(k): [] for k in k_list}
    gap_ks = []
    x_values = []
    err_bound = 0.0
    for seed in seeds:
        sp = sample_point(measure.ifs, int(seed), precision_bits)
        seq = power_fractional_sequence(sp.value, xi, N)
        err_bound = max(err_bound, seq.error_bound)
        x_values.append(float(sp.value))
        pts = seq.fractional_parts
        for k in k_list:
            correlations[int(k)].append(
                k_level_correlation(pts, int(k), test_function,
                                    tuple_budget=tuple_budget, seed=int(seed))
            )
        gap_ks.append(gap_distribution(pts).ks_distance)

    return PoissonExperiment(
        xi=float(xi), N=N, k_list=tuple(int(k) for k in k_list),
        seeds=tuple(int(s) for s in seeds), x_values=tuple(x_values),
        correlations=correlations, gap_ks=np.array(gap_ks),
        sequence_error_bound=err_bound,
    )
