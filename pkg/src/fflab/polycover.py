"""Covering algorithms for sparse integer polynomials and non-flatness checks.

A polynomial with at most k terms has at most 2k real roots and so at most
2k+1 monotone pieces; the sublevel set where it is small is therefore a
union of at most 2k+2 short intervals.  ``covering_intervals`` isolates
that sublevel set against the family threshold a**(u1 - N**eps);
``small_value_intervals`` does the same for the much smaller threshold
a**-(m*q)**2 in big-float arithmetic, with interval widths at most
a**(-m*q).  ``nonflat_certificate`` checks the derivative-floor condition
that makes a smooth phase non-flat at finite scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import gmpy2
import numpy as np

from .errors import (
    DegenerateRange,
    FractalLabError,
    NotInFamily,
    OracleMissing,
    PrecisionExhausted,
    QTooSmall,
)

DEFAULTS = {
    "verify_grid_points": 65537,
    "bisection_steps": 200,
    "newton_steps": 64,
    "nonflat_grid": 4097,
    "nonflat_osc_fraction": 4,    # derivative oscillation budget c0/4 per window
    "precision_bit_cap": 4_000_000,
}

_EPS = 2.0 ** -53


@dataclass(frozen=True)
class SparsePolynomial:
    """Integer polynomial stored as (coefficient, exponent) terms.

    Exponents are strictly decreasing and coefficients nonzero.  When the
    family parameters ``k`` and ``N`` are given, membership bounds
    (term count <= k, exponents <= N, |coefficients| <= N**4) are enforced
    at construction.
    """

    terms: tuple[tuple[int, int], ...]
    k: Optional[int] = None
    N: Optional[int] = None

    def __post_init__(self):
        ts = tuple(sorted(((int(c), int(u)) for c, u in self.terms),
                          key=lambda t: -t[1]))
        object.__setattr__(self, "terms", ts)
        exps = [u for _, u in ts]
        if len(set(exps)) != len(exps):
            raise ValueError("duplicate exponents")
        if any(u < 0 for u in exps):
            raise ValueError("negative exponent")
        if any(c == 0 for c, _ in ts):
            raise ValueError("zero coefficient")
        if self.k is not None or self.N is not None:
            if self.k is None or self.N is None:
                raise NotInFamily("family membership needs both k and N")
            if not ts:
                raise NotInFamily("zero polynomial is not a family member")
            if len(ts) > self.k:
                raise NotInFamily(f"{len(ts)} terms exceeds k={self.k}")
            if ts[0][1] > self.N:
                raise NotInFamily(f"degree {ts[0][1]} exceeds N={self.N}")
            if any(abs(c) > self.N ** 4 for c, _ in ts):
                raise NotInFamily(f"coefficient beyond N^4={self.N ** 4}")

    @classmethod
    def from_string(cls, spec: str, k=None, N=None) -> "SparsePolynomial":
        """Parse 'coeff:exp,coeff:exp,...'."""
        terms = []
        for chunk in spec.split(","):
            c, u = chunk.strip().split(":")
            terms.append((int(c), int(u)))
        return cls(tuple(terms), k=k, N=N)

    @property
    def degree(self) -> int:
        return self.terms[0][1] if self.terms else 0

    @property
    def leading_coefficient(self) -> int:
        return self.terms[0][0] if self.terms else 0

    def derivative(self) -> "SparsePolynomial":
        return SparsePolynomial(
            tuple((c * u, u - 1) for c, u in self.terms if u > 0)
        )

    def evaluate(self, x: float) -> tuple[float, float]:
        """(value, guaranteed absolute error) at a float point."""
        val = 0.0
        err = 0.0
        for c, u in self.terms:
            term = float(c) * x ** u
            val += term
            err += abs(term) * (2 * max(u, 1).bit_length() + 4) * _EPS
        return val, err

    def evaluate_array(self, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        val = np.zeros_like(xs)
        err = np.zeros_like(xs)
        for c, u in self.terms:
            term = float(c) * xs ** u
            val += term
            err += np.abs(term) * (2 * max(u, 1).bit_length() + 4) * _EPS
        return val, err

    def evaluate_mpfr(self, x):
        """Exact-coefficient evaluation of a gmpy2 float."""
        total = gmpy2.mpfr(0)
        for c, u in self.terms:
            total += c * x ** u
        return total

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.evaluate_array(x)[0]
        return self.evaluate(float(x))[0]

    def __str__(self):
        return ",".join(f"{c}:{u}" for c, u in self.terms)


def _signed(value, err):
    if abs(value) <= err:
        return 0
    return 1 if value > 0 else -1


def _bisect_root(poly, a, b, sa):
    """Refine a sign change of a monotone piece down to float resolution."""
    for _ in range(DEFAULTS["bisection_steps"]):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        v, e = poly.evaluate(mid)
        s = _signed(v, e)
        if s == 0:
            return mid
        if s == sa:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def real_roots(poly: SparsePolynomial, lo: float, hi: float) -> list[float]:
    """All real roots in [lo, hi] by recursive monotone-piece bisection.

    Critical points come from the same routine applied to the derivative;
    the recursion bottoms out at monomials, which have no roots away from
    the origin.  Robust for high-degree sparse polynomials because no
    dense coefficient array is ever formed.
    """
    ts = poly.terms
    if len(ts) == 0:
        return []
    if len(ts) == 1:
        _, u = ts[0]
        return [0.0] if (u >= 1 and lo <= 0.0 <= hi) else []
    crits = real_roots(poly.derivative(), lo, hi)
    pts = sorted({lo, hi, *crits})
    found = []
    for a, b in zip(pts, pts[1:]):
        va, ea = poly.evaluate(a)
        vb, eb = poly.evaluate(b)
        sa, sb = _signed(va, ea), _signed(vb, eb)
        if sa == 0:
            found.append(a)
        if sb == 0 and b == hi:
            found.append(b)
        if sa != 0 and sb != 0 and sa != sb:
            found.append(_bisect_root(poly, a, b, sa))
    # collapse duplicates from shared piece endpoints
    found.sort()
    out = []
    tol = 1e-12 * max(1.0, abs(hi), abs(lo))
    for r in found:
        if not out or r - out[-1] > tol:
            out.append(r)
    return out


@dataclass(frozen=True)
class Covering:
    """Sub-intervals outside of which the polynomial is provably large."""

    intervals: tuple[tuple[Fraction, Fraction], ...]
    threshold_log: float          # natural log of the guarantee level
    sigma_scale: float            # largest interval diameter achieved
    domain: tuple[float, float]
    sigma_exponent: Optional[float] = None

    @property
    def count(self) -> int:
        return len(self.intervals)

    @property
    def threshold(self) -> float:
        try:
            return math.exp(self.threshold_log)
        except OverflowError:
            return math.inf

    def float_intervals(self) -> list[tuple[float, float]]:
        return [(float(l), float(h)) for l, h in self.intervals]

    def outside_mask(self, xs, margin: float = 0.0) -> np.ndarray:
        """True where a point is not within margin of any interval."""
        xs = np.asarray(xs, dtype=np.float64)
        mask = np.ones(xs.shape, dtype=bool)
        for l, h in self.float_intervals():
            mask &= (xs < l - margin) | (xs > h + margin)
        return mask


def _solve_band_edge(poly, x_out, x_in, target):
    """Crossing of poly == target between an outside and an inside point.

    Returns a point certified to lie weakly outside the band (the bracket
    endpoint on the outside), so bands are always rounded outward.
    """
    vo, eo = poly.evaluate(x_out)
    so = _signed(vo - target, eo)
    a, b = x_out, x_in
    for _ in range(DEFAULTS["bisection_steps"]):
        mid = 0.5 * (a + b)
        if mid <= min(a, b) or mid >= max(a, b):
            break
        v, e = poly.evaluate(mid)
        s = _signed(v - target, e)
        if s == so and s != 0:
            a = mid
        else:
            b = mid
    return a


def _merge_intervals(raw, gap=0):
    # gap must share the arithmetic type of the endpoints (int is neutral)
    if not raw:
        return []
    raw = sorted(raw)
    merged = [list(raw[0])]
    for lo, hi in raw[1:]:
        if lo <= merged[-1][1] + gap:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(iv) for iv in merged]


def covering_intervals(poly: SparsePolynomial, a: float, b: float,
                       epsilon: float,
                       verify_points: int = DEFAULTS["verify_grid_points"]) -> Covering:
    """Cover the sublevel set {|h| < a**(u1 - N**eps)} on [a, b].

    The polynomial must carry family parameters (k, N).  At most 2k+2
    intervals are returned; off the covering the polynomial provably
    exceeds the threshold, which an internal sample grid double-checks.
    """
    if a <= 1 or b <= a:
        raise DegenerateRange(f"need 1 < a < b, got a={a}, b={b}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0,1)")
    if poly.k is None or poly.N is None:
        raise NotInFamily("polynomial must declare family parameters k, N")
    a, b = float(a), float(b)
    u1 = poly.degree
    exponent = (u1 - poly.N ** epsilon) * math.log(a)
    if u1 * math.log(b) > 700:
        raise PrecisionExhausted("degree * log(b) exceeds float range")
    theta = math.exp(exponent)

    crits = real_roots(poly.derivative(), a, b)
    pts = sorted({a, b, *crits})
    bands = []
    for x0, x1 in zip(pts, pts[1:]):
        v0, e0 = poly.evaluate(x0)
        v1, e1 = poly.evaluate(x1)
        lo_val, hi_val = min(v0, v1), max(v0, v1)
        if hi_val <= -theta or lo_val >= theta:
            continue
        in0 = abs(v0) < theta
        in1 = abs(v1) < theta
        if in0:
            xl = x0
        else:
            xl = _solve_band_edge(poly, x0, x1, theta if v0 > 0 else -theta)
        if in1:
            xr = x1
        else:
            xr = _solve_band_edge(poly, x1, x0, theta if v1 > 0 else -theta)
        if xl <= xr:
            bands.append((xl, xr))
    span = b - a
    merged = _merge_intervals(bands, gap=1e-12 * span)
    limit = 2 * poly.k + 2
    if len(merged) > limit:
        raise FractalLabError(
            f"covering produced {len(merged)} intervals, bound is {limit}"
        )

    diam = max((h - l for l, h in merged), default=0.0)
    sig = None
    if 0 < diam < 1 / a:
        sig = math.log(-math.log(diam) / math.log(a)) / math.log(poly.N)
    cov = Covering(
        intervals=tuple((Fraction(l), Fraction(h)) for l, h in merged),
        threshold_log=exponent,
        sigma_scale=diam,
        domain=(a, b),
        sigma_exponent=sig,
    )

    # certification sweep: off the (slightly fattened) covering the
    # evaluated values must clear the threshold beyond their own error
    xs = np.linspace(a, b, verify_points)
    step = span / (verify_points - 1)
    vals, errs = poly.evaluate_array(xs)
    outside = cov.outside_mask(xs, margin=step)
    bad = outside & (np.abs(vals) + errs < theta)
    if bad.any():
        raise FractalLabError(
            f"covering verification failed at x={xs[bad][0]!r}"
        )
    return cov


def _mpfr_signed(poly, x, theta):
    v = poly.evaluate_mpfr(x)
    return v, abs(v) < theta


def small_value_intervals(P: SparsePolynomial, a: float, b: float,
                          q: float) -> Covering:
    """Cover {|P| < a**-(m*q)**2} by <= 2k+2 intervals of width <= a**(-m*q).

    Valid for q > 2*(1 + log_a 2 + log_a 3); thresholds this small force
    big-float arithmetic, so endpoints are returned as exact rationals.
    """
    if a <= 1 or b <= a:
        raise DegenerateRange(f"need 1 < a < b, got a={a}, b={b}")
    if not P.terms:
        raise ValueError("zero polynomial")
    if abs(P.leading_coefficient) < 1:
        raise ValueError("leading coefficient must be at least 1 in modulus")
    la = math.log(a)
    q_min = 2 * (1 + math.log(2) / la + math.log(3) / la)
    if q <= q_min:
        raise QTooSmall(f"need q > {q_min:.6g}, got {q}")
    kk = P.k if P.k is not None else len(P.terms)
    m = P.degree
    if m == 0:
        return Covering(intervals=(), threshold_log=0.0, sigma_scale=0.0,
                        domain=(float(a), float(b)))

    theta_log = -((m * q) ** 2) * la
    width_log = -(m * q) * la
    mag_bits = max(math.log2(abs(c)) + u * math.log2(b) for c, u in P.terms)
    bits = int((m * q) ** 2 * la / math.log(2)) + int(mag_bits) + 96
    if bits > DEFAULTS["precision_bit_cap"]:
        raise PrecisionExhausted(f"would need {bits} bits of precision")

    with gmpy2.context(precision=bits):
        theta = gmpy2.exp(gmpy2.mpfr(theta_log))
        w = gmpy2.exp(gmpy2.mpfr(width_log))
        a_hp, b_hp = gmpy2.mpfr(a), gmpy2.mpfr(b)

        inside_pts = []
        # roots with a sign change, polished by Newton to far below theta
        dP = P.derivative()
        for r in real_roots(P, a, b):
            x = gmpy2.mpfr(r)
            for _ in range(DEFAULTS["newton_steps"]):
                fx = P.evaluate_mpfr(x)
                if abs(fx) < theta:
                    break
                dfx = dP.evaluate_mpfr(x)
                if dfx == 0:
                    break
                x = x - fx / dfx
            if abs(P.evaluate_mpfr(x)) < theta and a_hp <= x <= b_hp:
                inside_pts.append(x)
        # interior minima of |P| that dip below theta, and clipped endpoints
        for cpt in real_roots(dP, a, b):
            x = gmpy2.mpfr(cpt)
            if abs(P.evaluate_mpfr(x)) < theta:
                inside_pts.append(x)
        for ept in (a_hp, b_hp):
            if abs(P.evaluate_mpfr(ept)) < theta:
                inside_pts.append(ept)

        raw = []
        # stay a hair inside the width bound so endpoint rounding can
        # never push a returned diameter past a**(-m*q)
        w_half = (w / 2) * (1 - gmpy2.mpfr(2) ** -24)
        for x in inside_pts:
            lo = x - w_half
            hi = x + w_half
            grow = 0
            while lo > a_hp and abs(P.evaluate_mpfr(lo)) < theta and grow < 8:
                lo -= w / 4
                grow += 1
            while hi < b_hp and abs(P.evaluate_mpfr(hi)) < theta and grow < 16:
                hi += w / 4
                grow += 1
            if grow >= 16:
                raise FractalLabError("small-value component wider than a**(-m*q)")
            lo = max(lo, a_hp)
            hi = min(hi, b_hp)
            raw.append((_mpfr_to_fraction(lo), _mpfr_to_fraction(hi)))

        merged = _merge_intervals(raw)
        limit = 2 * kk + 2
        if len(merged) > limit:
            raise FractalLabError(
                f"small-value covering has {len(merged)} intervals, bound {limit}"
            )
        width_cap = Fraction(_mpfr_to_fraction(w))
        diam = max(((h - l) for l, h in merged), default=Fraction(0))
        if diam > width_cap:
            raise FractalLabError("small-value interval exceeds width bound")

    return Covering(
        intervals=tuple(merged),
        threshold_log=theta_log,
        sigma_scale=float(diam),
        domain=(float(a), float(b)),
    )


def _mpfr_to_fraction(x) -> Fraction:
    num, den = x.as_integer_ratio()
    return Fraction(int(num), int(den))


@dataclass(frozen=True)
class NonFlatCertificate:
    """Finite-scale witness that some derivative stays away from zero."""

    delta: float          # the non-flatness parameter 1/(2*k_max)
    rho: float            # window below which all derivatives move < c0/4
    c0: float
    certified_floor: float
    grid_step: float

    @property
    def certified(self) -> bool:
        return True


@dataclass(frozen=True)
class NonFlatWitness:
    """Point where every derivative up to k_max is below the floor c0."""

    witness: float
    derivative_values: tuple
    c0: float

    @property
    def certified(self) -> bool:
        return False


def nonflat_certificate(phase, interval, k_max: int, c0: float,
                        grid: int = DEFAULTS["nonflat_grid"],
                        max_refines: int = 3):
    """Certify max over 1 <= j <= k_max of |h^(j)| >= c0 across an interval.

    Partitions the interval at the window scale rho below which every
    derivative order 0..k_max oscillates by at most c0/4 (estimated from a
    dense grid), then requires the derivative floor at each grid point.
    Success yields delta = 1/(2*k_max) with the window rho; failure
    returns the offending point.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    oracles = [phase.derivative(j) for j in range(0, k_max + 1)]
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("interval needs lo < hi")

    budget = c0 / DEFAULTS["nonflat_osc_fraction"]
    pts = grid
    for attempt in range(max_refines + 1):
        xs = np.linspace(lo, hi, pts)
        step = (hi - lo) / (pts - 1)
        table = np.vstack([np.asarray(f(xs), dtype=np.float64) for f in oracles])

        floor = np.abs(table[1:]).max(axis=0)
        fail = floor < c0
        if fail.any():
            i = int(np.argmin(floor))
            return NonFlatWitness(
                witness=float(xs[i]),
                derivative_values=tuple(float(v) for v in table[1:, i]),
                c0=c0,
            )

        rho = _largest_quiet_window(table, step, budget)
        if rho is not None and step <= rho:
            return NonFlatCertificate(
                delta=1.0 / (2 * k_max),
                rho=rho,
                c0=c0,
                certified_floor=(1 - 1 / DEFAULTS["nonflat_osc_fraction"]) * c0,
                grid_step=step,
            )
        pts = 2 * pts - 1
    raise FractalLabError(
        "could not find a window with small derivative oscillation; "
        "the phase may be too steep for the grid budget"
    )


def _largest_quiet_window(table, step, budget):
    """Largest window width whose per-window oscillation stays in budget."""
    n = table.shape[1]
    best = None
    length = n
    while length >= 2:
        windows = np.lib.stride_tricks.sliding_window_view(table, length, axis=1)
        osc = (windows.max(axis=-1) - windows.min(axis=-1)).max()
        if osc <= budget:
            best = (length - 1) * step
            break
        length //= 2
    return best
