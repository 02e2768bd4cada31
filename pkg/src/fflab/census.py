"""Large-deviation census of unit frequency intervals with big transform values.

For a threshold exp(-c*t), each integer interval [n, n+1] meeting
[-e^t, e^t] is sampled on a dyadic grid fine enough, relative to the
transform's Lipschitz constant, to certify intervals whose grid maximum
stays clearly below the threshold.  The census counts the flagged
intervals; the scaling curve fits the count's growth rate in t.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetExceeded
from .kernels import eval_fourier, resolve_workers
from .measure import SelfSimilarMeasure

DEFAULTS = {
    "frequency_budget": 1.0e7,
    "interval_block": 4096,
    "grid_threshold_fraction": 4,   # step from min(tolerance, threshold/4)
    "coarse_samples": 64,           # pre-pass grid for certified skips
}


@dataclass(frozen=True)
class CensusReport:
    """Outcome of one bad-interval census."""

    t: float
    c: float
    tolerance: float
    threshold: float
    n_min: int
    n_max: int
    grid_step: float
    bad_interval_indices: np.ndarray
    grid_maxima: np.ndarray          # per interval, aligned with n_min..n_max

    @property
    def count(self) -> int:
        return len(self.bad_interval_indices)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def is_bad(self) -> np.ndarray:
        return self.grid_maxima >= self.threshold - self.tolerance


def _interval_grid(n_lo, n_hi, m, lam_cap):
    """Sample points covering intervals n_lo..n_hi, clipped to |lam|<=cap."""
    pts = n_lo + np.arange((n_hi - n_lo + 1) * m + 1) / m
    pts = np.clip(pts, -lam_cap, lam_cap)
    return pts


def bad_interval_census(measure: SelfSimilarMeasure, t: float, c: float,
                        tolerance: float,
                        frequency_budget: float = DEFAULTS["frequency_budget"],
                        eval_tolerance: Optional[float] = None,
                        workers=None) -> CensusReport:
    """Flag integer frequency intervals carrying large transform values.

    An interval is flagged when some grid sample has modulus at least
    exp(-c*t) - tolerance.  The dyadic grid step divides
    min(tolerance, threshold/4) by the Lipschitz bound, so an unflagged
    interval is certified: its true supremum stays below the threshold.
    """
    if t <= 0 or c <= 0:
        raise ValueError("need t > 0 and c > 0")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    e_t = math.exp(t)
    if e_t > frequency_budget:
        raise BudgetExceeded(f"e^t = {e_t:.3g} exceeds budget {frequency_budget:.3g}")
    threshold = math.exp(-c * t)
    lip = measure.lipschitz_bound
    raw_step = min(tolerance, threshold / DEFAULTS["grid_threshold_fraction"]) / lip
    m = 1 << max(0, math.ceil(math.log2(1 / raw_step)))
    n_min = -math.floor(e_t) - 1
    n_max = math.floor(e_t)
    if eval_tolerance is None:
        eval_tolerance = tolerance / 2

    dag = measure.dag_for(e_t + 1, eval_tolerance)
    block = DEFAULTS["interval_block"]
    starts = list(range(n_min, n_max + 1, block))
    # pre-pass grid: dense enough that its Lipschitz slack is a small
    # fraction of the flag level, else certified skips never fire
    flag_level = threshold - tolerance
    if flag_level > 0:
        want = 4 * lip / flag_level
        coarse_m = 1 << max(5, math.ceil(math.log2(want)))
        coarse_m = min(m, coarse_m)
    else:
        coarse_m = m

    def interval_maxima(n_lo, n_hi, mm):
        pts = _interval_grid(n_lo, n_hi, mm, e_t)
        vals = np.abs(eval_fourier(dag, pts))
        count = n_hi - n_lo + 1
        # rolling max over windows of mm+1 samples with stride mm
        body = vals[:count * mm].reshape(count, mm)
        maxima = body.max(axis=1)
        return np.maximum(maxima, vals[mm::mm][:count])

    def run_block(n_lo):
        n_hi = min(n_lo + block - 1, n_max)
        maxima = interval_maxima(n_lo, n_hi, coarse_m)
        if coarse_m == m:
            return maxima
        # a coarse maximum this far below the flag level certifies that no
        # fine sample could reach it (Lipschitz + evaluation error slack)
        margin = lip / (2 * coarse_m) + 2 * eval_tolerance
        unsettled = np.nonzero(maxima + margin >= flag_level)[0]
        for i in unsettled:
            n = n_lo + int(i)
            maxima[i] = interval_maxima(n, n, m)[0]
        return maxima

    nw = resolve_workers(workers)
    if nw == 1 or len(starts) == 1:
        parts = [run_block(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(run_block, starts))
    grid_maxima = np.concatenate(parts)
    ns = np.arange(n_min, n_max + 1)
    bad = grid_maxima >= threshold - tolerance
    return CensusReport(
        t=float(t), c=float(c), tolerance=float(tolerance),
        threshold=threshold, n_min=n_min, n_max=n_max,
        grid_step=1.0 / m,
        bad_interval_indices=ns[bad],
        grid_maxima=grid_maxima,
    )


@dataclass(frozen=True)
class CensusCurve:
    """Census counts along increasing t with the fitted growth rate."""

    c: float
    points: tuple                  # ((t, count), ...)
    growth_rate: Optional[float]   # slope of log(count+1) vs t, None if 1 point

    def counts(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def census_scaling_curve(measure: SelfSimilarMeasure, t_list, c: float,
                         tolerance: float,
                         frequency_budget: float = DEFAULTS["frequency_budget"],
                         workers=None) -> CensusCurve:
    """Run the census along a t-ladder and fit the count growth rate."""
    t_list = list(t_list)
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be increasing")
    pts = []
    for t in t_list:
        rep = bad_interval_census(measure, t, c, tolerance,
                                  frequency_budget=frequency_budget,
                                  workers=workers)
        pts.append((float(t), rep.count))
    if len(pts) >= 2:
        ts = np.array([p[0] for p in pts])
        cs = np.array([p[1] for p in pts], dtype=float)
        rate = float(np.polyfit(ts, np.log(cs + 1.0), 1)[0])
    else:
        rate = None
    return CensusCurve(c=float(c), points=tuple(pts), growth_rate=rate)
