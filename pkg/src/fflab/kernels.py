"""Transform-evaluation kernels with compiled fast path.

The Fourier transform of a self-similar measure satisfies an exact
refinement identity: expanding it along words and merging words that share
a contraction product collapses the word tree into a small DAG whose nodes
are multisets of map indices.  Walking that DAG per frequency is the hot
loop of every sweep; it is implemented twice, in Cython
(:mod:`fflab._kernels`) and in vectorised numpy
(:mod:`fflab._kernels_py`).  The compiled version is used when it imported
successfully and ``FFLAB_PURE_PYTHON`` is not set.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from .errors import BudgetExceeded

if os.environ.get("FFLAB_PURE_PYTHON", "").strip() in ("", "0"):
    try:
        from . import _kernels as _ext
    except ImportError:
        _ext = None
else:
    _ext = None

HAVE_EXTENSION = _ext is not None

DEFAULT_NODE_BUDGET = 2_000_000
_CHUNK = 4096

DEFAULTS = {
    "node_budget": DEFAULT_NODE_BUDGET,
    "lambda_chunk": _CHUNK,
}


def backend_name() -> str:
    return "cython" if HAVE_EXTENSION else "numpy"


def resolve_workers(workers=None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("FFLAB_WORKERS", "").strip()
    if env:
        return max(1, int(env))
    return 1


@dataclass(frozen=True)
class FourierDag:
    """Merged word tree for one IFS, valid for |lambda| <= lam_max.

    Walking the node arrays in order reproduces, exactly, the weighted
    phase sum over the scale-adapted word family; nodes whose argument
    |r*lambda| is small enough contribute a single centred phase factor
    with per-leaf error at most pi*|r*lambda|*width <= tol.
    """

    node_r: np.ndarray        # contraction product per node
    children: np.ndarray      # int32 [nodes, alphabet], -1 marks a leaf
    letter_p: np.ndarray
    letter_t: np.ndarray
    center: float
    width: float
    tol: float
    lam_max: float

    @property
    def node_count(self) -> int:
        return len(self.node_r)


def build_dag(ifs, lam_max: float, tol: float,
              node_budget: int = DEFAULT_NODE_BUDGET) -> FourierDag:
    """Build the merged evaluation DAG for frequencies up to lam_max."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    lam_max = abs(float(lam_max))
    ratios = ifs.ratios
    n = len(ratios)
    width = ifs.support_width
    center = ifs.support_center

    # nodes are keyed by how many times each distinct ratio was applied
    uniq = sorted(set(float(r) for r in ratios))
    uidx = [uniq.index(float(r)) for r in ratios]
    nu = len(uniq)

    def r_of(key):
        v = 1.0
        for rv, c in zip(uniq, key):
            v *= rv ** c
        return v

    root = (0,) * nu
    index = {root: 0}
    node_r = [1.0]
    children = []
    frontier = [root]
    threshold = tol / math.pi if lam_max == 0 else tol / (math.pi * lam_max)
    while frontier:
        nxt = []
        for key in frontier:
            u = index[key]
            r = node_r[u]
            if lam_max == 0 or abs(r) * width <= threshold:
                children.append([-1] * n)
                continue
            row = []
            for i in range(n):
                ck = list(key)
                ck[uidx[i]] += 1
                ck = tuple(ck)
                if ck not in index:
                    index[ck] = len(node_r)
                    node_r.append(r_of(ck))
                    nxt.append(ck)
                    if len(node_r) > node_budget:
                        raise BudgetExceeded(
                            f"transform DAG exceeds {node_budget} nodes "
                            f"(lam_max={lam_max:g}, tol={tol:g})"
                        )
                row.append(index[ck])
            children.append(row)
        frontier = nxt

    return FourierDag(
        node_r=np.array(node_r, dtype=np.float64),
        children=np.array(children, dtype=np.int32),
        letter_p=ifs.weight_floats.astype(np.float64),
        letter_t=ifs.translations.astype(np.float64),
        center=center,
        width=width,
        tol=float(tol),
        lam_max=lam_max,
    )


def _eval_chunk(dag: FourierDag, lams: np.ndarray) -> np.ndarray:
    if _ext is not None:
        out = np.empty(len(lams), dtype=np.complex128)
        _ext.eval_batch(
            np.ascontiguousarray(lams, dtype=np.float64),
            dag.node_r, dag.children, dag.letter_p, dag.letter_t,
            dag.center, dag.width, dag.tol, out,
        )
        return out
    return _kernels_py.eval_batch(
        lams, dag.node_r, dag.children, dag.letter_p, dag.letter_t,
        dag.center, dag.width, dag.tol,
    )


def eval_fourier(dag: FourierDag, lams, workers=None) -> np.ndarray:
    """Evaluate the measure transform on an array of frequencies.

    Each value carries absolute error at most ``dag.tol``.  Frequencies
    beyond ``dag.lam_max`` in modulus are rejected.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    if lams.size and np.abs(lams).max() > dag.lam_max * (1 + 1e-12):
        raise ValueError("frequency outside the DAG's built range")
    nw = resolve_workers(workers)
    chunks = [lams[i:i + _CHUNK] for i in range(0, len(lams), _CHUNK)]
    if not chunks:
        return np.empty(0, dtype=np.complex128)
    if nw == 1 or len(chunks) == 1:
        return np.concatenate([_eval_chunk(dag, c) for c in chunks])
    with ThreadPoolExecutor(max_workers=nw) as pool:
        parts = list(pool.map(lambda c: _eval_chunk(dag, c), chunks))
    return np.concatenate(parts)
