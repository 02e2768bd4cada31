"""Compiled kernel vs numpy fallback, and DAG construction properties."""

import numpy as np
import pytest

from fflab import _kernels_py
from fflab.errors import BudgetExceeded
from fflab.kernels import HAVE_EXTENSION, build_dag, eval_fourier, resolve_workers


@pytest.fixture(scope="module")
def dag(cantor_measure):
    return build_dag(cantor_measure.ifs, 500.0, 1e-8)


def test_dag_is_topologically_ordered(dag):
    for u in range(dag.node_count):
        for child in dag.children[u]:
            assert child == -1 or child > u


def test_dag_merges_homogeneous_depths(dag):
    # a single-ratio system needs one node per depth
    assert dag.node_count < 40


def test_node_budget(cantor_measure):
    with pytest.raises(BudgetExceeded):
        build_dag(cantor_measure.ifs, 1e6, 1e-12, node_budget=5)


def test_backends_agree(dag):
    if not HAVE_EXTENSION:
        pytest.skip("compiled kernel not built")
    lams = np.linspace(-500, 500, 2011)
    fast = eval_fourier(dag, lams)
    slow = _kernels_py.eval_batch(
        lams, dag.node_r, dag.children, dag.letter_p, dag.letter_t,
        dag.center, dag.width, dag.tol,
    )
    assert np.abs(fast - slow).max() < 1e-12


def test_threaded_matches_serial(dag):
    lams = np.linspace(0, 400, 9000)
    a = eval_fourier(dag, lams, workers=1)
    b = eval_fourier(dag, lams, workers=4)
    assert np.array_equal(a, b)


def test_out_of_range_rejected(dag):
    with pytest.raises(ValueError):
        eval_fourier(dag, [1e4])


def test_resolve_workers_env(monkeypatch):
    monkeypatch.delenv("FFLAB_WORKERS", raising=False)
    assert resolve_workers(None) == 1
    assert resolve_workers(3) == 3
    monkeypatch.setenv("FFLAB_WORKERS", "7")
    assert resolve_workers(None) == 7


def test_multiratio_dag(lebesgue_measure):
    from fflab.ifs import validate_ifs
    from fflab.measure import SelfSimilarMeasure, fourier_transform

    ifs = validate_ifs([("1/2", "0"), ("1/4", "3/4")], ["1/2", "1/2"], ("0", "1"))
    mu = SelfSimilarMeasure(ifs)
    # two incommensurable-looking ratios still collapse by exponent counts
    dag = mu.dag_for(100.0, 1e-9)
    assert dag.node_count < 1000
    import cmath, math
    lhs = fourier_transform(mu, 31.0, 1e-10)
    rhs = sum(
        float(w) * cmath.exp(2j * math.pi * m.translation_float * 31.0)
        * fourier_transform(mu, m.ratio_float * 31.0, 1e-10)
        for m, w in zip(ifs.maps, ifs.weights)
    )
    assert abs(lhs - rhs) < 4e-10
