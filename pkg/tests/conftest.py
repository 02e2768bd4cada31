import numpy as np
import pytest

from fflab.ifs import validate_ifs
from fflab.measure import SelfSimilarMeasure


@pytest.fixture(scope="session")
def cantor():
    return validate_ifs([("1/3", "0"), ("1/3", "2/3")], ["1/2", "1/2"], ("0", "1"))


@pytest.fixture(scope="session")
def lebesgue():
    return validate_ifs([("1/2", "0"), ("1/2", "1/2")], ["1/2", "1/2"], ("0", "1"))


@pytest.fixture(scope="session")
def biased_cantor():
    return validate_ifs([("1/3", "0"), ("1/3", "2/3")], ["3/4", "1/4"], ("0", "1"))


@pytest.fixture(scope="session")
def cantor_above_one():
    # ternary Cantor-type system supported in [2, 3]
    return validate_ifs([("1/3", "4/3"), ("1/3", "2")], ["1/2", "1/2"], ("2", "3"))


@pytest.fixture(scope="session")
def cantor_measure(cantor):
    return SelfSimilarMeasure(cantor)


@pytest.fixture(scope="session")
def lebesgue_measure(lebesgue):
    return SelfSimilarMeasure(lebesgue)


@pytest.fixture(scope="session")
def biased_measure(biased_cantor):
    return SelfSimilarMeasure(biased_cantor)


@pytest.fixture(scope="session")
def measure_23(cantor_above_one):
    return SelfSimilarMeasure(cantor_above_one)


def random_valid_ifs(rng):
    """One random contracting system on [0,1] with distinct fixed points."""
    n = int(rng.integers(2, 4))
    while True:
        maps = []
        for _ in range(n):
            r = float(rng.uniform(0.15, 0.6)) * (1 if rng.random() < 0.7 else -1)
            if r > 0:
                t = float(rng.uniform(0, 1 - r))
            else:
                t = float(rng.uniform(-r, 1))
            maps.append((r, t))
        w = rng.dirichlet(np.ones(n)) * 0.98 + 0.02 / n
        w = w / w.sum()
        fixed = {m[1] / (1 - m[0]) for m in maps}
        if len(fixed) >= 2:
            return validate_ifs(maps, [float(x) for x in w], (0.0, 1.0))
