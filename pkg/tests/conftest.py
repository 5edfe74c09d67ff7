import numpy as np
import pytest

from wmt.measures import DiscreteMeasure, GaussianMeasure, MeasureSequence


def random_discrete(rng, m=None, d=None, uniform=None, scale=1.0):
    m = int(rng.integers(1, 6)) if m is None else m
    d = int(rng.integers(1, 4)) if d is None else d
    atoms = rng.normal(size=(m, d)) * scale
    if uniform is None:
        uniform = rng.random() < 0.4
    if uniform:
        weights = np.full(m, 1.0 / m)
    else:
        weights = rng.random(m) + 0.05
        weights = weights / weights.sum()
    return DiscreteMeasure(atoms, weights)


def random_gaussian(rng):
    return GaussianMeasure(rng.normal(), rng.random() * 2.0 + 0.1)


def random_sequence(rng, n, level, kind, d=2, max_atoms=5):
    if kind == "gaussian":
        elements = tuple(random_gaussian(rng) for _ in range(n))
    else:
        elements = tuple(
            random_discrete(rng, m=int(rng.integers(2, max_atoms + 1)), d=d)
            for _ in range(n)
        )
    return MeasureSequence(elements, level)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
