import numpy as np
import pytest

from defermatch.matching import MatchInstance, ResourceSet


@pytest.fixture
def small_instance():
    """3 individuals x 2 resources, capacities (1,1): the worked example with
    optimal cardinality-2 pairs {(0,0),(1,1)} and objective 1.6 at b=1."""
    weights = [[0.9, 0.1], [0.8, 0.7], [0.2, 0.6]]
    return MatchInstance(
        n=3,
        resource_set=ResourceSet((0, 1), (1, 1)),
        confidence=weights,
        success_prob=weights,
    )


def random_instance(rng, max_n=6, max_k=3, max_cap=2, tie_heavy=False):
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(1, max_k + 1))
    caps = tuple(int(c) for c in rng.integers(0, max_cap + 1, k))
    if sum(caps) == 0:
        caps = (1,) + caps[1:]
    if tie_heavy:
        w = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=(n, k))
    else:
        w = rng.uniform(0.0, 1.0, (n, k))
    return MatchInstance(n, ResourceSet(tuple(range(k)), caps), w, w.copy())
