import math

import pytest

from spectree import PotentialSpec, build_spherical_basis, build_tree

LOG2 = math.log(2.0)


@pytest.fixture(scope="session")
def tree_basis():
    """Cache of (tree, basis) pairs shared across the suite."""
    cache = {}

    def get(k, depth):
        key = (k, depth)
        if key not in cache:
            t = build_tree(k, depth)
            cache[key] = (t, build_spherical_basis(t))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def radial_spec_k2():
    return PotentialSpec.radial_exp(0.3 * (1 + 0.5j), 6 * LOG2)
