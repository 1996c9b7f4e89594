import numpy as np
import pytest

from rcdroplet.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(20240817)


def random_config(window, p, rng):
    from rcdroplet.lattice import EdgeConfig

    return EdgeConfig(window, rng.random(window.edge_count) < p)
