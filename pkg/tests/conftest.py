import numpy as np
import pytest

from ncflo.model import DiluteConfig, make_instance, post_select
from ncflo.rng import RngStream


def draw_sub(n, d, seed, kappa=0.5):
    """A post-selected instance: (V, geometry, record, sub-grid, rng)."""
    rng = RngStream(seed)
    cfg = DiluteConfig(n=n, d=d, kappa=kappa)
    V = make_instance(cfg, rng)
    record, sub, _ = post_select(V, cfg, rng)
    return V, cfg, record, sub, rng


def random_beta(n, d, rng):
    return np.stack(
        [rng.gen.integers(0, d, size=n), rng.gen.integers(0, d, size=n)], axis=1
    )


@pytest.fixture
def rng():
    return RngStream(1234)
