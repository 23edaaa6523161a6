import numpy as np
import pytest
from hypothesis import settings

from reswalk.profiles import MacroProfile

settings.register_profile("ci", derandomize=True)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_profile(rng, cells=64, max_density=3.0, atom_scale=0.5):
    return MacroProfile(atom_scale * rng.uniform(), rng.uniform(0, max_density, cells))


def ordered_profile_pair(rng, cells=64):
    """(u, v) with u <= v: v is u with a random mass block moved right."""
    u_dens = rng.uniform(0.2, 2.0, cells)
    v_dens = u_dens.copy()
    a = rng.integers(0, cells - 2)
    b = rng.integers(a + 1, cells)
    frac = rng.uniform(0.1, 0.9)
    moved = frac * v_dens[a:b].sum()
    v_dens[a:b] *= 1.0 - frac
    v_dens[b:] += moved / (cells - b)
    atom = 0.3 * rng.uniform()
    u = MacroProfile(atom, u_dens)
    v = MacroProfile(atom, v_dens)
    return u, v
