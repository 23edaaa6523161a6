"""Tail-mass algebra, the mass-transport order, and profile serialization."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reswalk.profiles import (
    GridMismatchError,
    MacroParams,
    MacroProfile,
    abs_difference,
    leq,
    macro_block_average,
    profile_edge,
    tail_mass,
    tv_distance,
)

from conftest import ordered_profile_pair, random_profile


def profiles(max_cells=32):
    """Hypothesis strategy for small valid profiles."""
    return st.builds(
        lambda atom, dens: MacroProfile(atom, np.asarray(dens)),
        st.floats(0, 0.5),
        st.lists(st.floats(0, 3), min_size=2, max_size=max_cells),
    )


# -- tail_mass -------------------------------------------------------------

def test_tail_mass_uniform():
    u = MacroProfile.constant(1.0, 512)
    assert tail_mass(u, 0.25) == pytest.approx(0.75, abs=1e-12)


def test_tail_mass_atom_only():
    u = MacroProfile(0.1, np.zeros(16))
    assert tail_mass(u, 0.0) == pytest.approx(0.1, abs=0)
    assert tail_mass(u, 0.5) == 0.0


def test_tail_mass_halfstep():
    # hand integration: density 2 on [0.3, 0.5] has mass 2 * 0.2
    u = MacroProfile.step([0.0, 0.5, 1.0], [2.0, 0.0], 512)
    assert tail_mass(u, 0.3) == pytest.approx(0.4, abs=1e-12)


def test_tail_mass_domain():
    u = MacroProfile.constant(1.0, 8)
    with pytest.raises(ValueError):
        tail_mass(u, -0.1)
    with pytest.raises(ValueError):
        tail_mass(u, 1.1)


@given(profiles())
@settings(max_examples=100)
def test_tail_monotone_and_additive(u):
    rs = np.linspace(0, 1, 37)
    vals = [tail_mass(u, r) for r in rs]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0
    assert tail_mass(u, 0.0) == pytest.approx(u.atom_mass + u.bulk_mass(), rel=1e-12)


# -- edge ------------------------------------------------------------------

def test_edge_halfstep():
    u = MacroProfile.step([0.0, 0.5, 1.0], [1.0, 0.0], 512)
    assert profile_edge(u) == pytest.approx(0.5, abs=1e-12)


def test_edge_full_support_absent():
    assert profile_edge(MacroProfile.constant(1.0, 64)) is None


def test_edge_pure_atom():
    assert profile_edge(MacroProfile(0.2, np.zeros(64))) == 0.0


# -- order -----------------------------------------------------------------

def test_leq_reflexive():
    u = MacroProfile.constant(1.0, 16)
    assert leq(u, u, tol=0.0)


def test_leq_mass_left_of_mass():
    u = MacroProfile.step([0.0, 0.5, 1.0], [1.0, 0.0], 64)
    v = MacroProfile.step([0.0, 0.5, 1.0], [0.0, 1.0], 64)
    assert leq(u, v, tol=0.0)
    assert not leq(v, u)


def test_leq_needs_total_mass():
    assert not leq(MacroProfile.constant(1.0, 16), MacroProfile.constant(0.5, 16))


def test_leq_grid_mismatch():
    u = MacroProfile.constant(1.0, 16)
    v = MacroProfile.constant(1.0, 24)
    with pytest.raises(GridMismatchError):
        leq(u, v)


def test_leq_resampling_aggregates_mass():
    u = MacroProfile.constant(1.0, 64)
    v = MacroProfile.constant(1.0, 16)
    assert leq(u, v, resample=True) and leq(v, u, resample=True)


def test_order_despite_pointwise_reversal():
    # macro analogue of two crossing occupation patterns: u is pointwise
    # larger near both ends yet sits below v in the tail order
    u = MacroProfile(0.0, np.array([0, 2, 2, 0, 0, 0, 0, 0, 1, 1, 0], dtype=float))
    v = MacroProfile(0.0, np.array([0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 2], dtype=float))
    assert np.count_nonzero(u.density > v.density) == 4
    assert leq(u, v, tol=1e-14)  # equal totals summed in different orders
    assert not leq(v, u)


@given(profiles(), profiles(), profiles())
@settings(max_examples=60)
def test_order_transitive(u, v, w):
    # align on a common grid by truncation
    m = min(u.cells, v.cells, w.cells)
    u = MacroProfile(u.atom_mass, u.density[:m])
    v = MacroProfile(v.atom_mass, v.density[:m])
    w = MacroProfile(w.atom_mass, w.density[:m])
    if leq(u, v, tol=0.0) and leq(v, w, tol=0.0):
        assert leq(u, w, tol=0.0)


def test_order_antisymmetric_up_to_tv(rng):
    for _ in range(50):
        u = random_profile(rng, 32)
        v = random_profile(rng, 32)
        if leq(u, v, tol=0.0) and leq(v, u, tol=0.0):
            assert tv_distance(u, v) == pytest.approx(0.0, abs=1e-12)
    u = random_profile(rng, 32)
    assert leq(u, u, tol=0.0) and tv_distance(u, u) == 0.0


# -- total variation ---------------------------------------------------------

def test_tv_identicals():
    u = MacroProfile.constant(0.7, 32)
    assert tv_distance(u, u) == 0.0


def test_tv_unit():
    assert tv_distance(MacroProfile.constant(1.0, 32), MacroProfile.constant(0.0, 32)) == 1.0


def test_tv_atom_plus_gap():
    u = MacroProfile.step([0.0, 0.9, 1.0], [1.0, 0.0], 64, atom_mass=0.1)
    v = MacroProfile.constant(1.0, 64)
    assert tv_distance(u, v) == pytest.approx(0.2, abs=1e-12)


@given(profiles(8), profiles(8), profiles(8))
@settings(max_examples=60)
def test_tv_metric_axioms(u, v, w):
    m = min(u.cells, v.cells, w.cells)
    u = MacroProfile(u.atom_mass, u.density[:m])
    v = MacroProfile(v.atom_mass, v.density[:m])
    w = MacroProfile(w.atom_mass, w.density[:m])
    duv, dvu = tv_distance(u, v), tv_distance(v, u)
    assert duv == pytest.approx(dvu, rel=1e-12, abs=1e-15)
    assert tv_distance(u, w) <= duv + tv_distance(v, w) + 1e-12
    if duv == 0.0:
        assert u.atom_mass == pytest.approx(v.atom_mass) and np.allclose(u.density, v.density)


def test_abs_difference_matches_tv(rng):
    u, v = random_profile(rng, 48), random_profile(rng, 48)
    d = abs_difference(u, v)
    assert d.total_mass() == pytest.approx(tv_distance(u, v), rel=1e-12)


# -- block averages ----------------------------------------------------------

def test_block_average_uniform():
    u = MacroProfile.constant(1.0, 512)
    assert macro_block_average(u, 3, 17, 0.01) == pytest.approx(1.0, rel=1e-12)


def test_block_average_full_support():
    u = MacroProfile.step([0.0, 0.5, 1.0], [2.0, 0.0], 512)
    assert macro_block_average(u, 0, 50, 0.01) == pytest.approx(2.0, rel=1e-12)


def test_block_average_half_window():
    u = MacroProfile.step([0.0, 0.5, 1.0], [2.0, 0.0], 512)
    assert macro_block_average(u, 25, 50, 0.01) == pytest.approx(1.0, rel=1e-12)


def test_block_average_window_bounds():
    u = MacroProfile.constant(1.0, 64)
    with pytest.raises(ValueError):
        macro_block_average(u, 90, 20, 0.01)


# -- params, construction, serialization -------------------------------------

def test_macro_params_validation():
    MacroParams(1.0, 0.1)
    with pytest.raises(ValueError):
        MacroParams(0.0, 0.1)
    with pytest.raises(ValueError):
        MacroParams(1.0, -1.0)


def test_profile_rejects_negative():
    with pytest.raises(ValueError):
        MacroProfile(-0.1, np.ones(4))
    with pytest.raises(ValueError):
        MacroProfile(0.0, np.array([1.0, -0.5]))


def test_step_profile_partial_cells_conserve_mass():
    u = MacroProfile.step([0.0, 0.37, 1.0], [2.0, 0.5], 64)
    assert u.total_mass() == pytest.approx(2.0 * 0.37 + 0.5 * 0.63, rel=1e-12)


def test_json_roundtrip(rng):
    u = random_profile(rng, 40)
    v = MacroProfile.load_json(u.dump_json())
    assert v.atom_mass == pytest.approx(u.atom_mass)
    assert np.allclose(v.density, u.density)
    data = json.loads(u.dump_json())
    assert set(data) == {"atom_mass", "cell_width", "densities"}


def test_csv_export():
    u = MacroProfile.step([0.0, 0.5, 1.0], [2.0, 0.0], 4)
    lines = u.to_csv().strip().splitlines()
    assert lines[0] == "r_left,density"
    assert len(lines) == 5
    assert lines[1].startswith("0,2")


def test_immutability():
    u = MacroProfile.constant(1.0, 8)
    with pytest.raises(Exception):
        u.density[0] = 5.0
