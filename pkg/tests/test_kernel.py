"""Image-sum kernel against the spectral series, and the convolve contract."""

import numpy as np
import pytest

from reswalk.kernel import cell_transfer, convolve, image_count, kernel_value
from reswalk.profiles import MacroProfile, leq, sup_tail_distance, tail_mass, tv_distance

from conftest import ordered_profile_pair, random_profile
from oracles import kernel_mass_within, spectral_kernel


def test_kernel_matches_spectral_oracle():
    err = abs(kernel_value(0.1, 0.3, 0.7) - spectral_kernel(0.1, 0.3, 0.7))
    assert err < 1e-10


def test_kernel_spectral_grid():
    rs = np.linspace(0, 1, 20)
    for t in (0.02, 0.1, 0.7):
        for r in rs:
            for rp in rs[::4]:
                assert abs(kernel_value(t, r, rp) - spectral_kernel(t, r, rp)) < 1e-10


def test_kernel_symmetry(rng):
    for _ in range(30):
        t = float(rng.uniform(0.005, 2.0))
        r, rp = rng.uniform(0, 1, 2)
        assert kernel_value(t, r, rp) == pytest.approx(kernel_value(t, rp, r), rel=1e-12)


def test_kernel_uniformizes():
    for r in (0.0, 0.4, 1.0):
        for rp in (0.1, 0.9):
            assert kernel_value(10.0, r, rp) == pytest.approx(1.0, abs=1e-8)


def test_kernel_rejects_bad_time():
    with pytest.raises(ValueError):
        kernel_value(0.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        convolve(-1.0, MacroProfile.constant(1.0, 8))


def test_image_count_covers_tolerance():
    for t in (0.001, 0.05, 1.0, 20.0):
        k = image_count(t, 1e-14)
        assert np.exp(-((2 * k - 1) ** 2) / (2 * t)) < 1e-14


def test_transfer_is_column_stochastic():
    transfer, atom0, atom1 = cell_transfer(0.03, 256)
    assert np.abs(transfer.sum(axis=0) - 1.0).max() < 1e-11
    assert atom0.sum() == pytest.approx(1.0, abs=1e-12)
    assert atom1.sum() == pytest.approx(1.0, abs=1e-12)
    assert transfer.min() >= 0.0


def test_convolve_fixes_constants():
    u = MacroProfile.constant(1.0, 512)
    v = convolve(0.05, u)
    assert np.abs(v.density - 1.0).max() < 1e-11
    assert v.atom_mass == 0.0


def test_convolve_pure_atom_gives_kernel_profile():
    u = MacroProfile(1.0, np.zeros(512))
    v = convolve(0.05, u)
    mids = v.cell_midpoints()
    pointwise = kernel_value(0.05, mids, np.zeros(512))
    # cell averages vs midpoint values differ at O(width^2 * curvature)
    assert np.abs(v.density - pointwise).max() < 1e-4
    assert v.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_convolve_semigroup():
    rng = np.random.default_rng(7)
    u = MacroProfile(0.3, rng.uniform(0, 2, 4096))
    twice = convolve(0.05, convolve(0.05, u))
    once = convolve(0.10, u)
    assert sup_tail_distance(twice, once) < 1e-8


def test_mass_conservation_across_times(rng):
    for t in (1e-3, 0.05, 0.7, 10.0):
        u = random_profile(rng, 128)
        v = convolve(t, u)
        assert abs(v.total_mass() - u.total_mass()) < 1e-13 * max(1.0, u.total_mass())


def test_positivity(rng):
    for t in (0.001, 0.2):
        v = convolve(t, random_profile(rng, 128))
        assert v.density.min() >= 0.0


def test_order_preservation(rng):
    for _ in range(12):
        u, v = ordered_profile_pair(rng, 64)
        assert leq(u, v, tol=1e-12)  # ordered by construction, float dust aside
        t = float(rng.uniform(0.01, 0.5))
        assert leq(convolve(t, u), convolve(t, v), tol=1e-8)


def test_tail_bound():
    # mass escaping past distance X is at most sqrt(2) exp(-X^2 / 4t)
    for t in (0.01, 0.1):
        for x in (0.1, 0.2, 0.4):
            for r in (0.0, 0.3, 0.8):
                outside = 1.0 - kernel_mass_within(t, r, x)
                assert outside <= np.sqrt(2.0) * np.exp(-x * x / (4.0 * t)) + 1e-12


def test_tv_contraction(rng):
    for _ in range(10):
        u = random_profile(rng, 96)
        v = random_profile(rng, 96)
        t = float(rng.uniform(0.01, 1.0))
        assert tv_distance(convolve(t, u), convolve(t, v)) <= tv_distance(u, v) + 1e-10
