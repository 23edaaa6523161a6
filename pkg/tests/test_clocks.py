"""Reproducibility and statistics of the per-label event streams."""

import numpy as np
import pytest

from reswalk.clocks import ClockBundle


def test_streams_reproducible_across_query_order():
    a = ClockBundle(42, 100, 0.5)
    b = ClockBundle(42, 100, 0.5)
    # consume b's labels in a different order and in different windows
    b.label_events(7, 0.0, 50.0)
    b.label_events(0, 0.0, 10.0)
    ta, ma = a.label_events(3, 0.0, 100.0)
    tb, mb = b.label_events(3, 0.0, 100.0)
    assert np.array_equal(ta, tb) and np.array_equal(ma, mb)
    t0a, m0a = a.label_events(0, 0.0, 500.0)
    t0b, m0b = b.label_events(0, 0.0, 500.0)
    assert np.array_equal(t0a, t0b) and np.array_equal(m0a, m0b)


def test_streams_differ_across_seeds_and_labels():
    a = ClockBundle(1, 100, 0.5)
    ta, _ = a.label_events(1, 0.0, 20.0)
    tb, _ = a.label_events(2, 0.0, 20.0)
    assert not np.array_equal(ta, tb)
    c = ClockBundle(2, 100, 0.5)
    tc, _ = c.label_events(1, 0.0, 20.0)
    assert not np.array_equal(ta, tc)


def test_times_strictly_increasing():
    clocks = ClockBundle(5, 50, 1.0)
    for label in (0, 1, 9):
        times, _ = clocks.label_events(label, 0.0, 200.0)
        assert np.all(np.diff(times) > 0)


def test_rates():
    clocks = ClockBundle(11, 100, 0.5)
    horizon = 20000.0
    times, marks = clocks.label_events(1, 0.0, horizon)
    assert times.size == pytest.approx(horizon, rel=0.05)  # unit rate
    t0, m0 = clocks.label_events(0, 0.0, horizon)
    assert t0.size == pytest.approx(2.0 * 0.5 / 100 * horizon, rel=0.3)
    assert abs(np.mean(marks)) < 0.05  # fair coin


def test_merged_sorted_with_tiebreak():
    clocks = ClockBundle(3, 20, 1.0)
    times, labels, marks = clocks.merged(5, 0.0, 30.0)
    assert np.all(np.diff(times) >= 0)
    assert times.size == sum(
        clocks.label_events(i, 0.0, 30.0)[0].size for i in range(6))


def test_window_partition():
    clocks = ClockBundle(99, 40, 0.8)
    w = 37.5
    total_plus = clocks.plus_count(4 * w)
    assert total_plus == sum(clocks.reservoir_window_counts(k, w)[0] for k in range(4))


def test_validation():
    with pytest.raises(ValueError):
        ClockBundle(0, 1, 1.0)
    with pytest.raises(ValueError):
        ClockBundle(0, 10, 0.0)
