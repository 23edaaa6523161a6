"""Ordered-configuration algebra and the coupled-flow sandwich."""

import itertools

import numpy as np
import pytest

from reswalk.clocks import ClockBundle
from reswalk.coupling import (
    OrderedConfig,
    apply_operator,
    flow,
    from_ordered,
    ordered_leq,
    to_ordered,
    verify_sandwich,
)
from reswalk.simulate import Configuration, empirical_interface, step_true

from clock_scripts import ScriptedClocks


def all_small_configs(lattice_size=4, max_particles=3):
    """Every ordered configuration with at most max_particles active ranks."""
    vals = list(range(lattice_size + 2))  # 0..L and the exited slot L+1
    out = [OrderedConfig((), lattice_size)]
    for k in range(1, max_particles + 1):
        for combo in itertools.combinations_with_replacement(vals, k):
            out.append(OrderedConfig(tuple(sorted(combo, reverse=True)), lattice_size))
    return out


ALL_OPS = [(label, mark) for label in range(0, 5) for mark in (1, -1)]


# -- representation ---------------------------------------------------------------

def test_round_trip():
    xi = Configuration(np.array([0, 3, 0, 1, 0]))
    x = to_ordered(xi)
    assert x.positions == (3, 1, 1, 1)
    assert x.n_active == 4 and x.m_exited == 0
    assert np.array_equal(from_ordered(x).occupations, xi.occupations)


def test_round_trip_random(rng):
    for _ in range(25):
        occ = rng.integers(0, 3, 12)
        xi = Configuration(occ.astype(np.int64))
        assert np.array_equal(from_ordered(to_ordered(xi)).occupations, xi.occupations)


def test_empty_config():
    x = to_ordered(Configuration.empty(6))
    assert x.positions == () and x.n_active == 0 and x.m_exited == 0


def test_exited_prefix():
    x = OrderedConfig((5, 5, 3, 0), 4)
    assert x.m_exited == 2
    assert from_ordered(x).count == 2


# -- operators ----------------------------------------------------------------------

def test_birth_appends_zero():
    x = OrderedConfig((5, 3), 10)
    y = apply_operator(x, 0, 1)
    assert y.positions == (5, 3, 0)
    assert y.n_active == x.n_active + 1


def test_annihilate_noop_when_all_exited():
    x = OrderedConfig((11, 11), 10)
    assert apply_operator(x, 0, -1) is x


def test_annihilate_sends_rightmost_out():
    x = OrderedConfig((11, 7, 2), 10)
    y = apply_operator(x, 0, -1)
    assert y.positions == (11, 11, 2)


def test_displacement_suppressed_at_wall():
    x = OrderedConfig((10, 3), 10)
    y = apply_operator(x, 1, 1)
    assert y.positions == x.positions


def test_displacement_reorders_within_run():
    x = OrderedConfig((4, 4, 4), 9)
    y = apply_operator(x, 3, 1)  # lowest rank of the run moves up
    assert y.positions == (5, 4, 4)
    z = apply_operator(x, 1, -1)
    assert z.positions == (4, 4, 3)


def test_sentinel_ranks_ignored():
    x = OrderedConfig((6, 2), 10)
    assert apply_operator(x, 5, 1).positions == x.positions  # rank beyond prefix
    x2 = OrderedConfig((11, 2), 10)
    assert apply_operator(x2, 1, -1).positions == x2.positions  # exited rank


def test_operators_preserve_sortedness_everywhere():
    for x in all_small_configs():
        for label, mark in ALL_OPS:
            y = apply_operator(x, label, mark)
            assert all(a >= b for a, b in zip(y.positions, y.positions[1:]))


# -- order ---------------------------------------------------------------------------

def test_ordered_leq_reflexive():
    x = OrderedConfig((4, 2), 6)
    assert ordered_leq(x, x)


def test_order_equivalent_to_interface_order(rng):
    for _ in range(60):
        a = Configuration(rng.integers(0, 3, 8).astype(np.int64))
        b = Configuration(rng.integers(0, 3, 8).astype(np.int64))
        fa, fb = empirical_interface(a, 1.0), empirical_interface(b, 1.0)
        assert ordered_leq(to_ordered(a), to_ordered(b)) == bool(np.all(fa <= fb))


def test_figure_style_pair_ordered_without_pointwise_order():
    # the smaller configuration has strictly more particles on sites
    # {1,2,8,9}, yet its interface sits below everywhere
    lo = Configuration(np.array([0, 2, 2, 0, 0, 0, 0, 0, 1, 1, 0]))
    hi = Configuration(np.array([0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 2]))
    for site in (1, 2, 8, 9):
        assert lo.occupations[site] > hi.occupations[site]
    assert ordered_leq(to_ordered(lo), to_ordered(hi))
    assert not ordered_leq(to_ordered(hi), to_ordered(lo))


def test_operator_monotonicity_exhaustive():
    configs = all_small_configs()
    pairs = [(x, y) for x in configs for y in configs if ordered_leq(x, y)]
    for x, y in pairs:
        for label, mark in ALL_OPS:
            assert ordered_leq(apply_operator(x, label, mark),
                               apply_operator(y, label, mark))


def test_reservoir_insert_remove_bounds_exhaustive():
    configs = all_small_configs()
    for x in configs:
        for y in configs:
            if not ordered_leq(x, y):
                continue
            assert ordered_leq(x, apply_operator(y, 0, 1))
            assert ordered_leq(x, apply_operator(y, 0, -1))
            if x.n_active < y.n_active:
                assert ordered_leq(apply_operator(x, 0, 1), y)
            if x.m_exited < y.m_exited:
                assert ordered_leq(apply_operator(x, 0, -1), y)


def test_allowed_exchange_exhaustive():
    # applying the reservoir operator before a displacement never exceeds
    # the reversed order
    for x in all_small_configs():
        for i in (1, 2, 3):
            for s0 in (1, -1):
                for si in (1, -1):
                    early = apply_operator(apply_operator(x, i, si), 0, s0)
                    late = apply_operator(apply_operator(x, 0, s0), i, si)
                    assert ordered_leq(early, late)


def test_counters_depend_only_on_reservoir_ops():
    configs = [x for x in all_small_configs(3, 3)]
    script = [(0, 1), (2, -1), (0, -1), (1, 1)]
    for x in configs:
        for y in configs:
            if x.n_active == y.n_active and x.m_exited == y.m_exited:
                a, b = x, y
                only0_a = x
                for label, mark in script:
                    a = apply_operator(a, label, mark)
                    b = apply_operator(b, label, mark)
                    if label == 0:
                        only0_a = apply_operator(only0_a, label, mark)
                assert (a.n_active, a.m_exited) == (b.n_active, b.m_exited)
                assert (a.n_active, a.m_exited) == (only0_a.n_active, only0_a.m_exited)


def _random_ordered_pair(rng, lattice_size, n_particles):
    hi = np.sort(rng.integers(0, lattice_size + 1, n_particles))[::-1]
    lo = np.sort(np.maximum(hi - rng.integers(0, 4, n_particles), 0))[::-1]
    return (OrderedConfig(tuple(int(v) for v in lo), lattice_size),
            OrderedConfig(tuple(int(v) for v in hi), lattice_size))


def test_operator_monotonicity_fuzz_large_lattice(rng):
    for _ in range(300):
        x, y = _random_ordered_pair(rng, 50, int(rng.integers(1, 12)))
        assert ordered_leq(x, y)
        label = int(rng.integers(0, 14))
        mark = 1 if rng.uniform() < 0.5 else -1
        assert ordered_leq(apply_operator(x, label, mark),
                           apply_operator(y, label, mark))


def test_flow_monotonicity_on_shared_noise(rng):
    n, j, delta = 30, 1.0, 0.05
    block = n * n * delta
    for seed in range(8):
        clocks = ClockBundle(100 + seed, n, j)
        x, y = _random_ordered_pair(rng, n, 10)
        for kind in ("free", "true", "delta_minus", "delta_plus"):
            fx = flow(x, clocks, kind, j, delta, 2 * block)
            fy = flow(y, clocks, kind, j, delta, 2 * block)
            assert ordered_leq(fx, fy), (kind, seed)


# -- flows --------------------------------------------------------------------------------

def test_flow_free_equals_true_without_reservoir_events():
    n = 12
    clocks = ClockBundle(5, n, 1e-9)  # reservoir essentially silent
    x0 = to_ordered(Configuration.from_positions([2, 7, 7], n))
    horizon = 40.0
    a = flow(x0, clocks, "free", 1e-9, 0.1, horizon)
    b = flow(x0, clocks, "true", 1e-9, 0.1, horizon)
    if clocks.label_events(0, 0.0, horizon)[0].size == 0:
        assert a.positions == b.positions


def test_flow_matches_operator_composition():
    n = 8
    clocks = ClockBundle(11, n, 2.0)
    x0 = to_ordered(Configuration.from_positions([1, 4, 6], n))
    horizon = 30.0
    fast = flow(x0, clocks, "true", 2.0, 0.1, horizon)
    budget = x0.n_active + clocks.plus_count(horizon)
    times, labels, marks = clocks.merged(budget, 0.0, horizon)
    slow = x0
    for lab, mark in zip(labels, marks):
        slow = apply_operator(slow, int(lab), int(mark))
    assert fast.positions == slow.positions


def test_flow_counters_agree_across_kinds():
    n, j, delta = 15, 1.0, 0.04
    block = n * n * delta
    for seed in range(6):
        clocks = ClockBundle(seed, n, j)
        x0 = to_ordered(Configuration.from_positions([3, 8, 8, 14], n))
        results = {kind: flow(x0, clocks, kind, j, delta, 3 * block)
                   for kind in ("true", "delta_minus", "delta_plus")}
        nm = {(r.n_active, r.m_exited) for r in results.values()}
        assert len(nm) == 1


def test_flow_true_law_matches_generator_sim():
    # same unlabeled law: compare mean interfaces over replicas
    n, j, t = 10, 3.0, 20.0
    xi = Configuration.from_positions([2, 5, 8], n)
    x0 = to_ordered(xi)
    reps = 800
    acc_flow = np.zeros(n + 1)
    acc_gen = np.zeros(n + 1)
    for seed in range(reps):
        out_flow = from_ordered(flow(x0, ClockBundle(seed, n, j), "true", j, 0.1, t))
        out_gen = step_true(xi, ClockBundle(10_000 + seed, n, j), t)
        acc_flow += empirical_interface(out_flow, 1.0 / n)
        acc_gen += empirical_interface(out_gen, 1.0 / n)
    assert np.abs(acc_flow / reps - acc_gen / reps).max() < 0.05


def test_flow_rejects_partial_blocks():
    clocks = ClockBundle(1, 10, 1.0)
    x0 = to_ordered(Configuration.from_positions([5], 10))
    with pytest.raises(ValueError):
        flow(x0, clocks, "delta_minus", 1.0, 0.1, 15.0)


# -- sandwich -----------------------------------------------------------------------------

def test_sandwich_small_scale():
    x0 = to_ordered(Configuration.from_positions(list(range(0, 20, 2)), 20))
    for seed in range(25):
        clocks = ClockBundle(seed, 20, 1.0)
        report = verify_sandwich(x0, clocks, 1.0, 0.2, 0.05, 3)
        assert report.passed, report.first_violation


def test_sandwich_requires_divisible_deltas():
    x0 = to_ordered(Configuration.from_positions([5], 10))
    with pytest.raises(ValueError):
        verify_sandwich(x0, ClockBundle(0, 10, 1.0), 1.0, 0.2, 0.07, 2)
