import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from arw_lab.graphs import LATTICE, TREE, make_region
from arw_lab.stabilization import (
    SLEEPING,
    BudgetExceeded,
    OdometerReport,
    config_leq,
    enforced_stabilize,
    excess_jumps,
    is_stable,
    is_weakly_stable,
    partial_sequence,
    partial_weak_sequence,
    particle_count,
    sample_poisson_config,
    stabilize,
    stabilize_via_weak,
    topple,
    weak_stabilize,
)
from arw_lab.tape import SLEEP, InstructionTape, ignore_sleep_at


def tape_with(prefix, x=0, lam=1.0, d=2):
    """First tape whose instructions at x start with ``prefix``."""
    for seed in range(100_000):
        tape = InstructionTape(seed, lam, d)
        if all(tape[x, j + 1] == ins for j, ins in enumerate(prefix)):
            return tape
    raise LookupError(prefix)


SITE = make_region(LATTICE, 1, 1)

# -- strategies --------------------------------------------------------------

region_specs = st.one_of(
    st.tuples(st.just(LATTICE), st.integers(1, 2), st.integers(1, 4)),
    st.tuples(st.just(LATTICE), st.just(3), st.integers(1, 3)),
    st.tuples(st.just(TREE), st.integers(3, 4), st.integers(1, 3)),
)


@st.composite
def instances(draw, max_particles=4):
    region = make_region(*draw(region_specs))
    config = np.array(draw(st.lists(st.integers(-1, max_particles), min_size=region.n, max_size=region.n)), dtype=np.int64)
    lam = draw(st.sampled_from([0.1, 1.0, 10.0]))
    tape = InstructionTape(draw(st.integers(0, 2**64 - 1)), lam, region.d)
    x = draw(st.integers(0, region.n - 1))
    return region, config, tape, x


seeds = st.integers(0, 2**63)

# -- examples ----------------------------------------------------------------


def test_single_site_sleep_first():
    tape = tape_with([SLEEP])
    rep = stabilize(SITE, [1], tape)
    assert list(rep.final) == [SLEEPING]
    assert (rep.m[0], rep.M[0], rep.absorbed) == (1, 0, 0)


def test_single_site_jump_first():
    tape = tape_with([0])
    rep = stabilize(SITE, [1], tape)
    assert list(rep.final) == [0]
    assert (rep.m[0], rep.M[0], rep.absorbed) == (1, 1, 1)


def test_empty_config_does_nothing():
    region = make_region(LATTICE, 2, 3)
    rep = stabilize(region, np.zeros(region.n, np.int64), InstructionTape(0, 1.0, 4))
    assert rep.m.sum() == rep.M.sum() == rep.absorbed == 0


def test_topple_jump_wakes_sleeper():
    region = make_region(LATTICE, 1, 2)
    y = int(region.nbr[0][0])
    tape = tape_with([0], x=0, d=2)
    config = np.zeros(region.n, np.int64)
    config[0], config[y] = 2, SLEEPING
    config, rep = topple(region, config, OdometerReport.empty(config), 0, tape)
    assert config[0] == 1 and config[y] == 2
    assert rep.m[0] == rep.M[0] == 1


def test_topple_sleep_rules():
    tape = tape_with([SLEEP])
    config, rep = topple(SITE, np.array([1]), OdometerReport.empty([1]), 0, tape)
    assert config[0] == SLEEPING
    config, rep = topple(SITE, np.array([3]), OdometerReport.empty([3]), 0, tape)
    assert config[0] == 3 and rep.m[0] == 1 and rep.M[0] == 0


def test_topple_rejects_sink():
    with pytest.raises(IndexError):
        topple(SITE, np.array([1]), OdometerReport.empty([1]), SITE.sink, InstructionTape(0, 1.0, 2))


def test_weak_leaves_single_particle_at_x():
    region = make_region(LATTICE, 2, 3)
    config = np.zeros(region.n, np.int64)
    config[0] = 1
    out = weak_stabilize(0, region, config, InstructionTape(0, 1.0, 4))
    assert out.report.m.sum() == 0


def test_weak_two_particles_single_site():
    tape = tape_with([0, SLEEP])
    out = weak_stabilize(0, SITE, [2], tape)
    assert out.report.m[0] == 1 and out.report.final[0] == 1


def test_via_weak_sleep_in_second_round():
    tape = tape_with([SLEEP])
    out = stabilize_via_weak(0, SITE, [1], tape)
    assert out.T == 2 and out.final[0] == SLEEPING


def test_via_weak_one_round_leaves_x_empty():
    tape = tape_with([0, 0])
    out = stabilize_via_weak(0, SITE, [2], tape)
    assert out.T == 2 and out.final[0] == 0
    out = stabilize_via_weak(0, SITE, [0], tape)
    assert out.T == 1 and out.final[0] == 0


def test_enforced_single_site_always_empties():
    for seed in range(50):
        rep = enforced_stabilize(0, SITE, [1], InstructionTape(seed, 10.0, 2))
        assert rep.final[0] == 0 and rep.absorbed == 1


@pytest.mark.parametrize("k", range(6))
def test_single_site_excess_jumps(k):
    # enforced: all k particles jump out; weak: all but the last
    for seed in range(20):
        assert excess_jumps(0, SITE, [k], InstructionTape(seed, 1.0, 2)) == min(k, 1)


def test_excess_zero_when_x_untouched():
    region = make_region(LATTICE, 1, 3)
    far = region.n - 1
    y = [int(w) for w in region.nbr[far]]
    tape = tape_with([y.index(region.sink)], x=far, d=2)
    config = np.zeros(region.n, np.int64)
    config[far] = 1
    assert excess_jumps(0, region, config, tape) == 0


def test_poisson_config():
    region = make_region(LATTICE, 2, 71)
    assert not sample_poisson_config(region, 0.0, 1).any()
    eta = sample_poisson_config(region, 0.5, 1)
    assert abs(eta.mean() - 0.5) < 3 * math.sqrt(0.5 / region.n)
    assert abs(eta.var() - 0.5) < 0.05
    assert np.array_equal(eta, sample_poisson_config(region, 0.5, 1))
    with pytest.raises(ValueError):
        sample_poisson_config(region, -0.1, 1)


def test_budget_guard():
    region = make_region(LATTICE, 2, 4)
    with pytest.raises(BudgetExceeded):
        stabilize(region, np.full(region.n, 3), InstructionTape(0, 1.0, 4), budget=10)


def test_config_order():
    assert config_leq([0, SLEEPING, 1], [SLEEPING, 1, 1])
    assert not config_leq([1], [SLEEPING])
    assert particle_count([SLEEPING, 2, 0]) == 3


# -- properties --------------------------------------------------------------


@given(instances(), seeds, seeds)
def test_abelian_property(inst, a, b):
    region, config, tape, x = inst
    ref = stabilize(region, config, tape)
    assert ref.same_as(stabilize(region, config, tape, order_seed=a))
    assert ref.same_as(stabilize(region, config, tape, order_seed=b))
    w = weak_stabilize(x, region, config, tape).report
    assert w.same_as(weak_stabilize(x, region, config, tape, order_seed=a).report)


@given(instances())
def test_conservation_and_stability(inst):
    region, config, tape, x = inst
    rep = stabilize(region, config, tape)
    assert particle_count(config) == particle_count(rep.final) + rep.absorbed
    assert is_stable(rep.final)
    assert np.all((0 <= rep.M) & (rep.M <= rep.m))
    w = weak_stabilize(x, region, config, tape).report
    assert is_weakly_stable(w.final, x)
    assert particle_count(config) == particle_count(w.final) + w.absorbed


@given(instances())
def test_via_weak_matches_stabilize(inst):
    region, config, tape, x = inst
    out = stabilize_via_weak(x, region, config, tape)
    ref = stabilize(region, config, tape)
    assert np.array_equal(out.report.m, ref.m) and np.array_equal(out.report.M, ref.M)
    assert np.array_equal(out.final, ref.final) and out.report.absorbed == ref.absorbed
    assert out.T >= 1 and len(out.rounds) == out.T
    assert np.array_equal(out.rounds[0], weak_stabilize(x, region, config, tape).report.m)
    if out.T == 1:
        # a sleeper placed at x and never woken stays asleep
        assert out.final[x] == 0 or (config[x] == SLEEPING and out.rounds[0][x] == 0)
    for a, b in zip(out.rounds, out.rounds[1:]):
        assert np.all(a <= b)


@given(instances(), st.integers(0, 3), st.data())
def test_volume_and_config_monotonicity(inst, grow, data):
    region, config, tape, _ = inst
    dim = region.ndim or region.d
    big = make_region(region.family, dim, region.L + grow)
    extra = np.array(data.draw(st.lists(st.integers(-1, 3), min_size=big.n - region.n, max_size=big.n - region.n)), dtype=np.int64)
    bumps = np.array(data.draw(st.lists(st.integers(0, 2), min_size=region.n, max_size=region.n)), dtype=np.int64)
    raised = np.where((config == SLEEPING) & (bumps > 0), bumps, np.where(config >= 0, config + bumps, config))
    eta_big = np.concatenate([raised, extra])
    assert config_leq(config, eta_big[: region.n])
    small = stabilize(region, config, tape).m
    large = stabilize(big, eta_big, tape).m
    assert np.all(small <= large[: region.n])


@given(instances(), st.sets(st.integers(0, 30), max_size=5))
def test_enforced_activation_monotone(inst, erase):
    region, config, tape, x = inst
    tilde = tape
    for v in erase | {x}:
        tilde = ignore_sleep_at(tilde, v)
    assert np.all(stabilize(region, config, tape).m <= stabilize(region, config, tilde).m)
    e = enforced_stabilize(x, region, config, tape)
    assert np.all(stabilize(region, config, tape).m <= e.m)
    assert config[x] == SLEEPING or e.final[x] == 0


@given(instances(), st.integers(0, 200), seeds)
def test_least_action(inst, steps, order):
    region, config, tape, x = inst
    m1 = weak_stabilize(x, region, config, tape).report.m
    full = stabilize(region, config, tape).m
    beta = partial_weak_sequence(x, region, config, tape, steps, order).m
    assert np.all(beta <= m1) and np.all(beta <= full)
    assert np.all(partial_sequence(region, config, tape, steps, order).m <= full)


@given(instances())
def test_weak_ignores_sleeps_at_x(inst):
    region, config, tape, x = inst
    a = weak_stabilize(x, region, config, tape).report
    b = weak_stabilize(x, region, config, ignore_sleep_at(tape, x)).report
    assert a.same_as(b)


@given(instances())
def test_particle_addition_identity(inst):
    region, config, tape, x = inst
    if config[x] == SLEEPING:
        config[x] = 0
    plus = config.copy()
    plus[x] += 1
    w = weak_stabilize(x, region, plus, tape).report
    e = enforced_stabilize(x, region, config, tape)
    assert np.array_equal(w.m, e.m) and np.array_equal(w.M, e.M) and w.absorbed == e.absorbed
    assert w.final[x] == 1 and e.final[x] == 0


@given(instances())
def test_excess_nonnegative_and_deterministic(inst):
    region, config, tape, x = inst
    a = excess_jumps(x, region, config, tape)
    assert a >= 0 and a == excess_jumps(x, region, config, tape)
