import numpy as np
import pytest
from hypothesis import given, strategies as st

from arw_lab._rng import MASK64, as_key, child_seed, derive, philox4x64, uniform

u64 = st.integers(min_value=0, max_value=MASK64)


@given(u64, u64, st.integers(min_value=1, max_value=MASK64), u64)
def test_philox_matches_numpy(k0, k1, c0, c1):
    # numpy increments the counter before producing a block
    bg = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64), counter=np.array([c0 - 1, c1, 0, 0], dtype=np.uint64))
    expected = bg.random_raw(4)
    got = philox4x64(np.uint64(c0), np.uint64(c1), np.uint64(0), np.uint64(0), np.uint64(k0), np.uint64(k1))
    assert [int(w) for w in got] == [int(w) for w in expected]


@given(u64, st.integers(0, 4), u64, u64)
def test_uniform_in_unit_interval(key, stream, a, b):
    u = uniform(np.uint64(key), np.uint64(stream), np.uint64(a), np.uint64(b))
    assert 0.0 <= u < 1.0


def test_uniform_is_pure():
    args = (np.uint64(11), np.uint64(0), np.uint64(3), np.uint64(9))
    assert uniform(*args) == uniform(*args)


def test_streams_differ():
    a = [uniform(np.uint64(5), np.uint64(s), np.uint64(1), np.uint64(1)) for s in range(5)]
    assert len(set(a)) == 5


def test_uniform_moments():
    u = np.array([uniform(np.uint64(2), np.uint64(0), np.uint64(i), np.uint64(1)) for i in range(20_000)])
    assert abs(u.mean() - 0.5) < 3 * np.sqrt(1 / 12 / len(u))
    assert abs(u.var() - 1 / 12) < 0.005


def test_child_seeds_distinct_and_reproducible():
    seeds = [child_seed(42, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [child_seed(42, i) for i in range(1000)]
    assert child_seed(42, 0) == int(derive(np.uint64(42), np.uint64(3), np.uint64(0), np.uint64(0)))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_as_key_rejects_out_of_range(seed):
    with pytest.raises(ValueError):
        as_key(seed)
