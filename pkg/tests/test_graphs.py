import numpy as np
import pytest
from hypothesis import given, strategies as st

from arw_lab.graphs import LATTICE, TREE, make_lattice_ball, make_region, make_tree_ball, neighbors, ring


def lattice_ball_size(d, r):
    # points of Z^d with l1 norm <= r
    from math import comb

    return sum(2**k * comb(d, k) * comb(r, k) for k in range(d + 1))


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("L", [1, 2, 3, 5])
def test_lattice_ball_size(d, L):
    assert make_lattice_ball(d, L).n == lattice_ball_size(d, L - 1)


@pytest.mark.parametrize("d,L,n", [(3, 1, 1), (3, 2, 4), (3, 4, 22), (4, 3, 17)])
def test_tree_ball_size(d, L, n):
    assert make_tree_ball(d, L).n == n


def test_single_vertex_region():
    r = make_lattice_ball(2, 1)
    assert r.n == 1
    assert list(r.nbr[0]) == [r.sink] * 4


regions = st.one_of(
    st.tuples(st.just(LATTICE), st.integers(1, 3), st.integers(1, 5)),
    st.tuples(st.just(TREE), st.integers(3, 5), st.integers(1, 4)),
)


@given(regions)
def test_adjacency_is_symmetric_and_regular(spec):
    r = make_region(*spec)
    assert r.nbr.shape == (r.n, r.d)
    for v in range(r.n):
        for w in r.nbr[v]:
            if w != r.sink:
                assert v in r.nbr[w]
                assert abs(int(r.dist[v]) - int(r.dist[w])) == 1


@given(regions)
def test_smaller_ball_is_index_prefix(spec):
    family, d, L = spec
    small, big = make_region(family, d, L), make_region(family, d, L + 1)
    assert big.labels[: small.n] == small.labels
    inside = big.nbr[: small.n]
    expect = np.where(inside < small.n, inside, small.sink)
    assert np.array_equal(expect, small.nbr)


@given(regions)
def test_distances_within_radius(spec):
    r = make_region(*spec)
    assert r.dist[0] == 0
    assert r.dist.max() <= r.L - 1
    assert np.all(np.diff(r.dist) >= 0)


def test_labels_roundtrip():
    r = make_lattice_ball(2, 3)
    assert r.label(0) == (0, 0)
    for v in range(r.n):
        assert r.index(r.label(v)) == v
    assert sum(abs(c) for c in r.label(r.n - 1)) == 2


def test_tree_root_and_parent_order():
    t = make_tree_ball(3, 3)
    assert t.labels[0] == ()
    # non-root vertices list their parent first
    for v in range(1, t.n):
        assert t.labels[t.nbr[v][0]] == t.labels[v][:-1]


def test_neighbors_and_sink():
    r = make_lattice_ball(1, 2)
    assert sorted(neighbors(r, 0)) == [1, 2]
    with pytest.raises(IndexError):
        neighbors(r, r.sink)


def test_ring_partitions_ball():
    r = make_lattice_ball(3, 5)
    inner, outer = ring(r, 0, 3), ring(r, 3, 5)
    assert len(inner) + len(outer) == r.n
    assert len(ring(r, 2, 2)) == 0


@pytest.mark.parametrize("args", [("lattice", 0, 2), ("lattice", 2, 0), ("tree", 2, 3), ("torus", 2, 2)])
def test_invalid_regions(args):
    with pytest.raises(ValueError):
        make_region(*args)


def test_region_equality_by_key():
    assert make_region(TREE, 3, 3) == make_region(TREE, 3, 3)
    assert len({make_region(LATTICE, 2, 2), make_region(LATTICE, 2, 2)}) == 1
