"""Finite balls of Z^d and of the d-regular tree with an absorbing sink.

Vertices are indexed densely in breadth-first order from the origin, so the
origin is always index 0 and the ball of radius L is an index prefix of the
ball of radius L' > L. The exterior is collapsed into one sink whose index is
``region.n``; it has no outgoing neighbours.

Neighbour order is part of the contract because instruction tapes encode
jumps as neighbour indices:

* lattice: +e1, -e1, +e2, -e2, ..., +ed, -ed
* tree: parent first, then children in canonical order (the root has d
  children and no parent)
"""
from collections import deque
from dataclasses import dataclass, field

import numpy as np

LATTICE = "lattice"
TREE = "tree"
FAMILIES = (LATTICE, TREE)


@dataclass(frozen=True, eq=False)
class FiniteRegion:
    """Ball ``{v : dist(0, v) < L}`` of a vertex-transitive graph.

    ``nbr[v, i]`` is the i-th neighbour of interior vertex v, or ``sink`` when
    that neighbour lies outside the ball. ``labels[v]`` is the coordinate tuple
    (lattice) or the child-index path from the root (tree). ``d`` is the
    vertex degree; ``ndim`` is the lattice dimension (None for trees).
    """

    family: str
    d: int
    L: int
    nbr: np.ndarray = field(repr=False)
    dist: np.ndarray = field(repr=False)
    labels: tuple = field(repr=False)
    ndim: int = None

    @property
    def n(self):
        return len(self.labels)

    @property
    def sink(self):
        return self.n

    @property
    def center(self):
        return 0

    @property
    def vertices(self):
        return range(self.n)

    @property
    def key(self):
        return (self.family, self.d, self.L)

    def index(self, label):
        """Index of the vertex with coordinates / tree path ``label``."""
        try:
            return self._index[tuple(label)]
        except KeyError:
            raise KeyError(f"{label!r} is not an interior vertex of {self}") from None

    def label(self, v):
        if v == self.sink:
            return "sink"
        return self.labels[v]

    @property
    def _index(self):
        cached = self.__dict__.get("_index_cache")
        if cached is None:
            cached = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_index_cache", cached)
        return cached

    def __eq__(self, other):
        return isinstance(other, FiniteRegion) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"FiniteRegion({self.family}, d={self.d}, L={self.L}, n={self.n})"


def _lattice_steps(d):
    steps = []
    for axis in range(d):
        for sign in (1, -1):
            e = [0] * d
            e[axis] = sign
            steps.append(tuple(e))
    return steps


def make_lattice_ball(d, L):
    """Graph-distance ball of radius L (strict ``|v|_1 < L``) in Z^d."""
    if int(d) != d or int(L) != L or d < 1 or L < 1:
        raise ValueError(f"lattice ball needs integers d >= 1 and L >= 1, got d={d}, L={L}")
    d, L = int(d), int(L)
    steps = _lattice_steps(d)
    origin = (0,) * d
    index = {origin: 0}
    labels = [origin]
    dist = [0]
    edges = []
    queue = deque([origin])
    while queue:
        v = queue.popleft()
        row = []
        for s in steps:
            w = tuple(a + b for a, b in zip(v, s))
            if w not in index:
                r = sum(abs(c) for c in w)
                if r >= L:
                    row.append(-1)
                    continue
                index[w] = len(labels)
                labels.append(w)
                dist.append(r)
                queue.append(w)
            row.append(index[w])
        edges.append(row)
    n = len(labels)
    nbr = np.array(edges, dtype=np.int64).reshape(n, 2 * d)
    nbr[nbr < 0] = n
    return _freeze(LATTICE, 2 * d, L, nbr, dist, labels, ndim=d)


def make_tree_ball(d, L):
    """Ball of radius L in the infinite d-regular tree, rooted at the origin."""
    if int(d) != d or int(L) != L:
        raise ValueError("tree ball needs integer d and L")
    if d < 3:
        raise ValueError(f"regular tree needs degree d >= 3, got {d}")
    if L < 1:
        raise ValueError(f"radius must be >= 1, got {L}")
    d, L = int(d), int(L)
    labels = [()]
    dist = [0]
    frontier = [()]
    for depth in range(1, L):
        nxt = []
        for v in frontier:
            width = d if not v else d - 1
            nxt.extend(v + (c,) for c in range(width))
        labels.extend(nxt)
        dist.extend([depth] * len(nxt))
        frontier = nxt
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    nbr = np.full((n, d), n, dtype=np.int64)
    for i, v in enumerate(labels):
        cols = []
        if v:
            cols.append(index[v[:-1]])
        width = d if not v else d - 1
        cols.extend(index.get(v + (c,), n) for c in range(width))
        nbr[i] = cols
    return _freeze(TREE, d, L, nbr, dist, labels)


def _freeze(family, degree, L, nbr, dist, labels, ndim=None):
    nbr.setflags(write=False)
    dist = np.asarray(dist, dtype=np.int64)
    dist.setflags(write=False)
    return FiniteRegion(family, degree, L, nbr, dist, tuple(labels), ndim)


def make_region(family, d, L):
    """Build a ball by family name. For lattices ``d`` is the dimension."""
    if family == LATTICE:
        return make_lattice_ball(d, L)
    if family == TREE:
        return make_tree_ball(d, L)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def neighbors(region, v):
    """Ordered neighbour indices of interior vertex v; exterior targets are ``region.sink``."""
    if not 0 <= v < region.n:
        raise IndexError(f"vertex {v} is not interior to {region} (the sink has no neighbours)")
    return [int(w) for w in region.nbr[v]]


def ring(region, r1, r2):
    """Interior vertices with ``r1 <= dist(0, v) < r2``, as a sorted index array."""
    if r1 < 0 or r2 < r1:
        raise ValueError(f"need 0 <= r1 <= r2, got r1={r1}, r2={r2}")
    return np.flatnonzero((region.dist >= r1) & (region.dist < r2))
