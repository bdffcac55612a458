"""Green's functions of simple random walk killed on leaving a region.

``G_Z(x, y)`` is the expected number of visits to y (time 0 included) by a
walk from x before it enters Z; Z always contains the exterior sink. Exact
values come from sparse linear solves of ``(I - P) g = e``; ``green_mc`` and
``xi_estimate`` are sampling counterparts.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from . import _kernels
from ._rng import as_key
from .graphs import LATTICE, TREE, make_lattice_ball, ring
from .records import EstimateRecord

log = logging.getLogger(__name__)

DIRECT_LIMIT = 30_000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class GreenTable:
    region: object
    absorbing: frozenset
    values: np.ndarray = field(repr=False)

    def __call__(self, x, y):
        return float(self.values[x, y])

    def rows(self):
        n = self.region.n
        for x in range(n):
            for y in range(n):
                yield x, y, float(self.values[x, y])


def _free_mask(region, absorbing):
    free = np.ones(region.n, dtype=bool)
    for z in absorbing:
        if not 0 <= z < region.n:
            raise ValueError(f"absorbing vertex {z} is not interior (the exterior is always absorbing)")
        free[z] = False
    return free


@lru_cache(maxsize=64)
def _system(region, absorbing):
    """``I - P`` on the free vertices, plus the free-index map."""
    free = _free_mask(region, absorbing)
    idx = np.full(region.n + 1, -1, dtype=np.int64)
    idx[np.flatnonzero(free)] = np.arange(free.sum())
    rows = np.repeat(np.arange(region.n), region.d)
    cols = region.nbr.ravel()
    keep = free[rows] & (idx[cols] >= 0)
    k = int(free.sum())
    P = sp.csr_matrix(
        (np.full(keep.sum(), 1.0 / region.d), (idx[rows[keep]], idx[cols[keep]])), shape=(k, k)
    )
    A = (sp.identity(k, format="csr") - P).tocsc()
    return A, free, idx


def _solve(A, b):
    if A.shape[0] <= DIRECT_LIMIT:
        g = spl.spsolve(A, b)
    else:
        g, info = spl.cg(A, b, rtol=1e-12, maxiter=50 * A.shape[0])
        if info != 0:
            raise RuntimeError(f"conjugate gradient did not converge (info={info})")
    g = np.atleast_1d(g)
    res = np.linalg.norm(A @ g - b)
    if res > RESIDUAL_TOL * max(np.linalg.norm(g), 1.0):
        raise RuntimeError(f"linear solve residual {res:.3e} exceeds tolerance")
    return g


def _absorbing(absorbing):
    return frozenset(int(z) for z in (absorbing or ()))


def green_column(region, y, absorbing=None):
    """Vector ``G_Z(., y)`` over all interior vertices (zero on Z)."""
    Z = _absorbing(absorbing)
    out = np.zeros(region.n)
    if y in Z:
        return out
    A, free, idx = _system(region, Z)
    b = np.zeros(A.shape[0])
    b[idx[y]] = 1.0
    out[free] = _solve(A, b)
    return out


def green_row(region, x, absorbing=None):
    """Vector ``G_Z(x, .)``; solves the transposed system."""
    Z = _absorbing(absorbing)
    out = np.zeros(region.n)
    if x in Z:
        return out
    A, free, idx = _system(region, Z)
    b = np.zeros(A.shape[0])
    b[idx[x]] = 1.0
    out[free] = _solve(A.T.tocsc(), b)
    return out


def green_exact(region, absorbing, x, y):
    """``G_Z(x, y)`` with Z = ``absorbing`` plus the exterior."""
    return float(green_column(region, y, absorbing)[x])


def green_table(region, absorbing=None):
    """Dense table of all ``G_Z(x, y)``; intended for small regions."""
    Z = _absorbing(absorbing)
    A, free, _ = _system(region, Z)
    values = np.zeros((region.n, region.n))
    if A.shape[0]:
        inv = np.linalg.inv(A.toarray())
        values[np.ix_(free, free)] = inv
    return GreenTable(region, Z, values)


def hitting_probability(region, start, target, avoid=(), strict=False):
    """Probability that a walk from ``start`` hits ``target`` before ``avoid`` or the exterior.

    ``target`` is a vertex or a collection of vertices. With ``strict`` only
    times t >= 1 count (a return probability when ``start`` is a target);
    otherwise time 0 counts.
    """
    targets = {int(target)} if np.isscalar(target) else {int(t) for t in target}
    blocked = _absorbing(avoid) - targets
    if not strict:
        if start in targets:
            return 1.0
        if start in blocked:
            return 0.0
    A, free, _ = _system(region, frozenset(targets | blocked))
    direct = np.isin(region.nbr, list(targets)).sum(axis=1) / region.d
    h = np.zeros(region.n)
    if A.shape[0]:
        h[free] = _solve(A, direct[free])
    if not strict:
        return float(h[start])
    total = 0.0
    for w in region.nbr[start]:
        if w in targets:
            total += 1.0
        elif w < region.n and free[w]:
            total += h[w]
    return total / region.d


def escape_probability(region):
    """Probability that the walk from the origin leaves the region before returning."""
    return 1.0 / green_exact(region, None, 0, 0)


def ring_green_sum(region, r1, r2):
    """Sum of ``G(x, 0)`` (exterior absorbing) over the ring ``r1 <= |x| < r2``."""
    if not 0 <= r1 <= r2 <= region.L:
        raise ValueError(f"need 0 <= r1 <= r2 <= L, got {r1}, {r2}, L={region.L}")
    verts = ring(region, r1, r2)
    if len(verts) == 0:
        return 0.0
    return float(green_column(region, 0)[verts].sum())


def _chunks(total, threads):
    threads = max(1, int(threads))
    size = max(1, -(-total // (4 * threads)))
    return [(s, min(total, s + size)) for s in range(0, total, size)]


def _parallel(fn, total, threads):
    spans = _chunks(total, threads)
    if threads <= 1:
        for s, e in spans:
            fn(s, e)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda se: fn(*se), spans))


def green_mc(region, x, y, trials, seed, threads=1):
    """Mean visits to y of walks from x, killed at the exterior."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    visits = np.empty(trials, dtype=np.int64)
    key = as_key(seed)

    def work(s, e):
        _kernels.region_walks(region.nbr, int(x), int(y), key, s, visits[s:e])

    _parallel(work, trials, threads)
    return EstimateRecord.from_samples("green_mc", visits, seed, family=region.family, d=region.d, L=region.L, x=x, y=y)


@dataclass(frozen=True)
class XiEstimate:
    record: EstimateRecord
    truncation_fraction: float
    horizon_radius: float


def xi_estimate(d, r1, r2, trials, horizon_radius=None, seed=0, family=LATTICE, threads=1):
    """Expected number of steps the walk from the origin spends in ``r1 <= |X| < r2``.

    Runs on the infinite lattice Z^d (``d`` = dimension) or the infinite
    d-regular tree. Walks are cut on leaving the horizon ball (default
    ``4 * r2``). ``truncation_fraction`` is the share of walks that came back
    to the ring after reaching half the horizon; a small value means the cut
    loses little.
    """
    if family == LATTICE and d <= 2:
        raise ValueError("the lattice walk is recurrent for d <= 2; need d >= 3")
    if family == TREE and d < 3:
        raise ValueError("tree degree must be >= 3")
    if family not in (LATTICE, TREE):
        raise ValueError(f"unknown family {family!r}")
    if not 0 <= r1 <= r2:
        raise ValueError("need 0 <= r1 <= r2")
    horizon = 4.0 * r2 if horizon_radius is None else float(horizon_radius)
    if r2 > 0 and horizon <= r2:
        raise ValueError("horizon radius must exceed r2")
    if r1 == r2:
        rec = EstimateRecord("xi", 0.0, 0.0, trials, seed, {"d": d, "r1": r1, "r2": r2})
        return XiEstimate(rec, 0.0, horizon)
    times = np.empty(trials, dtype=np.int64)
    late = np.empty(trials, dtype=np.int64)
    key = as_key(seed)
    kernel = _kernels.lattice_ring_walks if family == LATTICE else _kernels.tree_ring_walks

    def work(s, e):
        kernel(int(d), float(r1), float(r2), float(horizon), key, s, times[s:e], late[s:e])

    _parallel(work, trials, threads)
    rec = EstimateRecord.from_samples("xi", times, seed, family=family, d=d, r1=r1, r2=r2, horizon=horizon)
    return XiEstimate(rec, float(late.mean()), horizon)


@dataclass(frozen=True)
class OriginGreen:
    value: float
    raw: tuple
    extrapolated: tuple
    converged: bool


@lru_cache(maxsize=8)
def lattice_green_origin(d=3, tol=1e-3, start_L=10, max_L=80):
    """``G(0, 0)`` of the infinite lattice Z^d, d >= 3, from growing balls.

    The finite-ball values approach the limit like ``c / L``, so each doubling
    is combined with the previous one as ``2 G(2L) - G(L)``. Doubling stops
    when two successive combined values differ by less than ``tol``.
    """
    if d < 3:
        raise ValueError("G(0, 0) is infinite for d <= 2")
    raw = []
    ext = []
    L = start_L
    while L <= max_L:
        raw.append((L, green_exact(make_lattice_ball(d, L), None, 0, 0)))
        if len(raw) >= 2:
            ext.append(2 * raw[-1][1] - raw[-2][1])
            log.info("G(0,0) on Z^%d: L=%d raw=%.6f extrapolated=%.6f", d, L, raw[-1][1], ext[-1])
            if len(ext) >= 2 and abs(ext[-1] - ext[-2]) < tol:
                return OriginGreen(ext[-1], tuple(raw), tuple(ext), True)
        L *= 2
    log.warning("G(0,0) on Z^%d did not converge to %.1e by L=%d", d, tol, max_L)
    return OriginGreen(ext[-1] if ext else raw[-1][1], tuple(raw), tuple(ext), False)
