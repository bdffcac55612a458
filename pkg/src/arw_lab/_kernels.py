"""Compiled inner loops. Public wrappers live in tape, stabilization, estimators.

Encodings shared by every kernel:

* configuration: int64 per vertex, 0 empty, SLEEPING (-1) one S-particle,
  n >= 1 that many A-particles;
* instruction: jump index 0..d-1, SLEEP (-1) or NEUTRAL (-2);
* neighbour table ``nbr`` of shape (n, d) with the sink encoded as n.
"""
import numpy as np
from numba import njit, uint64

from ._rng import STREAM_CONFIG, STREAM_ORDER, STREAM_TAPE, STREAM_TRIAL, STREAM_WALK, derive, uniform

SLEEPING = -1
SLEEP = -1
NEUTRAL = -2

DONE = 0
STOPPED = 1
OVER_BUDGET = 2

# columns of the per-trial statistics table filled by trial_batch
S_STATUS = 0
S_PARTICLES = 1
S_ABSORBED = 2
S_SLEEPING = 3
S_X_SLEEPING = 4
S_X_M = 5
S_X_JUMPS = 6
S_ORIGIN_M = 7
S_ORIGIN_JUMPS = 8
S_T = 9
S_A = 10
S_WEAK_X_M = 11
N_STATS = 12

MODE_VIA_WEAK = 1
MODE_ENFORCED = 2

_TAPE = uint64(STREAM_TAPE)
_CONFIG = uint64(STREAM_CONFIG)
_ORDER = uint64(STREAM_ORDER)
_TRIAL = uint64(STREAM_TRIAL)
_WALK = uint64(STREAM_WALK)
_ZERO = uint64(0)


@njit(cache=True, inline="always")
def decode(u, p_sleep, d):
    """Map a uniform draw to an instruction: [0, p) sleep, then d equal jump cells."""
    if u < p_sleep:
        return SLEEP
    i = int((u - p_sleep) / ((1.0 - p_sleep) / d))
    if i >= d:
        i = d - 1
    return i


@njit(cache=True)
def instruction(seed, p_sleep, d, x, j, erased):
    ins = decode(uniform(seed, _TAPE, uint64(x), uint64(j)), p_sleep, d)
    if erased and ins == SLEEP:
        return NEUTRAL
    return ins


@njit(cache=True)
def poisson_inverse(u, mu):
    if mu == 0.0:
        return 0
    p = np.exp(-mu)
    cdf = p
    k = 0
    while u >= cdf:
        k += 1
        p *= mu / k
        if p == 0.0:
            break
        cdf += p
    return k


@njit(cache=True)
def poisson_config(seed, mu, n, out):
    for v in range(n):
        out[v] = poisson_inverse(uniform(seed, _CONFIG, uint64(v), _ZERO), mu)


@njit(cache=True, inline="always")
def _unstable(eta, v, x_weak):
    if v == x_weak:
        return eta[v] >= 2
    return eta[v] >= 1


@njit(cache=True)
def topple(nbr, eta, h, m, M, seed, p_sleep, erased, v):
    """Use the next instruction at v. Returns the receiving vertex of a jump, else -1.

    The sink (index n) is returned when a particle is absorbed.
    """
    d = nbr.shape[1]
    j = h[v] + 1
    ins = instruction(seed, p_sleep, d, v, j, erased[v])
    h[v] = j
    m[v] += 1
    if ins >= 0:
        M[v] += 1
        if eta[v] >= 1:
            eta[v] -= 1
            w = nbr[v, ins]
            if w < eta.shape[0]:
                if eta[w] == SLEEPING:
                    eta[w] = 2
                else:
                    eta[w] += 1
            return w
    elif ins == SLEEP:
        if eta[v] == 1:
            eta[v] = SLEEPING
    return -1


@njit(cache=True, nogil=True)
def relax_fifo(nbr, eta, h, m, M, seed, p_sleep, erased, x_weak, budget):
    """Topple unstable vertices in first-in-first-out order until none remain.

    ``x_weak >= 0`` switches to weak stabilisation of (x_weak, region): that
    vertex is unstable only with two or more active particles. Returns
    ``(status, absorbed, instructions_used)``.
    """
    n = eta.shape[0]
    queue = np.empty(n, dtype=np.int64)
    queued = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 0
    for v in range(n):
        if _unstable(eta, v, x_weak):
            queue[(head + size) % n] = v
            queued[v] = True
            size += 1
    absorbed = 0
    used = 0
    while size > 0:
        v = queue[head]
        head = (head + 1) % n
        size -= 1
        queued[v] = False
        while _unstable(eta, v, x_weak):
            if used >= budget:
                return OVER_BUDGET, absorbed, used
            w = topple(nbr, eta, h, m, M, seed, p_sleep, erased, v)
            used += 1
            if w == n:
                absorbed += 1
            elif w >= 0 and not queued[w] and _unstable(eta, w, x_weak):
                queue[(head + size) % n] = w
                queued[w] = True
                size += 1
    return DONE, absorbed, used


@njit(cache=True, inline="always")
def _refresh(eta, v, x_weak, members, pos, count):
    if _unstable(eta, v, x_weak):
        if pos[v] < 0:
            members[count] = v
            pos[v] = count
            count += 1
    elif pos[v] >= 0:
        k = pos[v]
        last = members[count - 1]
        members[k] = last
        pos[last] = k
        pos[v] = -1
        count -= 1
    return count


@njit(cache=True, nogil=True)
def relax_random(nbr, eta, h, m, M, seed, p_sleep, erased, x_weak, budget, order_seed, stop_after):
    """Topple one uniformly chosen unstable vertex at a time.

    Choices are driven by ``order_seed`` so every order is reproducible. With
    ``stop_after >= 0`` the run halts after that many topplings (status
    STOPPED) and leaves a partial legal sequence.
    """
    n = eta.shape[0]
    members = np.empty(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    count = 0
    for v in range(n):
        count = _refresh(eta, v, x_weak, members, pos, count)
    absorbed = 0
    used = 0
    step = 0
    while count > 0:
        if stop_after >= 0 and used >= stop_after:
            return STOPPED, absorbed, used
        if used >= budget:
            return OVER_BUDGET, absorbed, used
        k = int(uniform(order_seed, _ORDER, uint64(step), _ZERO) * count)
        if k >= count:
            k = count - 1
        step += 1
        v = members[k]
        w = topple(nbr, eta, h, m, M, seed, p_sleep, erased, v)
        used += 1
        count = _refresh(eta, v, x_weak, members, pos, count)
        if w == n:
            absorbed += 1
        elif w >= 0:
            count = _refresh(eta, w, x_weak, members, pos, count)
    return DONE, absorbed, used


@njit(cache=True, nogil=True)
def via_weak(nbr, eta, h, m, M, seed, p_sleep, erased, x, budget, m_first, M_first):
    """Stabilise by alternating weak stabilisations of (x, region) with one use of x.

    ``m_first`` and ``M_first`` receive the instruction and jump odometers
    after the first weak stabilisation.
    Returns ``(status, absorbed, T, instructions_used)``.
    """
    n = eta.shape[0]
    status, absorbed, used = relax_fifo(nbr, eta, h, m, M, seed, p_sleep, erased, x, budget)
    m_first[:] = m
    M_first[:] = M
    T = 1
    if status != DONE:
        return status, absorbed, T, used
    while eta[x] >= 1:
        if used >= budget:
            return OVER_BUDGET, absorbed, T, used
        T += 1
        w = topple(nbr, eta, h, m, M, seed, p_sleep, erased, x)
        used += 1
        if w == n:
            absorbed += 1
        if w >= 0:
            status, extra, more = relax_fifo(nbr, eta, h, m, M, seed, p_sleep, erased, x, budget - used)
            absorbed += extra
            used += more
            if status != DONE:
                return status, absorbed, T, used
    return DONE, absorbed, T, used


@njit(cache=True, nogil=True)
def trial_batch(nbr, mu, p_sleep, master, start, x, mode, budget, stats, sleep_map):
    """Run trials ``start .. start + len(stats)`` and record per-trial statistics.

    Each trial draws its own seed from ``master``; the Poisson configuration
    and the instruction tape are both keyed by that seed on disjoint streams.
    ``sleep_map`` (shape (trials, n) or (0, n)) receives the final sleeping
    indicator of every vertex.
    """
    n = nbr.shape[0]
    eta = np.empty(n, dtype=np.int64)
    eta0 = np.empty(n, dtype=np.int64)
    h = np.empty(n, dtype=np.int64)
    m = np.empty(n, dtype=np.int64)
    M = np.empty(n, dtype=np.int64)
    m1 = np.empty(n, dtype=np.int64)
    M1 = np.empty(n, dtype=np.int64)
    no_erase = np.zeros(n, dtype=np.uint8)
    erase_x = np.zeros(n, dtype=np.uint8)
    erase_x[x] = 1
    keep_map = sleep_map.shape[0] > 0
    for t in range(stats.shape[0]):
        seed = derive(master, _TRIAL, uint64(start + t), _ZERO)
        poisson_config(seed, mu, n, eta0)
        eta[:] = eta0
        h[:] = 0
        m[:] = 0
        M[:] = 0
        row = stats[t]
        row[:] = 0
        row[S_PARTICLES] = eta0.sum()
        if mode & MODE_VIA_WEAK:
            status, absorbed, T, used = via_weak(nbr, eta, h, m, M, seed, p_sleep, no_erase, x, budget, m1, M1)
            row[S_T] = T
            row[S_WEAK_X_M] = m1[x]
        else:
            status, absorbed, used = relax_fifo(nbr, eta, h, m, M, seed, p_sleep, no_erase, -1, budget)
        if status != DONE:
            row[S_STATUS] = status
            return t
        row[S_ABSORBED] = absorbed
        sleeping = 0
        for v in range(n):
            if eta[v] == SLEEPING:
                sleeping += 1
        row[S_SLEEPING] = sleeping
        row[S_X_SLEEPING] = 1 if eta[x] == SLEEPING else 0
        row[S_X_M] = m[x]
        row[S_X_JUMPS] = M[x]
        row[S_ORIGIN_M] = m[0]
        row[S_ORIGIN_JUMPS] = M[0]
        if keep_map:
            for v in range(n):
                sleep_map[t, v] = 1 if eta[v] == SLEEPING else 0
        if mode & MODE_ENFORCED:
            if mode & MODE_VIA_WEAK:
                weak_jumps = M1[x]
            else:
                eta[:] = eta0
                h[:] = 0
                m1[:] = 0
                M1[:] = 0
                status, _, _ = relax_fifo(nbr, eta, h, m1, M1, seed, p_sleep, no_erase, x, budget)
                if status != DONE:
                    row[S_STATUS] = status
                    return t
                weak_jumps = M1[x]
            eta[:] = eta0
            h[:] = 0
            m1[:] = 0
            M1[:] = 0
            status, _, _ = relax_fifo(nbr, eta, h, m1, M1, seed, p_sleep, erase_x, -1, budget)
            if status != DONE:
                row[S_STATUS] = status
                return t
            row[S_A] = M1[x] - weak_jumps
    return stats.shape[0]


@njit(cache=True, nogil=True)
def region_walks(nbr, x, y, seed, start, visits):
    """Simple random walks from x on a region, counting visits to y before the sink."""
    n = nbr.shape[0]
    d = nbr.shape[1]
    for t in range(visits.shape[0]):
        v = x
        count = 0
        step = 0
        while v < n:
            if v == y:
                count += 1
            u = uniform(seed, _WALK, uint64(start + t), uint64(step))
            step += 1
            k = int(u * d)
            if k >= d:
                k = d - 1
            v = nbr[v, k]
        visits[t] = count


@njit(cache=True, nogil=True)
def lattice_ring_walks(dim, r1, r2, horizon, seed, start, times, late):
    """Walks from the origin of Z^dim, counting steps with ``r1 <= |X|_1 < r2``.

    Each walk stops on leaving the horizon ball. ``late[t]`` flags walks that
    re-entered the ring after reaching distance ``horizon / 2``.
    """
    pos = np.zeros(dim, dtype=np.int64)
    for t in range(times.shape[0]):
        pos[:] = 0
        r = 0
        count = 0
        far = False
        flag = 0
        step = 0
        while r < horizon:
            if r >= r1 and r < r2:
                count += 1
                if far:
                    flag = 1
            if 2 * r >= horizon:
                far = True
            u = uniform(seed, _WALK, uint64(start + t), uint64(step))
            step += 1
            k = int(u * 2 * dim)
            if k >= 2 * dim:
                k = 2 * dim - 1
            axis = k // 2
            old = abs(pos[axis])
            if k % 2 == 0:
                pos[axis] += 1
            else:
                pos[axis] -= 1
            r += abs(pos[axis]) - old
        times[t] = count
        late[t] = flag


@njit(cache=True, nogil=True)
def tree_ring_walks(d, r1, r2, horizon, seed, start, times, late):
    """Same as lattice_ring_walks on the d-regular tree, tracking depth only."""
    for t in range(times.shape[0]):
        r = 0
        count = 0
        far = False
        flag = 0
        step = 0
        while r < horizon:
            if r >= r1 and r < r2:
                count += 1
                if far:
                    flag = 1
            if 2 * r >= horizon:
                far = True
            u = uniform(seed, _WALK, uint64(start + t), uint64(step))
            step += 1
            if r == 0 or u >= 1.0 / d:
                r += 1
            else:
                r -= 1
        times[t] = count
        late[t] = flag
