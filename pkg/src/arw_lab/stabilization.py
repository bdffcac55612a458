"""Configurations, odometers and the four stabilisation procedures.

A configuration is an int64 array over the interior vertices of a region:
``0`` empty, ``SLEEPING`` (-1) one sleeping particle, ``n >= 1`` that many
active particles. Compare configurations with :func:`config_leq`, which uses
the order 0 < sleeping < 1 < 2 < ..., not the raw encoding.

All procedures read instructions from an :class:`~arw_lab.tape.InstructionTape`
and never mutate the configuration they are given.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._rng import as_key
from .tape import ignore_sleep_at

EMPTY = 0
SLEEPING = _kernels.SLEEPING
DEFAULT_BUDGET = 10**9


class BudgetExceeded(RuntimeError):
    """A stabilisation used more instructions than its budget allows."""


@dataclass
class OdometerReport:
    """Instruction odometer ``m``, jump odometer ``M``, final state and absorbed count.

    ``h`` (the next-instruction counters) coincides with ``m`` for every run
    that starts from fresh counters, which is the only way this module starts
    one; it is exposed under both names.
    """

    m: np.ndarray
    M: np.ndarray
    final: np.ndarray
    absorbed: int = 0

    @property
    def h(self):
        return self.m

    @classmethod
    def empty(cls, config):
        n = len(config)
        return cls(np.zeros(n, np.int64), np.zeros(n, np.int64), np.array(config, dtype=np.int64))

    def same_as(self, other):
        return (
            np.array_equal(self.m, other.m)
            and np.array_equal(self.M, other.M)
            and np.array_equal(self.final, other.final)
            and self.absorbed == other.absorbed
        )


@dataclass
class WeakStabOutcome:
    report: OdometerReport
    x: int


@dataclass
class ViaWeakOutcome:
    T: int
    rounds: list
    final: np.ndarray
    report: OdometerReport = field(repr=False)
    first_jumps: np.ndarray = field(repr=False, default=None)


# -- configurations ---------------------------------------------------------


def as_config(region, config):
    eta = np.array(config, dtype=np.int64)
    if eta.shape != (region.n,):
        raise ValueError(f"config has shape {eta.shape}, region has {region.n} vertices")
    if (eta < SLEEPING).any():
        raise ValueError("config states must be >= -1 (sleeping)")
    return eta


def order_key(config):
    """Map states to reals respecting 0 < sleeping < 1 < 2 < ..."""
    eta = np.asarray(config)
    return np.where(eta == SLEEPING, 0.5, eta.astype(float))


def config_leq(a, b):
    """Pointwise ``a <= b`` in the order 0 < sleeping < 1 < 2 < ..."""
    return bool(np.all(order_key(a) <= order_key(b)))


def particle_count(config):
    eta = np.asarray(config)
    return int(np.where(eta == SLEEPING, 1, eta).sum())


def is_stable(config):
    return bool(np.all(np.asarray(config) <= 0))


def is_weakly_stable(config, x):
    eta = np.asarray(config)
    others = np.delete(eta, x)
    return bool(eta[x] <= 1 and np.all(others <= 0))


def sample_poisson_config(region, mu, seed):
    """Independent Poisson(mu) active particles on every interior vertex."""
    if not mu >= 0:
        raise ValueError(f"density must be >= 0, got {mu}")
    out = np.empty(region.n, dtype=np.int64)
    _kernels.poisson_config(as_key(seed), float(mu), region.n, out)
    return out


# -- single toppling --------------------------------------------------------


def _check(region, tape):
    if tape.d != region.d:
        raise ValueError(f"tape degree {tape.d} does not match region degree {region.d}")


def topple(region, config, report, x, tape):
    """Apply the next instruction at x in place; returns ``(config, report)``.

    Legality is not checked: toppling a stable vertex consumes an instruction
    and changes nothing except possibly the counters. ``report.m`` serves as
    the next-instruction counter.
    """
    _check(region, tape)
    if not 0 <= x < region.n:
        raise IndexError(f"cannot topple {x}: only interior vertices carry instructions")
    if not (isinstance(config, np.ndarray) and config.dtype == np.int64):
        config = as_config(region, config)
    # report.m doubles as the next-instruction counter; the kernel's own
    # increment goes to a scratch array
    w = _kernels.topple(
        region.nbr, config, report.m, np.zeros(region.n, np.int64), report.M,
        tape.key, tape.p_sleep, tape.erased_mask(region.n), int(x),
    )
    if w == region.sink:
        report.absorbed += 1
    report.final = config
    return config, report


# -- stabilisation ----------------------------------------------------------


def _run(region, config, tape, x_weak=-1, order_seed=None, stop_after=-1, budget=DEFAULT_BUDGET):
    _check(region, tape)
    eta = as_config(region, config)
    rep = OdometerReport.empty(eta)
    h = np.zeros(region.n, np.int64)
    mask = tape.erased_mask(region.n)
    if order_seed is None and stop_after < 0:
        status, absorbed, _ = _kernels.relax_fifo(
            region.nbr, eta, h, rep.m, rep.M, tape.key, tape.p_sleep, mask, x_weak, budget
        )
    else:
        status, absorbed, _ = _kernels.relax_random(
            region.nbr, eta, h, rep.m, rep.M, tape.key, tape.p_sleep, mask, x_weak, budget,
            as_key(order_seed or 0), stop_after,
        )
    if status == _kernels.OVER_BUDGET:
        raise BudgetExceeded(f"stabilisation of {region} exceeded {budget} instructions")
    rep.final = eta
    rep.absorbed = int(absorbed)
    return rep


def stabilize(region, config, tape, *, order_seed=None, budget=DEFAULT_BUDGET):
    """Topple until every vertex is empty or sleeping.

    The default order is first-in-first-out; ``order_seed`` selects a
    reproducible random order instead. The report does not depend on the
    order.
    """
    return _run(region, config, tape, order_seed=order_seed, budget=budget)


def weak_stabilize(x, region, config, tape, *, order_seed=None, budget=DEFAULT_BUDGET):
    """Topple until x holds at most one particle and every other vertex is stable.

    x is toppled only while it carries two or more active particles.
    """
    _check_vertex(region, x)
    return WeakStabOutcome(_run(region, config, tape, x_weak=int(x), order_seed=order_seed, budget=budget), int(x))


def partial_weak_sequence(x, region, config, tape, steps, order_seed):
    """Report after ``steps`` WS-legal topplings in a random order (or fewer if none remain)."""
    _check_vertex(region, x)
    return _run(region, config, tape, x_weak=int(x), order_seed=order_seed, stop_after=int(steps))


def partial_sequence(region, config, tape, steps, order_seed):
    """Report after ``steps`` legal topplings in a random order."""
    return _run(region, config, tape, order_seed=order_seed, stop_after=int(steps))


def stabilize_via_weak(x, region, config, tape, *, budget=DEFAULT_BUDGET):
    """Weakly stabilise (x, region), then alternate one instruction at x with weak stabilisation.

    ``T`` counts the rounds until the configuration is stable; ``rounds[i-1]``
    is the cumulative odometer after round i.
    """
    _check(region, tape)
    _check_vertex(region, x)
    x = int(x)
    eta = as_config(region, config)
    n = region.n
    h = np.zeros(n, np.int64)
    m = np.zeros(n, np.int64)
    M = np.zeros(n, np.int64)
    mask = tape.erased_mask(n)
    args = (tape.key, tape.p_sleep, mask)
    used = 0

    def weak():
        nonlocal used
        status, got, more = _kernels.relax_fifo(region.nbr, eta, h, m, M, *args, x, budget - used)
        used += more
        if status == _kernels.OVER_BUDGET:
            raise BudgetExceeded(f"stabilisation via weak stabilisation exceeded {budget} instructions")
        return int(got)

    absorbed = weak()
    first_jumps = M.copy()
    rounds = [m.copy()]
    while eta[x] >= 1:
        if used >= budget:
            raise BudgetExceeded(f"stabilisation via weak stabilisation exceeded {budget} instructions")
        w = _kernels.topple(region.nbr, eta, h, m, M, *args, x)
        used += 1
        if w == region.sink:
            absorbed += 1
        if w >= 0:
            absorbed += weak()
        rounds.append(m.copy())
    report = OdometerReport(m, M, eta, absorbed)
    return ViaWeakOutcome(len(rounds), rounds, eta, report, first_jumps)


def enforced_stabilize(x, region, config, tape, *, budget=DEFAULT_BUDGET):
    """Stabilise with every sleep instruction at x ignored.

    If x starts without a sleeping particle it ends empty: a lone particle
    there can only jump or idle.
    """
    _check_vertex(region, x)
    return _run(region, config, ignore_sleep_at(tape, x), budget=budget)


def excess_jumps(x, region, config, tape, *, budget=DEFAULT_BUDGET):
    """Jumps at x used by enforced stabilisation but not by the weak stabilisation of (x, region)."""
    enforced = enforced_stabilize(x, region, config, tape, budget=budget)
    weak = weak_stabilize(x, region, config, tape, budget=budget)
    return int(enforced.M[x] - weak.report.M[x])


def _check_vertex(region, x):
    if not 0 <= x < region.n:
        raise IndexError(f"{x} is not an interior vertex of {region}")
