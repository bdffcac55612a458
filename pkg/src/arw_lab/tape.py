"""Replayable instruction arrays for the site-wise (Diaconis-Fulton) construction.

An :class:`InstructionTape` never stores instructions. The j-th instruction
at vertex x is recomputed on demand from ``(master_seed, x, j)`` with a
counter-based generator, so any stabilisation strategy, in any order, reads
the same array. Instructions are small integers:

* ``0 .. d-1`` jump to that neighbour (see ``graphs.neighbors`` for order)
* ``SLEEP``   fall asleep if alone
* ``NEUTRAL`` do nothing (only produced by erasing sleeps)
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from ._rng import STREAM_TAPE, as_key, uniform

SLEEP = _kernels.SLEEP
NEUTRAL = _kernels.NEUTRAL


@dataclass(frozen=True)
class InstructionTape:
    master_seed: int
    lam: float
    d: int
    erased: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        as_key(self.master_seed)
        if not self.lam > 0:
            raise ValueError(f"sleep rate must be positive, got {self.lam}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"degree must be a positive integer, got {self.d}")
        object.__setattr__(self, "erased", frozenset(int(v) for v in self.erased))

    @property
    def p_sleep(self):
        return self.lam / (1.0 + self.lam)

    @property
    def key(self):
        return as_key(self.master_seed)

    def __getitem__(self, xj):
        x, j = xj
        return sample_instruction(self, x, j)

    def erased_mask(self, n):
        mask = np.zeros(n, dtype=np.uint8)
        for v in self.erased:
            if v < n:
                mask[v] = 1
        return mask


def instruction_from_uniform(u, lam, d):
    """Instruction for a uniform draw ``u``: sleep on [0, p), then d equal jump cells."""
    return int(_kernels.decode(float(u), lam / (1.0 + lam), int(d)))


def sample_instruction(tape, x, j):
    """The instruction tau^{x,j} of ``tape`` (j counts from 1)."""
    if j < 1:
        raise ValueError(f"instruction counters start at 1, got {j}")
    return int(_kernels.instruction(tape.key, tape.p_sleep, tape.d, int(x), int(j), int(x) in tape.erased))


def tape_uniform(tape, x, j):
    """The underlying uniform draw of tau^{x,j}; exposed for law tests."""
    return float(uniform(tape.key, np.uint64(STREAM_TAPE), np.uint64(x), np.uint64(j)))


def ignore_sleep_at(tape, x):
    """Tape with every sleep instruction at x replaced by a neutral one."""
    return replace(tape, erased=tape.erased | {int(x)})


def describe(ins):
    if ins == SLEEP:
        return "sleep"
    if ins == NEUTRAL:
        return "neutral"
    return f"jump({ins})"


def tape_leq(tau, tau_tilde, vertices, depth):
    """Check ``tau <= tau_tilde`` on the window ``vertices x [1, depth]``.

    Positions must agree, except that a sleep in ``tau`` may be neutral in
    ``tau_tilde``.
    """
    for x in vertices:
        for j in range(1, depth + 1):
            a = sample_instruction(tau, x, j)
            b = sample_instruction(tau_tilde, x, j)
            if a != b and not (a == SLEEP and b == NEUTRAL):
                return False
    return True
