import numpy as np
import pytest
from hypothesis import given, strategies as st

from arw_lab.tape import (
    NEUTRAL,
    SLEEP,
    InstructionTape,
    describe,
    ignore_sleep_at,
    instruction_from_uniform,
    sample_instruction,
    tape_leq,
    tape_uniform,
)

lams = st.floats(min_value=1e-3, max_value=1e3)


@pytest.mark.parametrize(
    "u,lam,d,expected",
    [
        (0.0, 1.0, 4, SLEEP),
        (0.4999, 1.0, 4, SLEEP),
        (0.5, 1.0, 4, 0),
        (0.62, 1.0, 4, 0),
        (0.63, 1.0, 4, 1),
        (0.99999, 1.0, 4, 3),
        (0.05, 0.1, 2, SLEEP),
        (0.1, 0.1, 2, 0),
        (0.6, 0.1, 2, 1),
    ],
)
def test_decode_partition(u, lam, d, expected):
    # sleep cell [0, lam/(1+lam)), then d equal jump cells
    assert instruction_from_uniform(u, lam, d) == expected


@given(st.floats(min_value=0, max_value=1, exclude_max=True), lams, st.integers(1, 8))
def test_decode_range(u, lam, d):
    ins = instruction_from_uniform(u, lam, d)
    assert ins == SLEEP or 0 <= ins < d


@given(st.integers(0, 2**64 - 1), lams, st.integers(1, 6), st.integers(0, 50), st.integers(1, 50))
def test_instruction_is_decoded_uniform(seed, lam, d, x, j):
    tape = InstructionTape(seed, lam, d)
    assert tape[x, j] == instruction_from_uniform(tape_uniform(tape, x, j), lam, d)
    assert tape[x, j] == sample_instruction(InstructionTape(seed, lam, d), x, j)


@pytest.mark.parametrize("lam,d", [(0.1, 4), (1.0, 6), (10.0, 3)])
def test_instruction_law(lam, d):
    tape = InstructionTape(123, lam, d)
    n = 20_000
    draws = np.array([tape[x, j] for x in range(20) for j in range(1, n // 20 + 1)])
    p = lam / (1 + lam)
    for value, prob in [(SLEEP, p)] + [(i, (1 - p) / d) for i in range(d)]:
        freq = np.mean(draws == value)
        assert abs(freq - prob) < 4 * np.sqrt(prob * (1 - prob) / n)


def test_erasure_only_touches_sleeps_at_x():
    tape = InstructionTape(9, 1.0, 4)
    tilde = ignore_sleep_at(tape, 2)
    for x in range(5):
        for j in range(1, 40):
            a, b = tape[x, j], tilde[x, j]
            if x == 2 and a == SLEEP:
                assert b == NEUTRAL
            else:
                assert a == b
    assert tape_leq(tape, tilde, range(5), 40)
    assert not tape_leq(tilde, tape, [2], 40)


def test_erasure_composes():
    tape = ignore_sleep_at(ignore_sleep_at(InstructionTape(1, 1.0, 2), 0), 3)
    assert tape.erased == frozenset({0, 3})
    for x in (0, 3):
        assert SLEEP not in [tape[x, j] for j in range(1, 60)]
    assert SLEEP in [tape[1, j] for j in range(1, 60)]


@pytest.mark.parametrize("kwargs", [dict(lam=0.0), dict(lam=-1.0), dict(d=0), dict(master_seed=-3)])
def test_tape_validation(kwargs):
    args = dict(master_seed=1, lam=1.0, d=2) | kwargs
    with pytest.raises(ValueError):
        InstructionTape(**args)


def test_counters_start_at_one():
    with pytest.raises(ValueError):
        sample_instruction(InstructionTape(1, 1.0, 2), 0, 0)


def test_describe():
    assert [describe(i) for i in (SLEEP, NEUTRAL, 2)] == ["sleep", "neutral", "jump(2)"]
