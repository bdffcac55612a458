"""Activated random walk laboratory: replayable stabilisation, Green's functions, bound checks."""
from .graphs import FiniteRegion, make_lattice_ball, make_region, make_tree_ball, neighbors, ring
from .tape import NEUTRAL, SLEEP, InstructionTape, ignore_sleep_at, sample_instruction
from .stabilization import (
    SLEEPING,
    BudgetExceeded,
    OdometerReport,
    enforced_stabilize,
    excess_jumps,
    sample_poisson_config,
    stabilize,
    stabilize_via_weak,
    weak_stabilize,
)
from .greens import escape_probability, green_exact, green_mc, ring_green_sum, xi_estimate
from .estimators import estimate_Q, g_lambda, theorem_bound
from .records import EstimateRecord

__version__ = "0.1.0"
