"""Monte Carlo estimands and the closed-form bounds they are checked against.

Every estimator runs independent trials. Trial ``t`` under master seed ``s``
uses the child seed ``derive(s, t)`` for both its Poisson configuration and
its instruction tape (on disjoint streams). Results are stored per trial and
reduced in trial order, so they do not depend on ``threads``.

Inequality checks use a three-standard-error tolerance and report the
z-score of the observed margin.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._rng import as_key
from .graphs import make_region
from .greens import green_column, green_exact
from .records import EstimateRecord
from .stabilization import DEFAULT_BUDGET, BudgetExceeded

Z_TOL = 3.0


# -- trial engine -----------------------------------------------------------


@dataclass
class TrialTable:
    """Per-trial statistics; columns are the ``S_*`` constants of the kernels."""

    region: object
    mu: float
    lam: float
    seed: int
    x: int
    stats: np.ndarray = field(repr=False)
    sleep_map: np.ndarray = field(repr=False, default=None)

    def col(self, k):
        return self.stats[:, k]

    @property
    def trials(self):
        return self.stats.shape[0]


def run_trials(region, mu, lam, trials, seed, *, x=0, mode=0, keep_map=False, threads=1, budget=DEFAULT_BUDGET):
    """Run ``trials`` independent stabilisations of Poisson(mu) configurations.

    ``mode`` adds the stabilisation-via-weak round count (MODE_VIA_WEAK) and
    the excess-jump count at x (MODE_ENFORCED) to the statistics.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not mu >= 0:
        raise ValueError(f"density must be >= 0, got {mu}")
    if not lam > 0:
        raise ValueError(f"sleep rate must be positive, got {lam}")
    if not 0 <= x < region.n:
        raise IndexError(f"{x} is not an interior vertex of {region}")
    stats = np.zeros((trials, K.N_STATS), dtype=np.int64)
    smap = np.zeros((trials if keep_map else 0, region.n), dtype=np.int8)
    key = as_key(seed)
    p_sleep = lam / (1.0 + lam)
    threads = max(1, int(threads))
    size = max(1, -(-trials // (4 * threads)))
    spans = [(s, min(trials, s + size)) for s in range(0, trials, size)]

    def work(span):
        s, e = span
        sub_map = smap[s:e] if keep_map else smap
        done = K.trial_batch(region.nbr, float(mu), p_sleep, key, s, int(x), int(mode), int(budget), stats[s:e], sub_map)
        return s + done, e

    if threads == 1:
        results = [work(sp) for sp in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, spans))
    for done, e in results:
        if done < e:
            raise BudgetExceeded(f"trial {done} on {region} exceeded the budget of {budget} instructions")
    return TrialTable(region, float(mu), float(lam), int(seed), int(x), stats, smap if keep_map else None)


def _params(region, **extra):
    # d as passed to make_region: dimension for lattices, degree for trees
    return {"family": region.family, "d": region.ndim or region.d, "L": region.L, **extra}


# -- basic estimands --------------------------------------------------------


def estimate_Q(region, x, mu, lam, trials, seed, threads=1):
    """Probability that x holds a sleeping particle once the region is stable."""
    table = run_trials(region, mu, lam, trials, seed, x=x, threads=threads)
    return EstimateRecord.from_samples("Q", table.col(K.S_X_SLEEPING), seed, **_params(region, lam=lam, mu=mu, x=x))


@dataclass(frozen=True)
class OriginActivity:
    jumps: EstimateRecord
    instructions: EstimateRecord
    visited: EstimateRecord


def estimate_origin_activity(region, mu, lam, trials, seed, threads=1):
    """Mean jump and instruction odometers at the origin and P(origin toppled at least once)."""
    table = run_trials(region, mu, lam, trials, seed, threads=threads)
    p = _params(region, lam=lam, mu=mu)
    m0 = table.col(K.S_ORIGIN_M)
    return OriginActivity(
        EstimateRecord.from_samples("origin_jumps", table.col(K.S_ORIGIN_JUMPS), seed, **p),
        EstimateRecord.from_samples("origin_instructions", m0, seed, **p),
        EstimateRecord.from_samples("origin_visited", m0 >= 1, seed, **p),
    )


def point_summary(region, mu, lam, trials, seed, x=0, threads=1):
    """Sleeping probability at x, P(origin toppled), leaving and sleeping densities from one set of trials."""
    table = run_trials(region, mu, lam, trials, seed, x=x, threads=threads)
    p = _params(region, lam=lam, mu=mu, x=x)
    return [
        EstimateRecord.from_samples("Q", table.col(K.S_X_SLEEPING), seed, **p),
        EstimateRecord.from_samples("origin_visited", table.col(K.S_ORIGIN_M) >= 1, seed, **p),
        EstimateRecord.from_samples("leaving_density", table.col(K.S_ABSORBED) / region.n, seed, **p),
        EstimateRecord.from_samples("sleeping_density", table.col(K.S_SLEEPING) / region.n, seed, **p),
    ]


# -- closed-form bounds -----------------------------------------------------


def theorem_bound(G_value, lam, H):
    """Upper bound ``1 - (1 - G/(H+1)) (1+lam)^-H`` on the sleeping probability."""
    if int(H) != H or H < 1:
        raise ValueError(f"H must be a positive integer, got {H}")
    if not lam > 0:
        raise ValueError("lam must be positive")
    if G_value < 1:
        raise ValueError("a Green's function at the diagonal is at least 1")
    return 1.0 - (1.0 - G_value / (H + 1.0)) * (1.0 + lam) ** (-H)


@dataclass(frozen=True)
class BoundReport:
    lam: float
    G_value: float
    H_star: int
    g_value: float
    H_best: int
    per_H: list = field(repr=False)


def g_lambda(G_value, lam):
    """Minimise :func:`theorem_bound` over ``H = 1 .. max(64, 4 H*)``.

    ``H* = ceil(sqrt(G / log(1 + lam)))`` is the choice that gives the
    square-root behaviour as ``lam -> 0``.
    """
    h_star = math.ceil(math.sqrt(G_value / math.log1p(lam)))
    top = max(64, 4 * h_star)
    per_H = [(H, theorem_bound(G_value, lam, H)) for H in range(1, top + 1)]
    H_best, g = min(per_H, key=lambda hb: hb[1])
    return BoundReport(lam, G_value, h_star, g, H_best, per_H)


# -- identity and inequality checks ----------------------------------------


@dataclass(frozen=True)
class CheckReport:
    """``lhs`` versus ``rhs`` from the same trials; ``margin`` is oriented so >= 0 means satisfied."""

    name: str
    lhs: float
    rhs: float
    margin: float
    stderr: float
    trials: int
    params: dict = field(default_factory=dict)

    @property
    def z(self):
        if self.stderr == 0:
            return 0.0 if self.margin >= 0 else -math.inf
        return self.margin / self.stderr

    @property
    def violated(self):
        return self.margin < -Z_TOL * self.stderr

    @property
    def ok(self):
        return not self.violated


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


@dataclass(frozen=True)
class MassBalance:
    lhs: EstimateRecord
    rhs: float
    rhs_stderr: float
    residual: float
    residual_stderr: float

    @property
    def z(self):
        return self.residual / self.residual_stderr if self.residual_stderr > 0 else (0.0 if self.residual == 0 else math.inf)

    @property
    def ok(self):
        return abs(self.residual) <= Z_TOL * self.residual_stderr


def mass_balance_residual(region, mu, lam, trials, seed, threads=1):
    """Mean jumps at the origin against ``sum_y G(y, 0) (mu - Q(y))``.

    Both sides come from the same trials; the residual's standard error is
    taken from the per-trial residuals.
    """
    table = run_trials(region, mu, lam, trials, seed, keep_map=True, threads=threads)
    g0 = green_column(region, 0)
    jumps = table.col(K.S_ORIGIN_JUMPS).astype(float)
    rhs_t = g0.sum() * mu - table.sleep_map @ g0
    lhs = EstimateRecord.from_samples("origin_jumps", jumps, seed, **_params(region, lam=lam, mu=mu))
    rhs, rhs_se = _mean_se(rhs_t)
    res, res_se = _mean_se(jumps - rhs_t)
    return MassBalance(lhs, rhs, rhs_se, res, res_se)


def _lower_bound(table, lam, x):
    p = lam / (1.0 + lam)
    q = table.col(K.S_X_SLEEPING).astype(float)
    visited = (table.col(K.S_X_M) >= 1).astype(float)
    margin, se = _mean_se(q - p * visited)
    return CheckReport("sleep_lower_bound", float(q.mean()), float(p * visited.mean()), margin, se, table.trials,
                       _params(table.region, lam=lam, mu=table.mu, x=x))


def _excess(table, x):
    G = green_exact(table.region, None, x, x)
    a = table.col(K.S_A).astype(float)
    mean, se = _mean_se(a)
    return CheckReport("excess_mean", mean, G, G - mean, se, table.trials,
                       _params(table.region, lam=table.lam, mu=table.mu, x=x))


def _q_bound(table, x):
    G = green_exact(table.region, None, x, x)
    g = g_lambda(G, table.lam).g_value
    q = table.col(K.S_X_SLEEPING).astype(float)
    mean, se = _mean_se(q)
    return CheckReport("theorem_bound", mean, g, g - mean, se, table.trials,
                       _params(table.region, lam=table.lam, mu=table.mu, x=x))


def sleep_lower_bound_check(region, x, mu, lam, trials, seed, threads=1):
    """``Q(x) >= P(m(x) >= 1) lam / (1 + lam)``."""
    return _lower_bound(run_trials(region, mu, lam, trials, seed, x=x, threads=threads), lam, x)


def excess_mean_check(region, x, mu, lam, trials, seed, threads=1):
    """``E[A] <= G(x, x)`` with A the excess jumps at x."""
    return _excess(run_trials(region, mu, lam, trials, seed, x=x, mode=K.MODE_ENFORCED, threads=threads), x)


def q_bound_check(region, x, mu, lam, trials, seed, threads=1):
    """``Q(x) <= g(lam)`` with g built from ``G(x, x)`` of the region."""
    return _q_bound(run_trials(region, mu, lam, trials, seed, x=x, threads=threads), x)


@dataclass(frozen=True)
class GridChecks:
    excess: CheckReport
    theorem: CheckReport
    lower: CheckReport


def grid_checks(region, x, mu, lam, trials, seed, threads=1):
    """Excess-jump, sleeping-probability upper and lower bound checks from one set of trials."""
    table = run_trials(region, mu, lam, trials, seed, x=x, mode=K.MODE_ENFORCED, threads=threads)
    return GridChecks(_excess(table, x), _q_bound(table, x), _lower_bound(table, lam, x))


@dataclass(frozen=True)
class TailRow:
    ell: int
    joint: float
    bound: float
    margin: float
    stderr: float

    @property
    def violated(self):
        return self.margin < -Z_TOL * self.stderr


@dataclass(frozen=True)
class TailReport:
    rows: list
    trials: int
    params: dict

    @property
    def ok(self):
        return not any(r.violated for r in self.rows)

    def row(self, ell):
        return next(r for r in self.rows if r.ell == ell)


def tail_bound_check(region, x, mu, lam, trials, seed, ells=(1, 2, 3, 4, 5, 6), threads=1):
    """Per round count l: ``P(x sleeps, T = l) <= lam/(1+lam) (1+lam)^-(l-2) P(A >= l-2)``.

    T is the number of rounds of stabilisation via weak stabilisation. The
    l = 1 bucket has bound 0 (a one-round stabilisation leaves x empty).
    """
    table = run_trials(region, mu, lam, trials, seed, x=x, mode=K.MODE_VIA_WEAK | K.MODE_ENFORCED, threads=threads)
    sleeps = table.col(K.S_X_SLEEPING) == 1
    T = table.col(K.S_T)
    A = table.col(K.S_A)
    p = lam / (1.0 + lam)
    rows = []
    for ell in ells:
        joint = (sleeps & (T == ell)).astype(float)
        if ell == 1:
            indicator = np.zeros(table.trials)
            coef = 0.0
        else:
            coef = p * (1.0 + lam) ** (-(ell - 2))
            indicator = (A >= ell - 2).astype(float)
        margin, se = _mean_se(coef * indicator - joint)
        rows.append(TailRow(ell, float(joint.mean()), float(coef * indicator.mean()), margin, se))
    return TailReport(rows, table.trials, _params(region, lam=lam, mu=mu, x=x))


# -- volume and density diagnostics ----------------------------------------


@dataclass(frozen=True)
class ProfileRow:
    L: int
    n: int
    visited: EstimateRecord
    leaving: EstimateRecord
    sleeping: EstimateRecord


def activity_profile(family, d, lam, mu, L_list, trials, seed, threads=1):
    """Per radius: P(origin toppled), particles absorbed per vertex, sleepers per vertex.

    Balls of different radii share vertex indices on their overlap, so the
    same master seed couples their configurations and tapes.
    """
    L_list = list(L_list)
    if not L_list:
        raise ValueError("L_list must be non-empty")
    if any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must be strictly increasing")
    rows = []
    for L in L_list:
        region = make_region(family, d, L)
        table = run_trials(region, mu, lam, trials, seed, threads=threads)
        p = _params(region, lam=lam, mu=mu)
        rows.append(ProfileRow(
            L, region.n,
            EstimateRecord.from_samples("origin_visited", table.col(K.S_ORIGIN_M) >= 1, seed, **p),
            EstimateRecord.from_samples("leaving_density", table.col(K.S_ABSORBED) / region.n, seed, **p),
            EstimateRecord.from_samples("sleeping_density", table.col(K.S_SLEEPING) / region.n, seed, **p),
        ))
    return rows


@dataclass(frozen=True)
class Bracket:
    """Finite-volume heuristic bracket for the critical density, not an estimate of it."""

    mu_lo: float
    mu_hi: float
    degenerate: bool
    threshold: float
    label: str = "finite-L heuristic: mean leaving density >= threshold"


def mu_c_bracket(family, d, lam, L, trials, threshold=0.01, seed=0, lo=0.0, hi=1.5, iterations=20, threads=1):
    """Bisect on mu for the smallest density whose mean leaving density reaches ``threshold``.

    Every evaluation reuses ``seed``. If the criterion already holds at ``lo``
    or never holds at ``hi`` the bracket collapses to that end and is flagged
    degenerate.
    """
    region = make_region(family, d, L)

    def active(mu):
        table = run_trials(region, mu, lam, trials, seed, threads=threads)
        return float((table.col(K.S_ABSORBED) / region.n).mean()) >= threshold

    if active(lo):
        warnings.warn("criterion met at the lower end; degenerate bracket", RuntimeWarning, stacklevel=2)
        return Bracket(lo, lo, True, threshold)
    if not active(hi):
        warnings.warn("criterion never met up to the upper end; degenerate bracket", RuntimeWarning, stacklevel=2)
        return Bracket(hi, hi, True, threshold)
    a, b = lo, hi
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        if active(mid):
            b = mid
        else:
            a = mid
    return Bracket(a, b, False, threshold)
