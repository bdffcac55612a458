"""Property suites and statistical bound checks, shared by ``arw-lab verify`` and the tests.

Each ``check_*`` function returns a :class:`CheckResult`. Exact suites count
violations over randomised small instances; statistical checks use the
three-standard-error tolerance of :mod:`arw_lab.estimators` and quote
z-scores in ``detail``.
"""
import math
import time
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .graphs import LATTICE, TREE, make_region
from .greens import green_exact, green_mc, hitting_probability, lattice_green_origin
from .stabilization import (
    SLEEPING,
    config_leq,
    enforced_stabilize,
    partial_sequence,
    partial_weak_sequence,
    sample_poisson_config,
    stabilize,
    weak_stabilize,
)
from .tape import InstructionTape, ignore_sleep_at

LAMBDAS = (0.1, 1.0, 10.0)
MUS = (0.2, 0.5, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class Sizes:
    instances: int = 1000
    order_instances: int = 500
    green_instances: int = 50
    green_walks: int = 20_000
    regularity_L: int = 8
    grid_trials: int = 10_000
    single_site_trials: int = 100_000
    tail_trials: int = 50_000
    balance_trials: int = 20_000
    profile_trials: int = 10_000


FULL = Sizes()
QUICK = Sizes(100, 50, 10, 5_000, 5, 2_000, 20_000, 10_000, 5_000, 2_000)


@dataclass
class Instance:
    region: object
    config: np.ndarray
    tape: InstructionTape
    mu: float


def random_region(rng, max_n=40):
    while True:
        if rng.random() < 0.6:
            family, d = LATTICE, int(rng.integers(1, 4))
            L = int(rng.integers(1, {1: 21, 2: 6, 3: 4}[d]))
        else:
            family, d = TREE, int(rng.integers(3, 5))
            L = int(rng.integers(1, 5))
        region = make_region(family, d, L)
        if region.n <= max_n:
            return region


def resize(region, L):
    """Ball of radius L in the same family as ``region``."""
    return make_region(region.family, region.ndim if region.family == LATTICE else region.d, L)


def random_instance(rng, region=None, max_n=40):
    """Region of at most ``max_n`` vertices, Poisson config with some sleepers, fresh tape."""
    region = region or random_region(rng, max_n)
    mu = float(rng.uniform(0.0, 1.0))
    config = sample_poisson_config(region, mu, int(rng.integers(2**63)))
    config[(config == 0) & (rng.random(region.n) < 0.2)] = SLEEPING
    tape = InstructionTape(int(rng.integers(2**63)), float(rng.choice(LAMBDAS)), region.d)
    return Instance(region, config, tape, mu)


def _timed(name, fn):
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def _seeds(rng):
    return int(rng.integers(2**63)), int(rng.integers(2**63))


# -- exact suites -----------------------------------------------------------


def check_abelian(sizes=FULL, seed=1):
    """Two random toppling orders and the FIFO order give identical reports."""

    def run():
        rng = np.random.default_rng(seed)
        bad = weak_bad = 0
        for _ in range(sizes.instances):
            ins = random_instance(rng)
            a, b = _seeds(rng)
            ref = stabilize(ins.region, ins.config, ins.tape)
            ra = stabilize(ins.region, ins.config, ins.tape, order_seed=a)
            rb = stabilize(ins.region, ins.config, ins.tape, order_seed=b)
            bad += not (ra.same_as(rb) and ra.same_as(ref))
            x = int(rng.integers(ins.region.n))
            wa = weak_stabilize(x, ins.region, ins.config, ins.tape, order_seed=a).report
            wb = weak_stabilize(x, ins.region, ins.config, ins.tape, order_seed=b).report
            weak_bad += not wa.same_as(wb)
        return bad + weak_bad == 0, f"{sizes.instances} instances, {bad} full / {weak_bad} weak mismatches"

    return _timed("abelian property", run)


def _raise_config(rng, config):
    """A config >= ``config`` in the order 0 < sleeping < 1 < 2 < ..."""
    up = np.array(config)
    for v in np.flatnonzero(rng.random(len(up)) < 0.3):
        if up[v] == 0:
            up[v] = SLEEPING if rng.random() < 0.5 else 1
        elif up[v] == SLEEPING:
            up[v] = 1 + int(rng.integers(2))
        else:
            up[v] += int(rng.integers(1, 3))
    return up


def check_monotonicity(sizes=FULL, seed=2):
    """Volume/config monotonicity, enforced activation and least action, exact."""

    def run():
        rng = np.random.default_rng(seed)
        vol = act = lap = 0
        for _ in range(sizes.order_instances):
            # nested balls share vertex indices on the smaller ball
            small = random_region(rng, 25)
            big = resize(small, small.L + 1 + int(rng.integers(2)))
            ins = random_instance(rng, small)
            eta_big = _raise_config(rng, np.concatenate([ins.config, sample_poisson_config(big, ins.mu, int(rng.integers(2**63)))[small.n:]]))
            m_small = stabilize(small, ins.config, ins.tape).m
            m_big = stabilize(big, eta_big, ins.tape).m
            vol += not (np.all(m_small <= m_big[: small.n]) and config_leq(ins.config, eta_big[: small.n]))

            ins = random_instance(rng)
            erased = [int(v) for v in np.flatnonzero(rng.random(ins.region.n) < 0.3)]
            tilde = ins.tape
            for v in erased or [int(rng.integers(ins.region.n))]:
                tilde = ignore_sleep_at(tilde, v)
            act += not np.all(stabilize(ins.region, ins.config, ins.tape).m <= stabilize(ins.region, ins.config, tilde).m)

            ins = random_instance(rng)
            x = int(rng.integers(ins.region.n))
            m1 = weak_stabilize(x, ins.region, ins.config, ins.tape).report.m
            full = stabilize(ins.region, ins.config, ins.tape).m
            steps = int(rng.integers(0, 2 * int(m1.sum()) + 2))
            beta = partial_weak_sequence(x, ins.region, ins.config, ins.tape, steps, int(rng.integers(2**63))).m
            gamma = partial_sequence(ins.region, ins.config, ins.tape, steps, int(rng.integers(2**63))).m
            lap += not (np.all(beta <= m1) and np.all(beta <= full) and np.all(gamma <= full))
        n = sizes.order_instances
        return vol + act + lap == 0, f"{n} instances each, violations: volume {vol}, activation {act}, least action {lap}"

    return _timed("monotonicity and least action", run)


def check_weak_identities(sizes=FULL, seed=3):
    """Weak stabilisation ignores sleeps at x; one extra particle at x matches enforced stabilisation."""

    def run():
        rng = np.random.default_rng(seed)
        inv = add = 0
        for _ in range(sizes.order_instances):
            ins = random_instance(rng)
            x = int(rng.integers(ins.region.n))
            w = weak_stabilize(x, ins.region, ins.config, ins.tape).report
            w_tilde = weak_stabilize(x, ins.region, ins.config, ignore_sleep_at(ins.tape, x)).report
            inv += not w.same_as(w_tilde)

            eta = ins.config.copy()
            if eta[x] == SLEEPING:
                eta[x] = 0
            plus = eta.copy()
            plus[x] += 1
            wp = weak_stabilize(x, ins.region, plus, ins.tape).report
            e = enforced_stabilize(x, ins.region, eta, ins.tape)
            expect = e.final.copy()
            expect[x] += 1
            add += not (np.array_equal(wp.m, e.m) and np.array_equal(wp.M, e.M)
                        and np.array_equal(wp.final, expect) and wp.absorbed == e.absorbed)
        n = sizes.order_instances
        return inv + add == 0, f"{n} instances, violations: tape invariance {inv}, particle addition {add}"

    return _timed("weak stabilisation identities", run)


# -- Green's functions ------------------------------------------------------


def check_greens(sizes=FULL, seed=4):
    """Walk counts against linear solves, and ``P_x(hit 0) G(0,0) = G(x,0)`` on balls."""

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        fails = 0
        for i in range(sizes.green_instances):
            region = random_region(rng)
            x, y = (int(v) for v in rng.integers(region.n, size=2))
            rec = green_mc(region, x, y, sizes.green_walks, seed=1000 + i)
            exact = green_exact(region, None, x, y)
            z = abs(rec.mean - exact) / rec.stderr if rec.stderr > 0 else (0.0 if rec.mean == exact else math.inf)
            worst = max(worst, z)
            fails += z > est.Z_TOL
        err = 0.0
        for dim in (2, 3):
            for L in range(2, sizes.regularity_L + 1):
                region = make_region(LATTICE, dim, L)
                g0 = green_exact(region, None, 0, 0)
                for v in range(region.n):
                    err = max(err, abs(hitting_probability(region, v, 0) * g0 - green_exact(region, None, v, 0)))
        ok = fails == 0 and err <= 1e-9
        return ok, (f"{sizes.green_instances} Monte Carlo instances, {fails} beyond 3 se (max |z| {worst:.2f}); "
                    f"regularity identity max error {err:.1e} on Z^2, Z^3 balls L <= {sizes.regularity_L}")

    return _timed("Green's function oracles", run)


# -- statistical bound checks -----------------------------------------------


def grid_regions():
    return (make_region(LATTICE, 2, 4), make_region(LATTICE, 3, 3))


def _grid(sizes, seed):
    out = []
    for region in grid_regions():
        for lam in LAMBDAS:
            for mu in MUS:
                out.append(est.grid_checks(region, 0, mu, lam, sizes.grid_trials, seed))
    return out


def _worst(reports):
    r = min(reports, key=lambda c: c.z)
    return f"min z {r.z:.2f} at Z^{r.params['d']} L={r.params['L']} lam={r.params['lam']} mu={r.params['mu']}"


def check_grid_bounds(sizes=FULL, seed=5, grid=None):
    """Excess jumps, sleeping-probability upper bound and lower bound on the 3x3 grid, both regions."""
    t0 = time.perf_counter()
    grid = grid if grid is not None else _grid(sizes, seed)
    secs = time.perf_counter() - t0
    out = []
    for attr, name in (("excess", "excess-jump mean bound"), ("theorem", "sleeping probability upper bound"),
                       ("lower", "sleeping probability lower bound")):
        reps = [getattr(g, attr) for g in grid]
        bad = sum(r.violated for r in reps)
        out.append(CheckResult(name, bad == 0, f"{len(reps)} grid points, {bad} violations, {_worst(reps)}", secs))
    return out


def check_single_site(sizes=FULL, seed=6):
    """Sleeping probability on one vertex against ``(1 - e^-mu) lam / (1 + lam)``."""

    def run():
        region = make_region(LATTICE, 1, 1)
        zs = []
        for lam, mu in ((1.0, 0.5), (0.1, 1.0), (10.0, 0.2)):
            rec = est.estimate_Q(region, 0, mu, lam, sizes.single_site_trials, seed)
            exact = -math.expm1(-mu) * lam / (1 + lam)
            zs.append((rec.mean - exact) / rec.stderr)
        worst = max(abs(z) for z in zs)
        return worst <= est.Z_TOL, f"3 parameter points, {sizes.single_site_trials} trials, max |z| {worst:.2f}"

    return _timed("single-site closed form", run)


def check_tail(sizes=FULL, seed=7):
    """Per-round tail bound at (lam=1, mu=0.5) on the Z^2 ball L=4."""

    def run():
        rep = est.tail_bound_check(make_region(LATTICE, 2, 4), 0, 0.5, 1.0, sizes.tail_trials, seed, ells=(1, 2, 3, 4))
        one = rep.row(1)
        bad = [r.ell for r in rep.rows if r.ell > 1 and r.violated]
        zs = ", ".join(f"l={r.ell}: {r.joint:.4f} <= {r.bound:.4f} (z {r.margin / r.stderr:.1f})" for r in rep.rows if r.ell > 1)
        return one.joint == 0 and not bad, f"l=1 joint {one.joint}; {zs}"

    return _timed("round-count tail bound", run)


def check_mass_balance(sizes=FULL, seed=8):
    """Jumps at the origin against Green's-weighted particle deficit."""

    def run():
        site = make_region(LATTICE, 1, 1)
        mu, lam = 0.7, 1.0
        rec = est.estimate_origin_activity(site, mu, lam, sizes.balance_trials, seed).jumps
        analytic = mu + math.expm1(-mu) * lam / (1 + lam)
        z1 = (rec.mean - analytic) / rec.stderr
        mb = est.mass_balance_residual(make_region(LATTICE, 2, 6), 0.3, 1.0, sizes.balance_trials, seed)
        ok = abs(z1) <= est.Z_TOL and mb.ok
        return ok, f"single site z {z1:.2f}; Z^2 L=6 residual {mb.residual:.4f} +- {mb.residual_stderr:.4f} (z {mb.z:.2f})"

    return _timed("mass balance", run)


def check_g_lambda(sizes=FULL):
    """``g(lam) < 1`` over decades of lam and ``g(lam)/sqrt(lam) <= 2 sqrt(G) + sqrt(lam)`` for small lam."""

    def run():
        og = lattice_green_origin(3)
        G = og.value
        gs = {lam: est.g_lambda(G, lam).g_value for lam in 10.0 ** np.arange(-3, 4)}
        small = [(lam, est.g_lambda(G, lam).g_value / math.sqrt(lam)) for lam in (1e-1, 1e-2, 1e-3)]
        ratio_ok = all(r <= 2 * math.sqrt(G) + math.sqrt(lam) for lam, r in small)
        ok = og.converged and all(0 < g < 1 for g in gs.values()) and ratio_ok
        ratios = ", ".join(f"{r:.3f}" for _, r in small)
        return ok, f"G(0,0)={G:.5f} (converged {og.converged}), max g {max(gs.values()):.6f}, g/sqrt(lam) = {ratios}"

    return _timed("g(lambda) bound", run)


def check_tree_probe(sizes=FULL, seed=9, L_list=(3, 5, 7)):
    """Volume trends on the 3-regular tree at lam=1 below and above lam/(1+lam)."""

    def run():
        low = est.activity_profile(TREE, 3, 1.0, 0.3, L_list, sizes.profile_trials, seed)
        high = est.activity_profile(TREE, 3, 1.0, 0.9, L_list, sizes.profile_trials, seed)

        def rises(rows, attr):
            out = []
            for a, b in zip(rows, rows[1:]):
                ra, rb = getattr(a, attr), getattr(b, attr)
                se = math.hypot(ra.stderr, rb.stderr)
                if rb.mean > ra.mean + est.Z_TOL * se:
                    out.append(f"L {a.L}->{b.L} by {(rb.mean - ra.mean) / se:.1f} se")
            return out

        leave_up = rises(low, "leaving")
        visit_up = rises(low, "visited")
        above = all(h.leaving.mean > lo.leaving.mean for h, lo in zip(high, low))
        fmt = lambda rows, attr: "/".join(f"{getattr(r, attr).mean:.4f}" for r in rows)
        detail = (f"mu=0.3 leaving {fmt(low, 'leaving')} rises: {leave_up or 'none'}; "
                  f"P(m>=1) {fmt(low, 'visited')} rises: {visit_up or 'none'}; "
                  f"mu=0.9 leaving {fmt(high, 'leaving')} above: {above}")
        return not leave_up and not visit_up and above, detail

    return _timed("tree volume probe", run)


def run_suite(sizes=FULL, probes=False):
    """Exact suites and bound checks; ``probes`` adds the tree volume probe."""
    results = [
        check_abelian(sizes),
        check_monotonicity(sizes),
        check_weak_identities(sizes),
        check_greens(sizes),
        *check_grid_bounds(sizes),
        check_single_site(sizes),
        check_tail(sizes),
        check_mass_balance(sizes),
        check_g_lambda(sizes),
    ]
    if probes:
        results.append(check_tree_probe(sizes))
    return results
