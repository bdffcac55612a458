"""Command-line entry point: ``arw-lab {stabilize,verify,sweep,greens,phase}``.

Output is CSV with a leading ``#`` comment echoing the resolved
configuration. Floats are written with 17 significant digits. Thread count
and output paths are left out of the echo, so files are byte-identical
across ``--threads``.

Exit codes: 0 success, 1 invalid input, 2 a verify check failed, 3 an
instruction budget was exceeded.
"""
import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from dataclasses import dataclass

from . import estimators as est
from . import verify as ver
from .graphs import FAMILIES, LATTICE, make_region
from .greens import green_table
from .records import fmt
from .stabilization import DEFAULT_BUDGET, BudgetExceeded, sample_poisson_config, stabilize
from .tape import InstructionTape

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_BUDGET = 0, 1, 2, 3
# echoed into output headers; everything that changes results and nothing else
ECHO = ("family", "d", "L", "L_list", "lambdas", "mu", "mu_grid", "trials", "seed", "budget", "threshold", "quick", "probes")


class InvalidInput(ValueError):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    family: str = LATTICE
    d: int = 2
    L: int = 4
    L_list: tuple = None
    lambdas: tuple = (1.0,)
    mu: float = 0.5
    mu_grid: tuple = None
    trials: int = 1000
    seed: int = 0
    out: str = None
    json: str = None
    threads: int = 1
    budget: int = DEFAULT_BUDGET
    threshold: float = 0.01
    quick: bool = False
    probes: bool = False

    @property
    def lam(self):
        if len(self.lambdas) != 1:
            raise InvalidInput(f"{self.subcommand} takes a single --lambda, got {len(self.lambdas)}")
        return self.lambdas[0]

    def validate(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"--family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == LATTICE and self.d < 1:
            raise InvalidInput("--d (lattice dimension) must be >= 1")
        if self.family != LATTICE and self.d < 3:
            raise InvalidInput("--d (tree degree) must be >= 3")
        for name in ("L", "trials", "threads", "budget"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"--{name} must be >= 1")
        if not self.lambdas:
            raise InvalidInput("--lambda grid is empty")
        if any(not v > 0 for v in self.lambdas):
            raise InvalidInput("--lambda values must be positive")
        if not self.mu >= 0:
            raise InvalidInput("--mu must be >= 0")
        if self.mu_grid is not None:
            if not self.mu_grid:
                raise InvalidInput("--mu-grid is empty")
            if any(not v >= 0 for v in self.mu_grid):
                raise InvalidInput("--mu-grid values must be >= 0")
        if self.L_list is not None:
            if not self.L_list:
                raise InvalidInput("--L-list is empty")
            if any(v < 1 for v in self.L_list) or any(b <= a for a, b in zip(self.L_list, self.L_list[1:])):
                raise InvalidInput("--L-list must be positive and strictly increasing")
        if not 0 <= self.threshold < 1:
            raise InvalidInput("--threshold must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput("--seed must lie in [0, 2^64)")
        return self

    def echo(self):
        return {k: getattr(self, k) for k in ECHO}


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInput(f"{self.prog}: {message}")


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--d", type=int, help="lattice dimension or tree degree")
    common.add_argument("--L", type=int, help="ball radius: vertices at graph distance < L")
    common.add_argument("--L-list", dest="L_list", type=_ints, help="comma-separated radii")
    common.add_argument("--lambda", dest="lambdas", type=_floats, help="sleep rate (comma grid for sweep)")
    common.add_argument("--mu", type=float, help="initial particle density")
    common.add_argument("--mu-grid", dest="mu_grid", type=_floats, help="comma-separated densities")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, help="worker threads (default $ARW_LAB_THREADS or 1)")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--json", help="also write a JSON mirror to this path")
    common.add_argument("--budget", type=int, help="instruction budget per stabilisation")
    common.add_argument("--threshold", type=float, help="leaving-density threshold for phase")
    common.add_argument("--config", help="JSON file of defaults; flags override it")

    parser = _Parser(prog="arw-lab", description="Activated random walk experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("stabilize", parents=[common], help="stabilise one Poisson configuration")
    v = sub.add_parser("verify", parents=[common], help="property suites and bound checks")
    v.add_argument("--quick", action="store_true", default=None, help="reduced sizes")
    v.add_argument("--probes", action="store_true", default=None, help="include the tree volume probe")
    sub.add_parser("sweep", parents=[common], help="estimates over a (lambda, mu, L) grid")
    sub.add_parser("greens", parents=[common], help="Green's function table of a ball")
    sub.add_parser("phase", parents=[common], help="finite-volume bracket for the critical density")
    return parser


def _from_json(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lambdas"
        if key in ("lambdas", "mu_grid", "L_list"):
            conv = _ints if key == "L_list" else _floats
            value = conv(value) if isinstance(value, str) else tuple(value if isinstance(value, list) else [value])
        out[key] = value
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(out) - names
    if unknown:
        raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
    return out


def resolve(argv):
    """Defaults, then the JSON config file, then explicit flags."""
    ns = vars(build_parser().parse_args(argv))
    values = {}
    env = os.environ.get("ARW_LAB_THREADS")
    if env:
        try:
            values["threads"] = int(env)
        except ValueError as exc:
            raise InvalidInput(f"ARW_LAB_THREADS must be an integer, got {env!r}") from exc
    config_path = ns.pop("config")
    if config_path:
        values.update(_from_json(config_path))
    values.update({k: v for k, v in ns.items() if v is not None})
    return ExperimentConfig(**values).validate()


# -- output -----------------------------------------------------------------


def _write(cfg, header, rows, payload):
    buf = io.StringIO()
    buf.write(f"# arw-lab {cfg.subcommand} {json.dumps(cfg.echo(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.json:
        with open(cfg.json, "w") as fh:
            json.dump({"config": cfg.echo(), "columns": list(header), "rows": payload}, fh, indent=1, sort_keys=True)


def _records(cfg, records):
    header = ["estimand", "family", "d", "L", "lambda", "mu", "x", "mean", "stderr", "trials", "seed"]
    rows = [[r.estimand, r.params["family"], r.params["d"], r.params["L"], r.params["lam"], r.params["mu"],
             r.params.get("x", 0), r.mean, r.stderr, r.trials, r.master_seed] for r in records]
    _write(cfg, header, rows, [dict(zip(header, row)) for row in rows])


# -- subcommands ------------------------------------------------------------


def cmd_stabilize(cfg):
    region = make_region(cfg.family, cfg.d, cfg.L)
    config = sample_poisson_config(region, cfg.mu, cfg.seed)
    rep = stabilize(region, config, InstructionTape(cfg.seed, cfg.lam, region.d), budget=cfg.budget)
    header = ["family", "d", "L", "lambda", "mu", "seed", "vertex", "initial", "final", "m", "M", "absorbed"]
    rows = [[cfg.family, cfg.d, cfg.L, cfg.lam, cfg.mu, cfg.seed, v, int(config[v]), int(rep.final[v]),
             int(rep.m[v]), int(rep.M[v]), rep.absorbed] for v in range(region.n)]
    _write(cfg, header, rows, [dict(zip(header, r)) for r in rows])
    return EXIT_OK


def cmd_verify(cfg):
    results = ver.run_suite(ver.QUICK if cfg.quick else ver.FULL, probes=bool(cfg.probes))
    header = ["check", "passed", "seconds", "detail"]
    rows = [[r.name, r.passed, r.seconds, r.detail] for r in results]
    if cfg.out:
        _write(cfg, header, rows, [dict(zip(header, r)) for r in rows])
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_sweep(cfg):
    mus = cfg.mu_grid if cfg.mu_grid is not None else (cfg.mu,)
    Ls = cfg.L_list if cfg.L_list is not None else (cfg.L,)
    records = []
    for L in Ls:
        region = make_region(cfg.family, cfg.d, L)
        for lam in cfg.lambdas:
            for mu in mus:
                records.extend(est.point_summary(region, mu, lam, cfg.trials, cfg.seed, threads=cfg.threads))
    _records(cfg, records)
    return EXIT_OK


def cmd_greens(cfg):
    table = green_table(make_region(cfg.family, cfg.d, cfg.L))
    header = ["x_index", "y_index", "value"]
    rows = list(table.rows())
    _write(cfg, header, rows, [dict(zip(header, r)) for r in rows])
    return EXIT_OK


def cmd_phase(cfg):
    b = est.mu_c_bracket(cfg.family, cfg.d, cfg.lam, cfg.L, cfg.trials, cfg.threshold, cfg.seed, threads=cfg.threads)
    header = ["estimand", "family", "d", "L", "lambda", "threshold", "trials", "seed", "mu_lo", "mu_hi", "degenerate", "label"]
    rows = [["mu_c_bracket", cfg.family, cfg.d, cfg.L, cfg.lam, cfg.threshold, cfg.trials, cfg.seed,
             b.mu_lo, b.mu_hi, b.degenerate, b.label]]
    _write(cfg, header, rows, [dict(zip(header, r)) for r in rows])
    return EXIT_OK


COMMANDS = {"stabilize": cmd_stabilize, "verify": cmd_verify, "sweep": cmd_sweep, "greens": cmd_greens, "phase": cmd_phase}


def run(argv):
    """Parse ``argv``, run the subcommand and return its exit code."""
    try:
        cfg = resolve(argv)
        return COMMANDS[cfg.subcommand](cfg)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))
