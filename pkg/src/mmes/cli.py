"""Command line experiment runner.

Subcommands
-----------
run       independent trials on one problem; a trace CSV per trial and a summary
sweep-l   median evaluations-to-target for every (l, n) cell
timing    optimizer CPU time per evaluation, objective time excluded
verify    moment study of the mixture sampler plus the step-size null test

Settings can come from an INI file (``--config``, section ``[mmes]``, keys
named like the long flags); explicit flags override the file.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import statistics
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .errors import ParameterError
from .fms import BaseDistribution
from .optimizer import MmesConfig, RunTrace, default_config, init_state, run, run_with_restarts, step
from .problems import Problem, parse_problem
from .rand import MAX_SEED, make_rng
from .verify import run_verification

TRACE_COLUMNS = ("generation", "fes", "best_f", "sigma", "W")
SUMMARY_COLUMNS = ("seed", "fes_to_target", "final_f", "restarts", "status")
SWEEP_COLUMNS = ("l", "n", "median_fes", "trials", "successes")
TIMING_COLUMNS = ("n", "lam", "l", "generations", "seconds_per_eval")
VERIFY_COLUMNS = ("l", "NV", "SME_4", "SME_6", "min_kurtosis", "KS_stat")

# random streams derived from each trial seed
OPTIMIZER_STREAM = 0
ROTATION_STREAM = 1

RECORDED_DECISIONS = (
    "rotation: a fresh matrix per trial, drawn from stream (seed, 1)",
    "restart: fresh state (archive, path, W, sigma0) and a new uniform mean; lam, mu, d_sigma doubled",
    "stagnation: instance best-so-far improved by < 1e-8 over the last n generations",
    "generation 0: no paired test, W and sigma unchanged",
)


def fmt(value) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return "" if value is None else str(value)


def git_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             timeout=5, cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def header_lines(command: str, settings: dict, extra: Iterable[str] = ()) -> list[str]:
    lines = [f"# mmes {__version__} {command}", f"# git_revision={git_revision()}"]
    lines += [f"# {k}={fmt(v)}" for k, v in settings.items()]
    lines += [f"# {line}" for line in extra]
    lines += [f"# decision: {d}" for d in RECORDED_DECISIONS]
    return lines


def write_csv(path: Path, comments: list[str], columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def parse_int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(float(v)) for v in str(text).replace(" ", "").split(",") if v]


def parse_seed(text) -> int:
    seed = int(text)
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return seed


def worker_count(tasks: int) -> int:
    cap = os.environ.get("MMES_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, tasks))


# ---------------------------------------------------------------------------
# settings

CONFIG_KEYS = {
    "problem": str, "dim": int, "seed": parse_seed, "seeds": str, "trials": int,
    "max_fes": lambda v: int(float(v)), "target": float, "restarts": str, "trace_every": int,
    "mixing_strength": int, "base": str, "c_sigma": float, "d_sigma": float, "alpha_z": float,
    "sigma_uses_new_w": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "max_rotation_dim": int, "out": str, "l_values": str, "dims": str, "generations": int,
    "samples": int,
}

DEFAULTS = {
    "problem": "sphere", "dim": None, "seed": 1, "seeds": None, "trials": 1,
    "max_fes": None, "target": 1e-8, "restarts": "off", "trace_every": 1,
    "mixing_strength": 4, "base": "gaussian", "c_sigma": 0.3, "d_sigma": 1.0, "alpha_z": 0.05,
    "sigma_uses_new_w": False, "max_rotation_dim": 4096, "out": ".",
    "l_values": "2,4,8,16,32", "dims": None, "generations": 200, "samples": 10_000,
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional INI file and explicit flags (in that order)."""
    settings = dict(DEFAULTS)
    if args.config:
        parser = configparser.ConfigParser()
        if not parser.read(args.config):
            raise ParameterError(f"cannot read config file {args.config}")
        section = parser["mmes"] if parser.has_section("mmes") else parser.defaults()
        for key, value in section.items():
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ParameterError(f"unknown config key {key!r}")
            settings[key] = CONFIG_KEYS[key](value)
    for key, value in vars(args).items():
        if key in settings and value is not None:
            settings[key] = value
    return settings


def trial_seeds(settings: dict) -> list[int]:
    if settings["seeds"]:
        seeds = [parse_seed(s) for s in str(settings["seeds"]).split(",") if s.strip()]
    else:
        seeds = [settings["seed"] + i for i in range(settings["trials"])]
    if not seeds:
        raise ParameterError("at least one seed is required")
    return seeds


def problem_dim(settings: dict) -> int:
    text = settings["problem"]
    for field in text.split(":")[1:]:
        if field.startswith("dim="):
            return int(field[4:])
    if settings["dim"] is None:
        raise ParameterError("give the dimension with --dim or dim= in --problem")
    return int(settings["dim"])


def build_config(settings: dict, n: int, l: Optional[int] = None) -> MmesConfig:
    if n < 4:
        raise ParameterError(f"dimension must be >= 4, got {n}")
    max_fes = settings["max_fes"]
    if max_fes is None:
        max_fes = 10**8 if n <= 1000 else 2 * 10**8
    return default_config(
        n,
        l=settings["mixing_strength"] if l is None else l,
        base=BaseDistribution.parse(settings["base"]),
        c_sigma=settings["c_sigma"],
        d_sigma=settings["d_sigma"],
        alpha_z=settings["alpha_z"],
        sigma_uses_new_w=settings["sigma_uses_new_w"],
        max_fes=int(max_fes),
        target_f=settings["target"],
    )


# ---------------------------------------------------------------------------
# trials

def execute_trial(problem_text: str, n: int, cfg: MmesConfig, seed: int, restarts: bool,
                  trace_every: int, max_rotation_dim: int) -> RunTrace:
    prob = parse_problem(problem_text, dim=n, rng=make_rng(seed, ROTATION_STREAM),
                         max_rotation_dim=max_rotation_dim)
    rng = make_rng(seed, OPTIMIZER_STREAM)
    driver = run_with_restarts if restarts else run
    return driver(cfg, prob, rng, trace_every=trace_every)


def _trial_job(job):
    problem_text, n, cfg, seed, restarts, trace_every, max_rot, trace_path, comments = job
    trace = execute_trial(problem_text, n, cfg, seed, restarts, trace_every, max_rot)
    if trace_path is not None:
        write_csv(Path(trace_path), comments + [f"# seed={seed}", f"# status={trace.status.value}"],
                  TRACE_COLUMNS, trace.records)
    return seed, fes_to_target(trace, cfg), trace.best_f, trace.restarts, trace.status.value


def fes_to_target(trace: RunTrace, cfg: MmesConfig) -> int:
    """Evaluations needed to get below the target; failures count as the budget."""
    return trace.fes_to_target if trace.fes_to_target is not None else cfg.max_fes


def _slug(text: str) -> str:
    return text.replace(":", "_").replace("=", "")


def run_trials(settings: dict, n: int, cfg: MmesConfig, seeds: list[int], out: Optional[Path],
               tag: str, comments: list[str]) -> list[tuple]:
    restarts = str(settings["restarts"]).lower() in ("on", "1", "true", "yes")
    jobs = []
    for seed in seeds:
        path = None if out is None else out / f"trace_{tag}_seed{seed}.csv"
        jobs.append((settings["problem"], n, cfg, seed, restarts, settings["trace_every"],
                     settings["max_rotation_dim"], path, comments))
    workers = worker_count(len(jobs))
    if workers == 1:
        return [_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial_job, jobs))


def summary_rows(results: list[tuple]) -> list[tuple]:
    rows = list(results)
    rows.append(("median", statistics.median(r[1] for r in results),
                 statistics.median(r[2] for r in results),
                 statistics.median(r[3] for r in results), ""))
    return rows


def cmd_run(settings: dict) -> int:
    n = problem_dim(settings)
    cfg = build_config(settings, n)
    seeds = trial_seeds(settings)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{_slug(settings['problem'])}_n{n}"
    comments = header_lines("run", {"problem": settings["problem"], "restarts": settings["restarts"],
                                    "trace_every": settings["trace_every"], **cfg.as_dict()})
    results = run_trials(settings, n, cfg, seeds, out, tag, comments)
    write_csv(out / f"summary_{tag}.csv", comments + [f"# seeds={','.join(map(str, seeds))}"],
              SUMMARY_COLUMNS, summary_rows(results))
    med = statistics.median(r[1] for r in results)
    print(f"{settings['problem']} n={n}: median FEs to target {fmt(med)} over {len(seeds)} trials")
    return 0


def cmd_sweep_l(settings: dict) -> int:
    l_values = parse_int_list(settings["l_values"])
    if not l_values:
        raise ParameterError("--l-values must not be empty")
    dims = parse_int_list(settings["dims"]) if settings["dims"] else [problem_dim(settings)]
    seeds = trial_seeds(settings)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in dims:
        for l in l_values:
            cfg = build_config(settings, n, l=l)
            results = run_trials(settings, n, cfg, seeds, None, "", [])
            fes = [r[1] for r in results]
            successes = sum(r[4] == "TargetReached" for r in results)
            rows.append((l, n, statistics.median(fes), len(results), successes))
            print(f"l={l} n={n}: median FEs {fmt(rows[-1][2])} ({successes}/{len(results)} reached)")
    comments = header_lines("sweep-l", {"problem": settings["problem"], "restarts": settings["restarts"],
                                        "seeds": ",".join(map(str, seeds)),
                                        **build_config(settings, dims[0]).as_dict()})
    write_csv(out / f"sweep_l_{_slug(settings['problem'])}.csv", comments, SWEEP_COLUMNS, rows)
    return 0


def time_per_evaluation(cfg: MmesConfig, prob: Problem, seed: int, generations: int,
                        warmup: int = 10) -> float:
    """CPU seconds spent by the optimizer per evaluation, objective time excluded."""
    rng = make_rng(seed, OPTIMIZER_STREAM)
    state = init_state(cfg, rng)
    weights = cfg.weights
    for _ in range(warmup):
        step(state, cfg, prob, rng, weights)
    state.eval_seconds = 0.0
    t0 = time.perf_counter()
    for _ in range(generations):
        step(state, cfg, prob, rng, weights)
    elapsed = time.perf_counter() - t0 - state.eval_seconds
    return elapsed / (generations * cfg.lam)


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def timing_rows(dims: list[int], settings: dict) -> list[tuple]:
    rows = []
    for n in dims:
        cfg = build_config({**settings, "target": -math.inf}, n)
        prob = Problem(settings["problem"].split(":")[0], n)
        rows.append((n, cfg.lam, cfg.l, settings["generations"],
                     time_per_evaluation(cfg, prob, settings["seed"], settings["generations"])))
    return rows


def cmd_timing(settings: dict) -> int:
    dims = parse_int_list(settings["dims"] or "256,1024,4096")
    if not dims:
        raise ParameterError("--dims must not be empty")
    rows = timing_rows(dims, settings)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    extra = []
    if len(dims) >= 2:
        slope = loglog_slope([r[0] for r in rows], [r[4] for r in rows])
        extra.append(f"loglog_slope={fmt(slope)}")
        print(f"log-log slope of runtime per evaluation: {slope:.3f}")
    comments = header_lines("timing", {"problem": settings["problem"], "l": settings["mixing_strength"],
                                       "seed": settings["seed"]}, extra)
    write_csv(out / "timing.csv", comments, TIMING_COLUMNS, rows)
    for r in rows:
        print(f"n={r[0]}: {r[4]:.3e} s per evaluation")
    return 0


def cmd_verify(settings: dict) -> int:
    l_values = parse_int_list(settings["l_values"])
    rows, checks = run_verification(l_values, seed=settings["seed"], samples=settings["samples"],
                                    base=BaseDistribution.parse(settings["base"]))
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    comments = header_lines("verify", {"seed": settings["seed"], "samples": settings["samples"],
                                       "base": settings["base"]})
    write_csv(out / "verify.csv", comments, VERIFY_COLUMNS,
              [(r.l, r.nv, r.sme4, r.sme6, r.min_kurtosis, r.ks_stat) for r in rows])
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [mmes] section")
    common.add_argument("--seed", type=parse_seed, help="decimal 64-bit unsigned seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--mixing-strength", dest="mixing_strength", type=int)
    common.add_argument("--base", choices=[b.value for b in BaseDistribution])
    common.add_argument("--problem", help="e.g. elli:alpha=6:rot=1:dim=1000")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--dim", type=int)
    opt.add_argument("--seeds", help="comma separated trial seeds (overrides --seed/--trials)")
    opt.add_argument("--trials", type=int, help="number of consecutive seeds starting at --seed")
    opt.add_argument("--max-fes", dest="max_fes", type=lambda v: int(float(v)))
    opt.add_argument("--target", type=float)
    opt.add_argument("--restarts", choices=["on", "off"])
    opt.add_argument("--trace-every", dest="trace_every", type=int)
    opt.add_argument("--c-sigma", dest="c_sigma", type=float)
    opt.add_argument("--d-sigma", dest="d_sigma", type=float)
    opt.add_argument("--alpha-z", dest="alpha_z", type=float)
    opt.add_argument("--sigma-uses-new-w", dest="sigma_uses_new_w", action="store_const", const=True,
                     help="z-test on the freshly smoothed W instead of the previous one")
    opt.add_argument("--max-rotation-dim", dest="max_rotation_dim", type=int)

    parser = argparse.ArgumentParser(prog="mmes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common, opt], help="independent trials on one problem")
    p = sub.add_parser("sweep-l", parents=[common, opt], help="median FEs per (l, n)")
    p.add_argument("--l-values", dest="l_values")
    p.add_argument("--dims")
    p = sub.add_parser("timing", parents=[common], help="runtime per evaluation")
    p.add_argument("--dims")
    p.add_argument("--generations", type=int)
    p = sub.add_parser("verify", parents=[common], help="moment study and W null test")
    p.add_argument("--l-values", dest="l_values")
    p.add_argument("--samples", type=int)
    return parser


COMMANDS = {"run": cmd_run, "sweep-l": cmd_sweep_l, "timing": cmd_timing, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve(args)
        return COMMANDS[args.command](settings)
    except (ParameterError, OSError) as exc:
        print(f"mmes: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
