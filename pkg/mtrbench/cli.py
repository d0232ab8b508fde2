"""Command-line front end: optimize, landscape, bench-speedup, validate.

Exit status is 0 on success, 1 when a run or check fails, 2 for usage errors
(bad arguments, or an output directory that already holds a run).
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import orjson

from config import LOG_LEVEL, default_threads
from mtrbench.checks import run_checks
from mtrbench.errors import ConfigError, MtrBenchError, OptimizationAborted
from mtrbench.jaya import jaya_run
from mtrbench.landscape import (
    FIELDS,
    critical_regions,
    grid_scan,
    render_heatmap,
    render_history_map,
    write_csv,
)
from mtrbench.objective import Evaluation, Evaluator, RunLog
from mtrbench.optrun import JSON_OPTS, OptRun, load_history, save_run
from mtrbench.ppo_es import ppo_es_run
from mtrbench.runconfig import RunConfig, load_run_config
from mtrbench.speedup import MIN_EVALS, bench_speedup, save_report
from mtrbench.xslib import load_library


logger = logging.getLogger(__name__)

ALGORITHMS = ("jaya", "ppo-es")
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Raised for bad argument values and for refused overwrites."""


def parse_resolution(text: str) -> Tuple[int, int]:
    parts = text.lower().replace("\u00d7", "x").split("x")
    try:
        sizes = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution {text!r} is not NxM") from None
    if len(sizes) == 1:
        sizes = sizes * 2
    if len(sizes) != 2 or min(sizes) < 2:
        raise argparse.ArgumentTypeError(f"resolution {text!r} must be NxM with N, M >= 2")
    return sizes


def parse_args(argv: Optional[Iterable[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="mtrbench", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="Run config JSON (see data/bench.json).")
    common.add_argument(
        "--threads",
        type=int,
        default=default_threads(),
        help="Evaluation worker processes (default: MTRBENCH_THREADS or CPU count).",
    )
    common.add_argument("--out", type=Path, help="Output root (default: the config's output_dir).")
    common.add_argument("--force", action="store_true", help="Overwrite an existing run directory.")
    common.add_argument("--verbose", action="store_true", help="Enable debug logging.")

    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", parents=[common], help="Run JAYA or PPO-ES on the benchmark.")
    opt.add_argument("--algo", choices=ALGORITHMS, default="jaya")
    opt.add_argument("--seed", type=int, help="Optimizer seed (default: the config's).")
    opt.add_argument("--evals", type=int, help="Evaluation budget (default: the config's).")

    land = sub.add_parser("landscape", parents=[common], help="Grid-scan (U, W) and map critical regions.")
    land.add_argument("--res", type=parse_resolution, help="Grid size as NxM (default: the config's).")
    land.add_argument(
        "--history",
        type=Path,
        action="append",
        default=[],
        help="Optimizer run directory whose samples are overlaid on the heatmaps; repeatable.",
    )

    bench = sub.add_parser("bench-speedup", parents=[common], help="Relative running time of the update pipelines.")
    bench.add_argument("--evals", type=int, default=100)
    bench.add_argument("--seed", type=int, default=1)

    sub.add_parser("validate", parents=[common], help="Library, oracle and gradient checks.")
    return parser.parse_args(args=argv)


def _run_dir(cfg: RunConfig, args: argparse.Namespace, name: str) -> Path:
    root = args.out if args.out is not None else cfg.output_dir
    out = root / name
    if out.exists() and any(out.iterdir()) and not args.force:
        raise UsageError(f"{out} already holds a run; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


EVALS_LOG = "evals.jsonl"


def _evaluator(cfg: RunConfig, workers: int, out: Path) -> Evaluator:
    lib = load_library(cfg.xs_library)
    log_path = out / EVALS_LOG
    log_path.unlink(missing_ok=True)
    return Evaluator(lib, cfg.geometry, cfg.mc, cfg.objective, cfg.bounds, workers=workers, run_log=RunLog(log_path))


def _summary(run: OptRun) -> str:
    best = run.best
    if best is None:
        return f"{run.algorithm}: no evaluations"
    return (
        f"{run.algorithm}: best U={best.params.u_density:.4f} W={best.params.w_density:.4f} "
        f"k={best.k:.5f}+-{best.k_std:.5f} flux={best.fast_flux:.5g} fitness={best.fitness:.6f} "
        f"({len(run.history)} evaluations)"
    )


def _write_run(run: OptRun, cfg: RunConfig, out: Path) -> None:
    save_run(run, out)
    if run.history:
        render_history_map(run.history, "fitness", out / "history_fitness.svg", bounds=cfg.bounds)


def _algorithm_config(cfg: RunConfig, args: argparse.Namespace):
    if args.algo == "jaya":
        algo_cfg = cfg.jaya
        if args.evals is not None:
            algo_cfg = replace(algo_cfg, max_evals=args.evals)
    else:
        algo_cfg = cfg.ppo_es
        if args.evals is not None:
            per_gen = algo_cfg.es_pop * algo_cfg.steps_per_update
            algo_cfg = replace(algo_cfg, generations=max(1, args.evals // per_gen))
    if args.seed is not None:
        algo_cfg = replace(algo_cfg, seed=args.seed)
    return algo_cfg


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    try:
        algo_cfg = _algorithm_config(cfg, args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    seed = algo_cfg.seed
    out = _run_dir(cfg, args, f"optimize-{args.algo}-seed{seed}")
    logger.info("Running %s (seed %d, %d workers) into %s", args.algo, seed, args.threads, out)

    runner = jaya_run if args.algo == "jaya" else ppo_es_run
    with _evaluator(cfg, args.threads, out) as evaluator:
        try:
            run = runner(algo_cfg, evaluator, cfg.bounds)
        except OptimizationAborted as exc:
            logger.error("%s", exc)
            _write_run(exc.run, cfg, out)
            print(_summary(exc.run))
            return EXIT_FAILED
    _write_run(run, cfg, out)
    print(_summary(run))
    return EXIT_OK


def _load_overlays(paths: List[Path]) -> List[Evaluation]:
    history: List[Evaluation] = []
    for path in paths:
        try:
            history.extend(load_history(path))
        except (OSError, orjson.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot read history {path}: {exc}") from exc
    return history


def cmd_landscape(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    resolution = args.res or cfg.landscape.resolution
    overlay = _load_overlays(args.history)
    out = _run_dir(cfg, args, f"landscape-{resolution[0]}x{resolution[1]}")

    with _evaluator(cfg, args.threads, out) as evaluator:
        lmap = grid_scan(evaluator, resolution, cfg.bounds)
    write_csv(lmap, out / "landscape.csv")
    report = critical_regions(lmap, cfg.landscape.tolerance)
    (out / "critical_regions.json").write_bytes(orjson.dumps(report.to_dict(), option=JSON_OPTS))
    for name in FIELDS:
        render_heatmap(lmap, name, out / f"{name}.svg", history=overlay or None, tol=cfg.landscape.tolerance)

    print(f"{report.component_count} critical component(s) at |k - 1| <= {cfg.landscape.tolerance:g}")
    for n, comp in enumerate(report.components):
        print(
            f"  #{n}: {len(comp.cells)} cells, W in [{comp.w_min:.3f}, {comp.w_max:.3f}], "
            f"best U={comp.best_u:.3f} W={comp.best_w:.3f} k={comp.best_k:.4f} "
            f"flux={comp.best_flux:.4g} fitness={comp.best_fitness:.6f}"
        )
    failed = int(lmap.failed.sum())
    if failed:
        logger.error("%d grid cell(s) failed; partial map written to %s", failed, out)
        return EXIT_FAILED
    return EXIT_OK


def cmd_bench_speedup(args: argparse.Namespace) -> int:
    if args.evals < MIN_EVALS:
        raise UsageError(f"--evals must be >= {MIN_EVALS}")
    cfg = load_run_config(args.config)
    out = _run_dir(cfg, args, f"bench-speedup-n{args.evals}-seed{args.seed}")
    report = bench_speedup(cfg, args.evals, args.seed)
    save_report(report, out / "speedup.json")
    print(report.table())
    return EXIT_OK if report.identical else EXIT_FAILED


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    results = run_checks(cfg)
    for result in results:
        print(result.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "optimize": cmd_optimize,
    "landscape": cmd_landscape,
    "bench-speedup": cmd_bench_speedup,
    "validate": cmd_validate,
}


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(message)s",
    )
    if args.threads < 1:
        print("mtrbench: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mtrbench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MtrBenchError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"mtrbench: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
