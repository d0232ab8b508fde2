#!/usr/bin/env python3
"""Run JAYA and PPO-ES over paired seeds and compare where they end up.

Each (algorithm, seed) pair is a separate ``python -m mtrbench optimize``
process. When a critical-region report from ``landscape`` is given, every
point is classified by the W threshold between the two critical basins.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import subprocess
import sys
import time
from pathlib import Path
from typing import Iterable, List, Optional

import orjson

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from mtrbench.optrun import JSON_OPTS  # noqa: E402

LOG = logging.getLogger("compare")
ALGORITHMS = ("jaya", "ppo-es")


def parse_args(argv: Optional[Iterable[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("config", type=Path, help="Run config JSON.")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    parser.add_argument("--out", type=Path, default=ROOT / "runs" / "compare")
    parser.add_argument("--evals", type=int, help="Evaluation budget passed to both algorithms.")
    parser.add_argument("--threads", type=int, default=1, help="Evaluation worker processes per optimize run.")
    parser.add_argument("--parallel", type=int, default=4, help="Optimize processes run at once.")
    parser.add_argument(
        "--regions",
        type=Path,
        help="critical_regions.json from a landscape run; enables basin classification.",
    )
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging.")
    return parser.parse_args(args=argv)


def _command(args: argparse.Namespace, algo: str, seed: int) -> List[str]:
    cmd = [
        sys.executable, "-m", "mtrbench", "optimize", str(args.config),
        "--algo", algo, "--seed", str(seed), "--out", str(args.out),
        "--threads", str(args.threads), "--force",
    ]
    if args.evals is not None:
        cmd += ["--evals", str(args.evals)]
    return cmd


def run_all(args: argparse.Namespace) -> int:
    pending = [(algo, seed) for seed in args.seeds for algo in ALGORITHMS]
    running: list[tuple[str, int, subprocess.Popen]] = []
    failures = 0
    try:
        while pending or running:
            while pending and len(running) < args.parallel:
                algo, seed = pending.pop(0)
                proc = subprocess.Popen(_command(args, algo, seed), cwd=str(ROOT), stdout=subprocess.DEVNULL)
                running.append((algo, seed, proc))
                LOG.info("Started %s seed %d with PID %d", algo, seed, proc.pid)
            time.sleep(0.5)
            for item in list(running):
                algo, seed, proc = item
                if proc.poll() is None:
                    continue
                running.remove(item)
                if proc.returncode != 0:
                    failures += 1
                    LOG.warning("%s seed %d exited with code %d", algo, seed, proc.returncode)
                else:
                    LOG.info("%s seed %d finished", algo, seed)
    except KeyboardInterrupt:
        LOG.warning("Interrupted, terminating optimize processes")
        for _, _, proc in running:
            proc.terminate()
        for _, _, proc in running:
            try:
                proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                proc.kill()
        raise
    return failures


def _basin(w: float, w_split: float | None) -> str:
    if w_split is None:
        return "-"
    return "low-W" if w < w_split else "high-W"


def summarize(args: argparse.Namespace, w_split: float | None) -> dict:
    summary: dict = {"w_split": w_split, "algorithms": {}}
    for algo in ALGORITHMS:
        rows = []
        for seed in args.seeds:
            run_dir = args.out / f"optimize-{algo}-seed{seed}"
            best_path = run_dir / "best.json"
            if not best_path.exists():
                continue
            best = orjson.loads(best_path.read_bytes())
            ws = [orjson.loads(line)["w"] for line in (run_dir / "history.jsonl").read_bytes().splitlines() if line]
            basins = sorted({_basin(w, w_split) for w in ws})
            rows.append(
                {
                    "seed": seed,
                    "u": best["u"],
                    "w": best["w"],
                    "k": best["k"],
                    "flux": best["flux"],
                    "fitness": best["fitness"],
                    "basin": _basin(best["w"], w_split),
                    "basins_sampled": basins,
                }
            )
        fitnesses = [r["fitness"] for r in rows]
        summary["algorithms"][algo] = {
            "runs": rows,
            "median_best_fitness": statistics.median(fitnesses) if fitnesses else None,
        }
    return summary


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    w_split = None
    if args.regions is not None:
        w_split = orjson.loads(args.regions.read_bytes()).get("w_split")
        LOG.info("Basin threshold W=%s from %s", w_split, args.regions)

    failures = run_all(args)
    summary = summarize(args, w_split)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "summary.json").write_bytes(orjson.dumps(summary, option=JSON_OPTS))

    for algo, block in summary["algorithms"].items():
        print(f"{algo}: median best fitness {block['median_best_fitness']}")
        for r in block["runs"]:
            print(
                f"  seed {r['seed']}: U={r['u']:.3f} W={r['w']:.3f} k={r['k']:.4f} flux={r['flux']:.4g} "
                f"fitness={r['fitness']:.6f} basin={r['basin']} sampled={','.join(r['basins_sampled'])}"
            )
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
