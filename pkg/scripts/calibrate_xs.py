#!/usr/bin/env python3
"""Print k_inf per material and a coarse k / fast-flux table over (U, W).

Used when re-tuning data/default.xs.json: the shipped library should leave
two separate near-critical bands, one at low W and one at high W.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from mtrbench.errors import MtrBenchError  # noqa: E402
from mtrbench.landscape import grid_scan  # noqa: E402
from mtrbench.model import DEFAULT_BOUNDS, GeometryConfig  # noqa: E402
from mtrbench.objective import Evaluator, ObjectiveConfig  # noqa: E402
from mtrbench.transport import McConfig, kinf_analytic  # noqa: E402
from mtrbench.xslib import load_library  # noqa: E402

LOG = logging.getLogger("calibrate")


def parse_args(argv: Optional[Iterable[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--xs", type=Path, default=ROOT / "data" / "default.xs.json")
    parser.add_argument("--grid", type=int, nargs=2, default=[8, 8], metavar=("N_U", "N_W"))
    parser.add_argument("--particles", type=int, default=500)
    parser.add_argument("--batches", type=int, default=30)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging.")
    return parser.parse_args(args=argv)


def main(argv: Optional[Iterable[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        lib = load_library(args.xs)
    except MtrBenchError as exc:
        LOG.error("%s", exc)
        return 1

    print("material      k_inf")
    for name in sorted(lib.materials):
        try:
            print(f"{name:<12}{kinf_analytic(lib.material(name)):>10.6f}")
        except (ValueError, MtrBenchError) as exc:
            print(f"{name:<12}  n/a ({exc})")

    mc = McConfig(particles_per_batch=args.particles, n_batches=args.batches, n_inactive=max(1, args.batches // 5))
    with Evaluator(lib, GeometryConfig(), mc, ObjectiveConfig(), DEFAULT_BOUNDS, workers=args.threads) as evaluator:
        lmap = grid_scan(evaluator, tuple(args.grid), DEFAULT_BOUNDS)

    header = "W \\ U   " + "".join(f"{u:>9.2f}" for u in lmap.u_grid)
    for title, values, fmt in (("k", lmap.k, "{:>9.3f}"), ("fast flux", lmap.flux, "{:>9.3g}")):
        print(f"\n{title}")
        print(header)
        for j in range(lmap.w_grid.size - 1, -1, -1):
            cells = "".join(fmt.format(v) if np.isfinite(v) else f"{'fail':>9}" for v in values[:, j])
            print(f"{lmap.w_grid[j]:>8.3f}{cells}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
