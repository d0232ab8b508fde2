"""Relative running time of three evaluation pipelines over one parameter sequence.

baseline      re-parse the library and rebuild the model for every evaluation
update        re-parse the library, update the existing model in place
update_cache  update in place, library served from an XsCache
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
import orjson

from mtrbench.model import ParamPoint, SlabModel, build_unit_cell, update_densities
from mtrbench.objective import Evaluation, score_model
from mtrbench.optrun import JSON_OPTS
from mtrbench.runconfig import RunConfig
from mtrbench.xslib import XsCache, load_library


logger = logging.getLogger(__name__)

PIPELINES = ("baseline", "update", "update_cache")
MIN_EVALS = 20


@dataclass
class SpeedupReport:
    n_evals: int
    seed: int
    baseline_ms: float
    update_ms: float
    update_cache_ms: float
    setup_ms: Dict[str, float]
    transport_ms: float
    raw_ms: Dict[str, float]
    identical: bool
    relative: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.relative:
            self.relative = {
                "baseline": 1.0,
                "update": self.update_ms / self.baseline_ms,
                "update_cache": self.update_cache_ms / self.baseline_ms,
            }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_evals": self.n_evals,
            "seed": self.seed,
            "baseline_ms": self.baseline_ms,
            "update_ms": self.update_ms,
            "update_cache_ms": self.update_cache_ms,
            "setup_ms": self.setup_ms,
            "transport_ms": self.transport_ms,
            "raw_ms": self.raw_ms,
            "relative": self.relative,
            "identical": self.identical,
        }

    def table(self) -> str:
        rows = [f"{'pipeline':<14}{'ms/eval':>12}{'relative':>11}{'raw ms':>12}"]
        for name in PIPELINES:
            ms = getattr(self, f"{name}_ms")
            rows.append(f"{name:<14}{ms:>12.3f}{self.relative[name]:>10.0%} {self.raw_ms[name]:>11.3f}")
        rows.append(f"physics identical across pipelines: {'yes' if self.identical else 'NO'}")
        return "\n".join(rows)


def sample_params(cfg: RunConfig, n: int, seed: int) -> List[ParamPoint]:
    rng = np.random.default_rng(seed)
    x = cfg.bounds.lower + rng.random((n, 2)) * (cfg.bounds.upper - cfg.bounds.lower)
    return [ParamPoint(float(u), float(w)) for u, w in x]


Setup = Callable[[ParamPoint], SlabModel]


def _baseline(cfg: RunConfig) -> Setup:
    def setup(p: ParamPoint) -> SlabModel:
        lib = load_library(cfg.xs_library)
        return build_unit_cell(cfg.geometry, p, lib, cfg.bounds)

    return setup


def _update(cfg: RunConfig, cache: XsCache | None) -> Setup:
    model = build_unit_cell(cfg.geometry, cfg.bounds.center, load_library(cfg.xs_library), cfg.bounds)

    def setup(p: ParamPoint) -> SlabModel:
        lib = load_library(cfg.xs_library, cache)
        update_densities(model, p, lib, cfg.bounds)
        return model

    return setup


def _time_pipeline(cfg: RunConfig, setup: Setup, points: List[ParamPoint]) -> Tuple[List[Evaluation], np.ndarray, np.ndarray]:
    evaluations = []
    setup_ms = np.empty(len(points))
    transport_ms = np.empty(len(points))
    for i, p in enumerate(points):
        t0 = time.perf_counter()
        model = setup(p)
        t1 = time.perf_counter()
        ev = score_model(model, p, cfg.mc, cfg.objective, i)
        t2 = time.perf_counter()
        setup_ms[i] = (t1 - t0) * 1000.0
        transport_ms[i] = (t2 - t1) * 1000.0
        evaluations.append(ev)
    return evaluations, setup_ms, transport_ms


def bench_speedup(cfg: RunConfig, n_evals: int = 100, seed: int = 1) -> SpeedupReport:
    if n_evals < MIN_EVALS:
        raise ValueError(f"n_evals must be >= {MIN_EVALS}")
    points = sample_params(cfg, n_evals, seed)
    setups = {
        "baseline": _baseline(cfg),
        "update": _update(cfg, None),
        "update_cache": _update(cfg, XsCache()),
    }
    physics: Dict[str, list] = {}
    setup_median: Dict[str, float] = {}
    raw_median: Dict[str, float] = {}
    transport_all = []
    for name in PIPELINES:
        logger.info("Timing %s pipeline over %d evaluations", name, n_evals)
        evaluations, setup_ms, transport_ms = _time_pipeline(cfg, setups[name], points)
        physics[name] = [ev.physics() for ev in evaluations]
        setup_median[name] = float(np.median(setup_ms))
        raw_median[name] = float(np.median(setup_ms + transport_ms))
        transport_all.append(transport_ms)

    # Transport work is the same in every pipeline, so one pooled median is charged to all.
    transport = float(np.median(np.concatenate(transport_all)))
    identical = physics["baseline"] == physics["update"] == physics["update_cache"]
    if not identical:
        logger.warning("pipelines disagree on physics outputs")
    return SpeedupReport(
        n_evals=n_evals,
        seed=seed,
        baseline_ms=setup_median["baseline"] + transport,
        update_ms=setup_median["update"] + transport,
        update_cache_ms=setup_median["update_cache"] + transport,
        setup_ms=setup_median,
        transport_ms=transport,
        raw_ms=raw_median,
        identical=identical,
    )


def save_report(report: SpeedupReport, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(orjson.dumps(report.to_dict(), option=JSON_OPTS))
