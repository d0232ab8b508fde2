"""Fitness function and the params -> model -> transport -> fitness pipeline."""

import logging
import threading
import time
from concurrent import futures
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Sequence

import numpy as np
import orjson

from mtrbench.model import (
    DEFAULT_BOUNDS,
    GeometryConfig,
    ParamBounds,
    ParamPoint,
    SlabModel,
    build_unit_cell,
    update_densities,
)
from mtrbench.transport import McConfig, RunResult, run_keig
from mtrbench.xslib import XsLibrary


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveConfig:
    criticality_constant: float = 1.0
    flux_constant: float = 1.0

    def __post_init__(self) -> None:
        if self.criticality_constant <= 0 or self.flux_constant <= 0:
            raise ValueError("objective constants must be > 0")


@dataclass(frozen=True)
class Evaluation:
    params: ParamPoint
    k: float
    k_std: float
    fast_flux: float
    fitness: float
    eval_index: int
    wall_time_ms: float = 0.0
    fast_flux_std: float = 0.0
    result: RunResult | None = None

    def physics(self) -> tuple:
        """Everything except timing, for reproducibility comparisons."""
        return (self.params, self.k, self.k_std, self.fast_flux, self.fast_flux_std, self.fitness, self.eval_index)

    def to_record(self, timing: bool = True, **extra: Any) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "eval": self.eval_index,
            "u": self.params.u_density,
            "w": self.params.w_density,
            "k": self.k,
            "k_std": self.k_std,
            "flux": self.fast_flux,
            "flux_std": self.fast_flux_std,
            "fitness": self.fitness,
        }
        if timing:
            record["ms"] = self.wall_time_ms
        record.update(extra)
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "Evaluation":
        return cls(
            params=ParamPoint(record["u"], record["w"]),
            k=record["k"],
            k_std=record["k_std"],
            fast_flux=record["flux"],
            fitness=record["fitness"],
            eval_index=record["eval"],
            wall_time_ms=record.get("ms", 0.0),
            fast_flux_std=record.get("flux_std", 0.0),
        )


def fitness(k: float, phi: float, cfg: ObjectiveConfig = ObjectiveConfig()) -> float:
    """(|k - 1| + a) / (phi + b); smaller is better."""
    if phi < 0:
        raise ValueError(f"flux must be >= 0, got {phi}")
    return (abs(k - 1.0) + cfg.criticality_constant) / (phi + cfg.flux_constant)


def eval_seed(seed: int, eval_index: int) -> int:
    state = np.random.SeedSequence([seed, eval_index]).generate_state(1, dtype=np.uint64)[0]
    return int(state) >> 1


class RunLog:
    """Append-only JSONL file; each record is written with one locked write."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: Dict[str, Any]) -> None:
        line = orjson.dumps(record) + b"\n"
        with self._lock:
            with self.path.open("ab") as fp:
                fp.write(line)


def evaluate(
    params: ParamPoint,
    model: SlabModel,
    lib: XsLibrary,
    mc: McConfig,
    obj: ObjectiveConfig,
    eval_index: int = 0,
    log: RunLog | None = None,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> Evaluation:
    start = time.perf_counter()
    update_densities(model, params, lib, bounds)
    evaluation = score_model(model, params, mc, obj, eval_index)
    evaluation = replace(evaluation, wall_time_ms=(time.perf_counter() - start) * 1000.0)
    logger.debug(
        "eval %d U=%.4f W=%.4f k=%.5f+-%.5f flux=%.5g fitness=%.6f",
        eval_index,
        params.u_density,
        params.w_density,
        evaluation.k,
        evaluation.k_std,
        evaluation.fast_flux,
        evaluation.fitness,
    )
    if log is not None:
        log.append(evaluation.to_record())
    return evaluation


def score_model(model: SlabModel, params: ParamPoint, mc: McConfig, obj: ObjectiveConfig, eval_index: int) -> Evaluation:
    """Transport an already-updated model and score it; the seed depends only on eval_index."""
    result = run_keig(model, replace(mc, seed=eval_seed(mc.seed, eval_index)))
    return Evaluation(
        params=params,
        k=result.k_mean,
        k_std=result.k_std,
        fast_flux=result.fast_flux,
        fitness=fitness(result.k_mean, result.fast_flux, obj),
        eval_index=eval_index,
        fast_flux_std=result.fast_flux_std,
        result=result,
    )


# Per-process state of pool workers, filled by _init_worker.
_worker: Dict[str, Any] = {}


def _init_worker(
    lib: XsLibrary, geometry: GeometryConfig, mc: McConfig, obj: ObjectiveConfig, bounds: ParamBounds
) -> None:
    _worker.update(
        lib=lib,
        mc=mc,
        obj=obj,
        bounds=bounds,
        model=build_unit_cell(geometry, bounds.center, lib, bounds),
    )


def _worker_evaluate(params: ParamPoint, eval_index: int) -> Evaluation:
    return evaluate(
        params,
        _worker["model"],
        _worker["lib"],
        _worker["mc"],
        _worker["obj"],
        eval_index,
        bounds=_worker["bounds"],
    )


class Evaluator:
    """Objective bound to one library and configuration.

    Calls are numbered in submission order. With more than one worker a
    batch is fanned out over a process pool whose workers each hold their
    own SlabModel; an Evaluation depends only on its point and index, so the
    results match a serial loop. Finished Evaluations go to ``run_log`` in
    submission order as they arrive, before any failure is raised.
    """

    def __init__(
        self,
        lib: XsLibrary,
        geometry: GeometryConfig,
        mc: McConfig,
        obj: ObjectiveConfig,
        bounds: ParamBounds = DEFAULT_BOUNDS,
        workers: int = 1,
        run_log: RunLog | None = None,
    ) -> None:
        self.lib = lib
        self.geometry = geometry
        self.mc = mc
        self.obj = obj
        self.bounds = bounds
        self.workers = max(1, workers)
        self.run_log = run_log
        self.calls = 0
        self._model: SlabModel | None = None
        self._pool: futures.ProcessPoolExecutor | None = None

    def __enter__(self) -> "Evaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True, cancel_futures=True)
            self._pool = None

    def _evaluate_here(self, params: ParamPoint, eval_index: int) -> Evaluation:
        if self._model is None:
            self._model = build_unit_cell(self.geometry, self.bounds.center, self.lib, self.bounds)
        return evaluate(params, self._model, self.lib, self.mc, self.obj, eval_index, bounds=self.bounds)

    def _pool_outcomes(self, points: Sequence[ParamPoint], indices: range) -> Iterator[Any]:
        if self._pool is None:
            logger.info("Starting %d evaluation worker processes", self.workers)
            self._pool = futures.ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=_init_worker,
                initargs=(self.lib, self.geometry, self.mc, self.obj, self.bounds),
            )
        jobs = [self._pool.submit(_worker_evaluate, p, i) for p, i in zip(points, indices)]
        for job in jobs:
            try:
                yield job.result()
            except Exception as exc:
                yield exc

    def evaluate_batch(self, points: Sequence[ParamPoint], return_exceptions: bool = False) -> List[Any]:
        start = self.calls
        self.calls += len(points)
        indices = range(start, start + len(points))
        if self.workers == 1 or len(points) == 1:
            stream = (_guard(self._evaluate_here, p, i) for p, i in zip(points, indices))
        else:
            stream = self._pool_outcomes(points, indices)
        outcomes = []
        for outcome in stream:
            if self.run_log is not None and isinstance(outcome, Evaluation):
                self.run_log.append(outcome.to_record())
            outcomes.append(outcome)
        return _settle(outcomes, return_exceptions)


class FunctionEvaluator:
    """Evaluator over a plain scalar function of (u, w), for algorithm checks."""

    def __init__(self, fn: Callable[[float, float], float], bounds: ParamBounds = DEFAULT_BOUNDS) -> None:
        self.fn = fn
        self.bounds = bounds
        self.calls = 0

    def _evaluate_here(self, params: ParamPoint, eval_index: int) -> Evaluation:
        value = float(self.fn(params.u_density, params.w_density))
        return Evaluation(
            params=params, k=float("nan"), k_std=0.0, fast_flux=float("nan"), fitness=value, eval_index=eval_index
        )

    def evaluate_batch(self, points: Sequence[ParamPoint], return_exceptions: bool = False) -> List[Any]:
        outcomes = []
        for p in points:
            outcomes.append(_guard(self._evaluate_here, p, self.calls))
            self.calls += 1
        return _settle(outcomes, return_exceptions)


def _guard(fn, params: ParamPoint, index: int):
    try:
        return fn(params, index)
    except Exception as exc:
        return exc


def _settle(outcomes: List[Any], return_exceptions: bool) -> List[Any]:
    """Raise the first failure of a finished batch unless failures were asked for."""
    if not return_exceptions:
        for outcome in outcomes:
            if isinstance(outcome, Exception):
                raise outcome
    return outcomes
