"""JAYA: move toward the population best, away from the worst, keep improvements."""

import logging
from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from mtrbench.errors import MtrBenchError, OptimizationAborted
from mtrbench.model import DEFAULT_BOUNDS, ParamBounds, ParamPoint
from mtrbench.objective import Evaluation
from mtrbench.optrun import OptRun


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JayaConfig:
    pop_size: int = 10
    max_evals: int = 400
    seed: int = 1
    # Box the initial population is drawn from; None means the full bounds.
    init_bounds: ParamBounds | None = None

    def __post_init__(self) -> None:
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4")
        if self.max_evals < self.pop_size:
            raise ValueError("max_evals must be >= pop_size")


@dataclass
class Individual:
    params: ParamPoint
    fitness: float | None = None
    evaluation: Evaluation | None = None

    @property
    def x(self) -> np.ndarray:
        return self.params.as_array()


def _points(x: np.ndarray) -> List[ParamPoint]:
    return [ParamPoint(float(u), float(w)) for u, w in x]


def _evaluate(evaluator, points: List[ParamPoint], run: OptRun | None, generation: int) -> List[Evaluation]:
    """Evaluate a batch; finished evaluations are recorded before a failure is raised."""
    outcomes = evaluator.evaluate_batch(points, return_exceptions=True)
    failures = [o for o in outcomes if isinstance(o, Exception)]
    if run is not None:
        for outcome in outcomes:
            if not isinstance(outcome, Exception):
                run.record(outcome, gen=generation)
    if failures:
        raise failures[0]
    return outcomes


def jaya_step(
    pop: List[Individual],
    best: Individual,
    worst: Individual,
    rng: np.random.Generator,
    evaluator,
    bounds: ParamBounds = DEFAULT_BOUNDS,
    run: OptRun | None = None,
    generation: int = 0,
) -> List[Individual]:
    x = np.array([ind.x for ind in pop])
    r1 = rng.random(x.shape)
    r2 = rng.random(x.shape)
    candidates = x + r1 * (best.x - np.abs(x)) - r2 * (worst.x - np.abs(x))
    candidates = bounds.clip(candidates)

    results = _evaluate(evaluator, _points(candidates), run, generation)
    next_pop = []
    for ind, ev in zip(pop, results):
        if ev.fitness < ind.fitness:
            next_pop.append(Individual(ev.params, ev.fitness, ev))
        else:
            next_pop.append(ind)
    return next_pop


def _best_worst(pop: List[Individual]) -> tuple:
    order = sorted(range(len(pop)), key=lambda i: pop[i].fitness)
    return pop[order[0]], pop[order[-1]]


def jaya_run(cfg: JayaConfig, evaluator, bounds: ParamBounds = DEFAULT_BOUNDS) -> OptRun:
    rng = np.random.default_rng(cfg.seed)
    init = cfg.init_bounds or bounds
    run = OptRun(algorithm="jaya", config={"jaya": asdict(cfg), "bounds": bounds.to_dict()})

    x0 = init.lower + rng.random((cfg.pop_size, 2)) * (init.upper - init.lower)
    try:
        results = _evaluate(evaluator, _points(bounds.clip(x0)), run, 0)
        pop = [Individual(ev.params, ev.fitness, ev) for ev in results]

        generation = 0
        while len(run.history) < cfg.max_evals:
            generation += 1
            remaining = cfg.max_evals - len(run.history)
            best, worst = _best_worst(pop)
            # A final partial generation updates only the first `remaining` members.
            head = jaya_step(pop[:remaining], best, worst, rng, evaluator, bounds, run, generation)
            pop = head + pop[remaining:]
            logger.info(
                "jaya gen %d evals=%d best=%.6f at U=%.4f W=%.4f",
                generation,
                len(run.history),
                run.best.fitness,
                run.best.params.u_density,
                run.best.params.w_density,
            )
    except MtrBenchError as exc:
        raise OptimizationAborted(f"jaya stopped after {len(run.history)} evaluations: {exc}", run) from exc
    return run
