"""PPO-ES: evolution strategies over policy weights with PPO updates inside each worker.

Episodes are one step long: the state is the previous point normalized to
[-1, 1] (the box center to start), the action is squashed through tanh onto
the parameter box, and the reward is minus the fitness.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np

from mtrbench.errors import OptimizationAborted, UpdateRejectedError
from mtrbench.model import DEFAULT_BOUNDS, ParamBounds, ParamPoint
from mtrbench.optrun import OptRun
from mtrbench.policy import PolicyNet, Rollout, init_policy, ppo_update, sample_action


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PpoEsConfig:
    es_pop: int = 8
    es_sigma: float = 0.05
    es_elite_frac: float = 0.5
    ppo_inner_iters: int = 4
    ppo_clip_eps: float = 0.2
    ppo_lr: float = 3e-3
    steps_per_update: int = 16
    generations: int = 3
    seed: int = 1
    layer_sizes: Tuple[int, ...] = (2, 32, 32, 2)
    init_log_std: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.ppo_clip_eps < 1:
            raise ValueError("ppo_clip_eps must lie in (0, 1)")
        if not 0 < self.es_elite_frac <= 1:
            raise ValueError("es_elite_frac must lie in (0, 1]")
        if self.es_pop < 4:
            raise ValueError("es_pop must be >= 4")
        if self.es_sigma < 0 or self.ppo_lr <= 0:
            raise ValueError("es_sigma must be >= 0 and ppo_lr > 0")
        if self.steps_per_update < 1 or self.generations < 1 or self.ppo_inner_iters < 0:
            raise ValueError("steps_per_update and generations must be >= 1")
        if self.layer_sizes[0] != 2 or self.layer_sizes[-1] != 2:
            raise ValueError("policy maps a 2-D state to a 2-D action")

    @property
    def budget(self) -> int:
        return self.es_pop * self.steps_per_update * self.generations


def squash(action: np.ndarray, bounds: ParamBounds) -> ParamPoint:
    """tanh maps R^2 one-to-one onto the open parameter box."""
    u, w = bounds.clip(bounds.denormalize(np.tanh(action)))
    return ParamPoint(float(u), float(w))


def recombine(nets: List[PolicyNet], scores: List[float], elite_frac: float) -> PolicyNet:
    """Linear rank-weighted mean of the elite workers (a convex combination)."""
    order = sorted(range(len(nets)), key=lambda i: -scores[i])
    n_elite = max(1, math.ceil(elite_frac * len(nets)))
    elite = order[:n_elite]
    weights = np.arange(n_elite, 0, -1, dtype=float)
    weights /= weights.sum()
    flat = sum(wt * nets[i].flat for wt, i in zip(weights, elite))
    split = nets[0].weights.size
    return nets[0].with_params(flat[:split], flat[split:])


def ppo_es_run(cfg: PpoEsConfig, evaluator, bounds: ParamBounds = DEFAULT_BOUNDS) -> OptRun:
    central = init_policy(cfg.layer_sizes, np.random.default_rng(cfg.seed), log_std=cfg.init_log_std)
    config = asdict(cfg)
    config["layer_sizes"] = list(cfg.layer_sizes)
    run = OptRun(algorithm="ppo-es", config={"ppo_es": config, "bounds": bounds.to_dict()})

    for gen in range(cfg.generations):
        rngs = [np.random.default_rng([cfg.seed, gen, w]) for w in range(cfg.es_pop)]
        nets = [
            central.with_params(
                central.weights + cfg.es_sigma * r.standard_normal(central.weights.size),
                central.log_std,
            )
            for r in rngs
        ]
        states = [np.zeros(2) for _ in range(cfg.es_pop)]
        steps: List[list] = [[] for _ in range(cfg.es_pop)]
        live = [True] * cfg.es_pop

        for _ in range(cfg.steps_per_update):
            workers = [w for w in range(cfg.es_pop) if live[w]]
            if not workers:
                break
            sampled = [sample_action(nets[w], states[w], rngs[w]) for w in workers]
            points = [squash(action, bounds) for action, _ in sampled]
            outcomes = evaluator.evaluate_batch(points, return_exceptions=True)
            for w, (action, logp), outcome in zip(workers, sampled, outcomes):
                if isinstance(outcome, Exception):
                    logger.warning("ppo-es gen %d worker %d failed: %s", gen, w, outcome)
                    live[w] = False
                    continue
                run.record(outcome, gen=gen, worker=w)
                steps[w].append((states[w], action, logp, -outcome.fitness))
                states[w] = np.tanh(action)

        scores = []
        for w in range(cfg.es_pop):
            if not live[w] or not steps[w]:
                scores.append(-math.inf)
                continue
            rollout = Rollout.from_steps(steps[w])
            scores.append(float(rollout.rewards.mean()))
            for _ in range(cfg.ppo_inner_iters):
                try:
                    nets[w] = ppo_update(nets[w], rollout, cfg.ppo_lr, cfg.ppo_clip_eps)
                except UpdateRejectedError as exc:
                    logger.warning("ppo-es gen %d worker %d: %s", gen, w, exc)
                    break

        survivors = [w for w in range(cfg.es_pop) if math.isfinite(scores[w])]
        if not survivors:
            raise OptimizationAborted(f"every ppo-es worker failed in generation {gen}", run)
        central = recombine([nets[w] for w in survivors], [scores[w] for w in survivors], cfg.es_elite_frac)
        logger.info(
            "ppo-es gen %d evals=%d top worker reward=%.5f best=%.6f at U=%.4f W=%.4f",
            gen,
            len(run.history),
            max(scores[w] for w in survivors),
            run.best.fitness,
            run.best.params.u_density,
            run.best.params.w_density,
        )
    return run
