from __future__ import annotations

import numpy as np
import pytest

from mtrbench.errors import OptimizationAborted, TransportError
from mtrbench.jaya import Individual, JayaConfig, jaya_run, jaya_step
from mtrbench.model import DEFAULT_BOUNDS, ParamBounds, ParamPoint
from mtrbench.objective import FunctionEvaluator


def sphere(u: float, w: float) -> float:
    return (u - 5.0) ** 2 + (w - 10.0) ** 2


def _population(*, points: list[tuple[float, float]], fn=sphere) -> list[Individual]:
    return [Individual(ParamPoint(u, w), fn(u, w)) for u, w in points]


def test_converges_on_sphere():
    run = jaya_run(JayaConfig(pop_size=8, max_evals=400, seed=42), FunctionEvaluator(sphere))
    assert run.best.fitness < 1e-2
    assert run.best.params.u_density == pytest.approx(5.0, abs=0.1)
    assert run.best.params.w_density == pytest.approx(10.0, abs=0.1)


def test_step_applies_update_rule_and_keeps_improvements():
    pop = _population(points=[(1.0, 1.0), (6.0, 9.0), (18.0, 24.0), (3.0, 12.0)])
    best, worst = pop[1], pop[2]
    x = np.array([ind.x for ind in pop])
    draws = np.random.default_rng(0)
    r1, r2 = draws.random(x.shape), draws.random(x.shape)
    expected = DEFAULT_BOUNDS.clip(x + r1 * (best.x - np.abs(x)) - r2 * (worst.x - np.abs(x)))

    evaluator = FunctionEvaluator(sphere)
    next_pop = jaya_step(pop, best, worst, np.random.default_rng(0), evaluator)
    assert evaluator.calls == len(pop)
    for old, new, cand in zip(pop, next_pop, expected):
        assert new.fitness <= old.fitness
        if new is not old:
            assert new.x == pytest.approx(cand)
            assert new.fitness < old.fitness


def test_ties_keep_the_incumbent():
    flat = FunctionEvaluator(lambda u, w: 1.0)
    pop = _population(points=[(2.0, 2.0), (4.0, 4.0), (6.0, 6.0), (8.0, 8.0)], fn=lambda u, w: 1.0)
    next_pop = jaya_step(pop, pop[0], pop[-1], np.random.default_rng(1), flat)
    assert all(a is b for a, b in zip(pop, next_pop))


def test_points_stay_in_bounds():
    # Pushes every candidate toward the (19, 25) corner.
    run = jaya_run(JayaConfig(pop_size=6, max_evals=120, seed=3), FunctionEvaluator(lambda u, w: -(u + w)))
    assert all(DEFAULT_BOUNDS.contains(ev.params) for ev in run.history)
    assert run.best.params.u_density > 15.0
    assert run.best.params.w_density > 20.0


def test_best_so_far_never_increases():
    run = jaya_run(JayaConfig(pop_size=5, max_evals=60, seed=9), FunctionEvaluator(sphere))
    trace = run.best_so_far()
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_budget_is_exact_with_partial_generation():
    run = jaya_run(JayaConfig(pop_size=8, max_evals=27, seed=1), FunctionEvaluator(sphere))
    assert len(run.history) == 27
    assert [t["gen"] for t in run.tags].count(3) == 3


def test_initial_population_respects_init_bounds():
    init = ParamBounds(w_min=5.0)
    run = jaya_run(JayaConfig(pop_size=6, max_evals=12, seed=4, init_bounds=init), FunctionEvaluator(sphere))
    assert all(ev.params.w_density >= 5.0 for ev in run.history[:6])


def test_same_seed_same_history():
    cfg = JayaConfig(pop_size=5, max_evals=40, seed=11)
    a = jaya_run(cfg, FunctionEvaluator(sphere))
    b = jaya_run(cfg, FunctionEvaluator(sphere))
    assert [ev.physics() for ev in a.history] == [ev.physics() for ev in b.history]
    assert a.config == b.config


def test_failure_aborts_with_partial_run():
    calls = {"n": 0}

    def flaky(u: float, w: float) -> float:
        calls["n"] += 1
        if calls["n"] > 6:
            raise TransportError("boom")
        return sphere(u, w)

    with pytest.raises(OptimizationAborted) as info:
        jaya_run(JayaConfig(pop_size=6, max_evals=30, seed=1), FunctionEvaluator(flaky))
    assert len(info.value.run.history) == 6


def test_failure_mid_generation_keeps_the_finished_candidates():
    def flaky(u: float, w: float) -> float:
        flaky.n += 1
        if flaky.n == 8:
            raise TransportError("boom")
        return sphere(u, w)

    flaky.n = 0
    evaluator = FunctionEvaluator(flaky)
    with pytest.raises(OptimizationAborted) as info:
        jaya_run(JayaConfig(pop_size=6, max_evals=30, seed=1), evaluator)
    history = info.value.run.history
    assert evaluator.calls == 12
    assert len(history) == evaluator.calls - 1
    assert [ev.eval_index for ev in history] == [i for i in range(12) if i != 7]


def test_config_validation():
    with pytest.raises(ValueError):
        JayaConfig(pop_size=3)
    with pytest.raises(ValueError):
        JayaConfig(pop_size=10, max_evals=5)
