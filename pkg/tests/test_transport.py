from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from mtrbench.errors import DegenerateMediumError, TransportError
from mtrbench.model import GeometryConfig, Layer, ParamPoint, SlabModel, build_unit_cell, homogeneous_model
from mtrbench.transport import ENTROPY_BINS, McConfig, kinf_analytic, run_keig, shannon_entropy
from mtrbench.xslib import ALUMINUM, CADMIUM, FUEL, WATER, MaterialXs, scale_to_density


def _material(
    *,
    sigma_a: tuple[float, float] = (0.1, 0.2),
    nu_sigma_f: tuple[float, float] = (0.0, 0.0),
    sigma_s: tuple[tuple[float, float], tuple[float, float]] = ((0.5, 0.1), (0.0, 0.6)),
) -> MaterialXs:
    sigma_t = tuple(a + sum(row) for a, row in zip(sigma_a, sigma_s))
    return MaterialXs("test", 1.0, sigma_t, sigma_a, nu_sigma_f, sigma_s)


def test_kinf_of_shipped_fuel(lib):
    assert kinf_analytic(lib.material(FUEL)) == pytest.approx(2.000266, abs=1e-6)


@pytest.mark.parametrize("name", [ALUMINUM, WATER, CADMIUM])
def test_kinf_of_non_fissile_is_zero(lib, name):
    assert kinf_analytic(lib.material(name)) == 0.0


def test_kinf_closed_form():
    mat = _material(nu_sigma_f=(0.2, 0.5))
    # (0.2 + 0.5 * 0.1 / 0.2) / (0.1 + 0.1)
    assert kinf_analytic(mat) == pytest.approx(2.25)


def test_kinf_needs_downscatter_only():
    with pytest.raises(ValueError):
        kinf_analytic(_material(sigma_s=((0.5, 0.1), (0.05, 0.6))))


def test_kinf_zero_thermal_absorption_is_degenerate():
    with pytest.raises(DegenerateMediumError):
        kinf_analytic(_material(sigma_a=(0.1, 0.0), nu_sigma_f=(0.2, 0.0)))


def test_shannon_entropy():
    uniform = (np.arange(1600) + 0.5) / 1600
    assert shannon_entropy(uniform, ENTROPY_BINS, (0.0, 1.0)) == pytest.approx(4.0)
    single = shannon_entropy(np.full(10, 0.3), ENTROPY_BINS, (0.0, 1.0))
    assert single == 0.0
    assert math.copysign(1.0, single) == 1.0
    with pytest.raises(ValueError):
        shannon_entropy(np.empty(0), ENTROPY_BINS)


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(particles_per_batch=10)
    with pytest.raises(ValueError):
        McConfig(n_batches=10, n_inactive=10)
    with pytest.raises(ValueError):
        McConfig(seed=-1)
    assert McConfig().n_active == 50


def test_homogeneous_fuel_matches_kinf(lib):
    mat = lib.material(FUEL)
    res = run_keig(homogeneous_model(mat), McConfig(particles_per_batch=1000, n_batches=30, n_inactive=5, seed=11))
    assert res.k_std > 0
    assert abs(res.k_mean - kinf_analytic(mat)) <= 4 * res.k_std
    assert res.batches_used == 30
    assert len(res.batch_k) == 30
    assert all(e > 0 for e in res.batch_entropy)


def test_non_fissile_medium_goes_extinct(lib, small_mc):
    res = run_keig(homogeneous_model(lib.material(ALUMINUM)), small_mc)
    assert res.k_mean == 0.0
    assert res.k_std == 0.0
    assert res.batches_used == 1


def test_all_void_medium_is_degenerate(lib, small_mc):
    empty = scale_to_density(lib.material(WATER), 0.0)
    with pytest.raises(DegenerateMediumError):
        run_keig(homogeneous_model(empty), small_mc)


def test_void_layer_is_streamed(lib):
    fuel = lib.material(FUEL)
    void = scale_to_density(lib.material(WATER), 0.0)
    model = SlabModel(layers=[Layer(WATER, 0.5, "water_gap", void), Layer(FUEL, 1.0, "fuel_1", fuel)])
    res = run_keig(model, McConfig(particles_per_batch=1000, n_batches=30, n_inactive=5, seed=5))
    # Reflective ends make the void invisible to the fuel.
    assert abs(res.k_mean - kinf_analytic(fuel)) <= 4 * res.k_std
    assert res.fast_flux > 0
    assert np.isfinite(res.fast_flux)


def test_same_seed_same_result(lib, small_mc):
    model = build_unit_cell(GeometryConfig(), ParamPoint(10.0, 1.0), lib)
    assert run_keig(model, small_mc) == run_keig(model, small_mc)


def test_different_seed_different_result(lib, small_mc):
    model = build_unit_cell(GeometryConfig(), ParamPoint(10.0, 1.0), lib)
    other = McConfig(
        particles_per_batch=small_mc.particles_per_batch,
        n_batches=small_mc.n_batches,
        n_inactive=small_mc.n_inactive,
        seed=small_mc.seed + 1,
    )
    assert run_keig(model, small_mc).k_mean != run_keig(model, other).k_mean


def test_unit_cell_result_shape(lib, small_mc):
    res = run_keig(build_unit_cell(GeometryConfig(), ParamPoint(19.0, 1.0), lib), small_mc)
    assert res.k_mean > 0
    assert res.fast_flux > 0
    assert res.thermal_flux >= 0
    assert len(res.batch_entropy) == small_mc.n_batches


def test_runaway_histories_raise(lib, small_mc, monkeypatch):
    monkeypatch.setattr("mtrbench.transport.MAX_EVENTS_PER_HISTORY", 3)
    with pytest.raises(TransportError):
        run_keig(build_unit_cell(GeometryConfig(), ParamPoint(10.0, 10.0), lib), small_mc)


@pytest.mark.slow
def test_quadrupling_particles_shrinks_k_std(lib):
    model = build_unit_cell(GeometryConfig(), ParamPoint(10.0, 1.0), lib)
    small = run_keig(model, McConfig(particles_per_batch=250, n_batches=50, n_inactive=10, seed=2))
    large = run_keig(model, McConfig(particles_per_batch=1000, n_batches=50, n_inactive=10, seed=2))
    assert 1.3 <= small.k_std / large.k_std <= 3.0


def test_extinct_source_restarts_in_fissile_model(lib, small_mc):
    # Almost no fuel in a thick water gap: some batches bank no fission sites.
    res = run_keig(build_unit_cell(GeometryConfig(), ParamPoint(0.1, 2.63), lib), small_mc)
    assert res.batches_used == small_mc.n_batches
    assert res.k_mean > 0
    assert res.fast_flux > 0


def _with_fuel_yield(lib, factor: float):
    fuel = lib.material(FUEL)
    boosted = replace(fuel, nu_sigma_f=(fuel.nu_sigma_f[0] * factor, fuel.nu_sigma_f[1] * factor))
    return replace(lib, materials={**lib.materials, FUEL: boosted})


@pytest.mark.slow
def test_doubling_particles_keeps_flux_normalization(lib):
    model = build_unit_cell(GeometryConfig(), ParamPoint(10.0, 1.0), lib)
    small = run_keig(model, McConfig(particles_per_batch=1000, n_batches=40, n_inactive=10, seed=4))
    large = run_keig(model, McConfig(particles_per_batch=2000, n_batches=40, n_inactive=10, seed=4))
    spread = math.hypot(small.fast_flux_std, large.fast_flux_std)
    assert abs(small.fast_flux - large.fast_flux) <= 3 * spread
    assert abs(small.thermal_flux - large.thermal_flux) <= 3 * math.hypot(small.thermal_flux_std, large.thermal_flux_std)


@pytest.mark.slow
@pytest.mark.parametrize("point", [ParamPoint(5.0, 1.0), ParamPoint(12.0, 6.0), ParamPoint(18.0, 20.0)])
def test_more_fission_yield_never_lowers_k(lib, point):
    mc = McConfig(particles_per_batch=500, n_batches=30, n_inactive=5, seed=9)
    base = run_keig(build_unit_cell(GeometryConfig(), point, lib), mc)
    boosted = run_keig(build_unit_cell(GeometryConfig(), point, _with_fuel_yield(lib, 1.2)), mc)
    assert boosted.k_mean >= base.k_mean - 3 * math.hypot(base.k_std, boosted.k_std)


@pytest.mark.slow
def test_default_evaluation_runs_in_about_a_second(lib):
    model = build_unit_cell(GeometryConfig(), ParamPoint(19.0, 25.0), lib)
    run_keig(model, McConfig(particles_per_batch=200, n_batches=3, n_inactive=1))  # compile
    start = time.perf_counter()
    run_keig(model, McConfig())
    assert time.perf_counter() - start < 3.0
