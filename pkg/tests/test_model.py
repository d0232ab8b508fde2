from __future__ import annotations

import numpy as np
import pytest

from mtrbench.errors import MissingMaterialError, ParamBoundsError
from mtrbench.model import (
    DEFAULT_BOUNDS,
    TALLY_REGION,
    GeometryConfig,
    ParamBounds,
    ParamPoint,
    build_unit_cell,
    homogeneous_model,
    update_densities,
)
from mtrbench.xslib import CADMIUM, FUEL, WATER, XsLibrary


def test_layer_order_and_thickness(lib):
    geom = GeometryConfig()
    model = build_unit_cell(geom, ParamPoint(10.0, 1.0), lib)
    tags = [layer.region_tag for layer in model.layers]
    assert tags[0] == TALLY_REGION
    assert tags[-1] == "cadmium"
    assert tags.count("water_gap") == 1
    assert sum(1 for t in tags if t.startswith("fuel_")) == geom.n_fuel_plates
    assert len(model.layers) == 15
    assert model.total_thickness == pytest.approx(geom.total_cm)
    assert model.edges[0] == 0.0
    assert np.all(np.diff(model.edges) > 0)
    assert model.tally_index == 0
    assert model.boundary == "reflective"


def test_densities_scale_fuel_and_water_only(lib):
    model = build_unit_cell(GeometryConfig(), ParamPoint(9.5, 2.0), lib)
    fuel = lib.material(FUEL)
    water = lib.material(WATER)
    for layer in model.layers:
        if layer.material_name == FUEL:
            assert layer.xs.sigma_t[0] == pytest.approx(fuel.sigma_t[0] * 9.5 / fuel.ref_density)
        elif layer.material_name == WATER:
            assert layer.xs.sigma_t[1] == pytest.approx(water.sigma_t[1] * 2.0)
        elif layer.material_name == CADMIUM:
            assert layer.xs is lib.material(CADMIUM)


def test_update_matches_fresh_build(lib):
    geom = GeometryConfig()
    model = build_unit_cell(geom, DEFAULT_BOUNDS.center, lib)
    layer_ids = [id(layer) for layer in model.layers]
    target = ParamPoint(3.3, 17.0)
    update_densities(model, target, lib)
    fresh = build_unit_cell(geom, target, lib)
    assert [id(layer) for layer in model.layers] == layer_ids
    assert [layer.xs for layer in model.layers] == [layer.xs for layer in fresh.layers]
    assert model.params == target


def test_update_with_same_params_is_a_no_op(lib):
    p = ParamPoint(4.0, 4.0)
    model = build_unit_cell(GeometryConfig(), p, lib)
    before = [layer.xs for layer in model.layers]
    update_densities(model, p, lib)
    assert all(a is b for a, b in zip(before, [layer.xs for layer in model.layers]))


@pytest.mark.parametrize("point", [ParamPoint(0.05, 1.0), ParamPoint(5.0, 26.0), ParamPoint(19.5, 0.0)])
def test_out_of_bounds_points_are_rejected(lib, point):
    with pytest.raises(ParamBoundsError):
        build_unit_cell(GeometryConfig(), point, lib)
    model = build_unit_cell(GeometryConfig(), DEFAULT_BOUNDS.center, lib)
    with pytest.raises(ParamBoundsError):
        update_densities(model, point, lib)


def test_bounds_are_inclusive(lib):
    build_unit_cell(GeometryConfig(), ParamPoint(DEFAULT_BOUNDS.u_min, DEFAULT_BOUNDS.w_max), lib)


def test_missing_material(lib):
    partial = XsLibrary(lib.groups, {k: v for k, v in lib.materials.items() if k != CADMIUM})
    with pytest.raises(MissingMaterialError):
        build_unit_cell(GeometryConfig(), DEFAULT_BOUNDS.center, partial)


def test_geometry_validation():
    with pytest.raises(ValueError):
        GeometryConfig(n_fuel_plates=0)
    with pytest.raises(ValueError):
        GeometryConfig(clad_cm=0.0)
    assert GeometryConfig(n_fuel_plates=1).total_cm == pytest.approx(1.0 + 1.0 + 0.07 + 0.08 + 0.1)


def test_bounds_normalize_round_trip():
    bounds = ParamBounds()
    x = np.array([[0.1, 0.001], [19.0, 25.0], [9.55, 12.5005]])
    z = bounds.normalize(x)
    assert z[0] == pytest.approx([-1.0, -1.0])
    assert z[1] == pytest.approx([1.0, 1.0])
    assert bounds.denormalize(z) == pytest.approx(x)
    assert bounds.clip(np.array([-5.0, 99.0])) == pytest.approx([0.1, 25.0])
    with pytest.raises(ValueError):
        ParamBounds(u_min=5.0, u_max=1.0)


def test_homogeneous_model_is_one_tally_layer(lib):
    model = homogeneous_model(lib.material(FUEL), thickness_cm=2.0)
    assert len(model.layers) == 1
    assert model.tally_index == 0
    assert model.total_thickness == 2.0
