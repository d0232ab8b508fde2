"""MTR unit-cell slab model with in-place density updates.

Layer order along x, both ends reflective::

    [water gap][Al side plate][clad fuel clad channel ... clad fuel clad][Al side plate][Cd]

The water gap is the fast-flux tally region, opposite the cadmium.
"""

import logging
from dataclasses import dataclass, field, fields
from typing import Dict, List

import numpy as np

from mtrbench.errors import ParamBoundsError
from mtrbench.xslib import (
    ALUMINUM,
    CADMIUM,
    FUEL,
    WATER,
    MaterialXs,
    XsLibrary,
    scale_to_density,
)


logger = logging.getLogger(__name__)

TALLY_REGION = "water_gap"


@dataclass(frozen=True)
class GeometryConfig:
    n_fuel_plates: int = 3
    fuel_meat_cm: float = 0.07
    clad_cm: float = 0.04
    water_channel_cm: float = 0.30
    side_plate_cm: float = 0.50
    cadmium_cm: float = 0.10
    water_gap_cm: float = 1.00

    def __post_init__(self) -> None:
        if self.n_fuel_plates < 1:
            raise ValueError("n_fuel_plates must be >= 1")
        for f in fields(self):
            if f.name.endswith("_cm") and getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be > 0")

    @property
    def total_cm(self) -> float:
        n = self.n_fuel_plates
        return (
            self.water_gap_cm
            + 2 * self.side_plate_cm
            + n * (self.fuel_meat_cm + 2 * self.clad_cm)
            + (n - 1) * self.water_channel_cm
            + self.cadmium_cm
        )

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ParamPoint:
    u_density: float
    w_density: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u_density, self.w_density], dtype=float)


@dataclass(frozen=True)
class ParamBounds:
    u_min: float = 0.1
    u_max: float = 19.0
    w_min: float = 0.001
    w_max: float = 25.0

    def __post_init__(self) -> None:
        if not (0 <= self.u_min < self.u_max) or not (0 <= self.w_min < self.w_max):
            raise ValueError(f"invalid parameter box {self}")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.u_min, self.w_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.u_max, self.w_max])

    @property
    def center(self) -> ParamPoint:
        return ParamPoint(0.5 * (self.u_min + self.u_max), 0.5 * (self.w_min + self.w_max))

    def contains(self, params: ParamPoint) -> bool:
        return (
            self.u_min <= params.u_density <= self.u_max
            and self.w_min <= params.w_density <= self.w_max
        )

    def check(self, params: ParamPoint) -> None:
        if not self.contains(params):
            raise ParamBoundsError(
                f"(U={params.u_density}, W={params.w_density}) outside "
                f"U in [{self.u_min}, {self.u_max}], W in [{self.w_min}, {self.w_max}]"
            )

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Map box coordinates onto [-1, 1]."""
        return 2.0 * (x - self.lower) / (self.upper - self.lower) - 1.0

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return self.lower + 0.5 * (z + 1.0) * (self.upper - self.lower)

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_BOUNDS = ParamBounds()


@dataclass
class Layer:
    material_name: str
    thickness_cm: float
    region_tag: str
    xs: MaterialXs


@dataclass
class SlabModel:
    layers: List[Layer]
    tally_region: str = TALLY_REGION
    params: ParamPoint | None = None
    geometry: GeometryConfig | None = None
    library_digest: str = ""
    # Boundaries are reflective on both sides; there is no other option.
    boundary: str = field(default="reflective", init=False)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum([layer.thickness_cm for layer in self.layers])))

    @property
    def total_thickness(self) -> float:
        return float(sum(layer.thickness_cm for layer in self.layers))

    @property
    def tally_index(self) -> int:
        hits = [i for i, layer in enumerate(self.layers) if layer.region_tag == self.tally_region]
        if len(hits) != 1:
            raise ValueError(f"expected exactly one {self.tally_region!r} layer, found {len(hits)}")
        return hits[0]


def _layer_specs(geom: GeometryConfig) -> List[tuple]:
    specs = [
        (WATER, geom.water_gap_cm, TALLY_REGION),
        (ALUMINUM, geom.side_plate_cm, "side_plate_gap"),
    ]
    for plate in range(1, geom.n_fuel_plates + 1):
        specs += [
            (ALUMINUM, geom.clad_cm, f"clad_{plate}a"),
            (FUEL, geom.fuel_meat_cm, f"fuel_{plate}"),
            (ALUMINUM, geom.clad_cm, f"clad_{plate}b"),
        ]
        if plate < geom.n_fuel_plates:
            specs.append((WATER, geom.water_channel_cm, f"channel_{plate}"))
    specs += [
        (ALUMINUM, geom.side_plate_cm, "side_plate_cd"),
        (CADMIUM, geom.cadmium_cm, "cadmium"),
    ]
    return specs


def _densified(lib: XsLibrary, params: ParamPoint) -> Dict[str, MaterialXs]:
    return {
        FUEL: scale_to_density(lib.material(FUEL), params.u_density),
        WATER: scale_to_density(lib.material(WATER), params.w_density),
    }


def build_unit_cell(
    geom: GeometryConfig,
    params: ParamPoint,
    lib: XsLibrary,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> SlabModel:
    bounds.check(params)
    lib.require()
    scaled = _densified(lib, params)
    layers = [
        Layer(name, thickness, tag, scaled.get(name) or lib.material(name))
        for name, thickness, tag in _layer_specs(geom)
    ]
    return SlabModel(
        layers=layers,
        params=params,
        geometry=geom,
        library_digest=lib.source_digest,
    )


def update_densities(
    model: SlabModel,
    params: ParamPoint,
    lib: XsLibrary,
    bounds: ParamBounds = DEFAULT_BOUNDS,
) -> None:
    """Swap fuel and water cross sections in place; geometry is left alone."""
    bounds.check(params)
    if params == model.params and lib.source_digest == model.library_digest:
        return
    scaled = _densified(lib, params)
    for layer in model.layers:
        xs = scaled.get(layer.material_name)
        if xs is not None:
            layer.xs = xs
    model.params = params
    model.library_digest = lib.source_digest


def homogeneous_model(mat: MaterialXs, thickness_cm: float = 1.0) -> SlabModel:
    """One reflective layer of ``mat``: an infinite medium."""
    return SlabModel(layers=[Layer(mat.name, thickness_cm, TALLY_REGION, mat)])
