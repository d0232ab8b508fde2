"""Two-group cross-section library: data model, JSON format and in-memory cache.

Group index 0 is fast (above ``boundary_ev``), index 1 is thermal.
"""

import hashlib
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Tuple

import orjson

from mtrbench.errors import MissingMaterialError, XsConsistencyError, XsFormatError


logger = logging.getLogger(__name__)

N_GROUPS = 2
FAST = 0
THERMAL = 1
BOUNDARY_EV = 0.6
CONSISTENCY_RTOL = 1e-9

FUEL = "fuel"
ALUMINUM = "aluminum"
WATER = "water"
CADMIUM = "cadmium"
REQUIRED_MATERIALS = (FUEL, ALUMINUM, WATER, CADMIUM)

Pair = Tuple[float, float]
Matrix = Tuple[Pair, Pair]


@dataclass(frozen=True)
class GroupStructure:
    n_groups: int = N_GROUPS
    boundary_ev: float = BOUNDARY_EV

    def __post_init__(self) -> None:
        if self.n_groups != N_GROUPS:
            raise ValueError(f"n_groups must be {N_GROUPS}, got {self.n_groups}")
        if self.boundary_ev != BOUNDARY_EV:
            raise ValueError(f"boundary_ev must be {BOUNDARY_EV}, got {self.boundary_ev}")


@dataclass(frozen=True)
class MaterialXs:
    """Macroscopic two-group data for one material at ``ref_density`` (g/cc)."""

    name: str
    ref_density: float
    sigma_t: Pair
    sigma_a: Pair
    nu_sigma_f: Pair
    sigma_s: Matrix
    chi: Pair = (1.0, 0.0)

    def __post_init__(self) -> None:
        if self.ref_density < 0:
            raise ValueError(f"{self.name}: ref_density must be >= 0")
        values = (
            *self.sigma_t,
            *self.sigma_a,
            *self.nu_sigma_f,
            *self.sigma_s[0],
            *self.sigma_s[1],
            *self.chi,
        )
        if any(v < 0 for v in values):
            raise ValueError(f"{self.name}: cross sections must be non-negative")
        for g in range(N_GROUPS):
            expected = self.sigma_a[g] + sum(self.sigma_s[g])
            scale = max(abs(self.sigma_t[g]), abs(expected))
            if abs(self.sigma_t[g] - expected) > CONSISTENCY_RTOL * scale:
                raise XsConsistencyError(
                    self.name,
                    g + 1,
                    f"sigma_t={self.sigma_t[g]!r} but sigma_a + sum(sigma_s)={expected!r}",
                )
        if self.is_fissile and abs(sum(self.chi) - 1.0) > 1e-12:
            raise ValueError(f"{self.name}: chi must sum to 1 for a fissile material")

    @property
    def is_fissile(self) -> bool:
        return any(v > 0 for v in self.nu_sigma_f)

    @property
    def removal(self) -> float:
        """Fast-to-thermal transfer cross section."""
        return self.sigma_s[FAST][THERMAL]


def scale_to_density(mat: MaterialXs, density: float) -> MaterialXs:
    if density < 0:
        raise ValueError(f"density must be >= 0, got {density}")
    if density == mat.ref_density:
        return mat
    factor = density / mat.ref_density

    def pair(values: Pair) -> Pair:
        return (values[0] * factor, values[1] * factor)

    return MaterialXs(
        name=mat.name,
        ref_density=density,
        sigma_t=pair(mat.sigma_t),
        sigma_a=pair(mat.sigma_a),
        nu_sigma_f=pair(mat.nu_sigma_f),
        sigma_s=(pair(mat.sigma_s[0]), pair(mat.sigma_s[1])),
        chi=mat.chi,
    )


@dataclass(frozen=True)
class XsLibrary:
    groups: GroupStructure
    materials: Mapping[str, MaterialXs]
    source_digest: str = ""

    def material(self, name: str) -> MaterialXs:
        try:
            return self.materials[name]
        except KeyError:
            raise MissingMaterialError(
                f"library has no material {name!r} (has {sorted(self.materials)})"
            ) from None

    def require(self, names=REQUIRED_MATERIALS) -> None:
        missing = [n for n in names if n not in self.materials]
        if missing:
            raise MissingMaterialError(f"library is missing materials {missing}")


def _pair(name: str, record: dict, key: str) -> Pair:
    if key not in record:
        raise XsFormatError(name, key, "missing")
    value = record[key]
    if not isinstance(value, list) or len(value) != N_GROUPS:
        raise XsFormatError(name, key, f"expected a list of {N_GROUPS} numbers")
    try:
        return (float(value[0]), float(value[1]))
    except (TypeError, ValueError):
        raise XsFormatError(name, key, "values must be numbers") from None


def _matrix(name: str, record: dict) -> Matrix:
    value = record.get("sigma_s")
    if not isinstance(value, list) or len(value) != N_GROUPS:
        raise XsFormatError(name, "sigma_s", "expected a 2x2 list")
    rows = []
    for row in value:
        if not isinstance(row, list) or len(row) != N_GROUPS:
            raise XsFormatError(name, "sigma_s", "expected a 2x2 list")
        try:
            rows.append((float(row[0]), float(row[1])))
        except (TypeError, ValueError):
            raise XsFormatError(name, "sigma_s", "values must be numbers") from None
    return (rows[0], rows[1])


def parse_material(name: str, record: dict) -> MaterialXs:
    if not isinstance(record, dict):
        raise XsFormatError(name, "<record>", "expected an object")
    try:
        ref_density = float(record["ref_density"])
    except KeyError:
        raise XsFormatError(name, "ref_density", "missing") from None
    except (TypeError, ValueError):
        raise XsFormatError(name, "ref_density", "must be a number") from None
    if ref_density <= 0:
        raise XsFormatError(name, "ref_density", "must be > 0")
    chi = _pair(name, record, "chi") if "chi" in record else (1.0, 0.0)
    try:
        return MaterialXs(
            name=name,
            ref_density=ref_density,
            sigma_t=_pair(name, record, "sigma_t"),
            sigma_a=_pair(name, record, "sigma_a"),
            nu_sigma_f=_pair(name, record, "nu_sigma_f"),
            sigma_s=_matrix(name, record),
            chi=chi,
        )
    except ValueError as exc:
        raise XsFormatError(name, "<values>", str(exc)) from None


def parse_library(raw: bytes, source: str = "<memory>") -> XsLibrary:
    try:
        doc = orjson.loads(raw)
    except orjson.JSONDecodeError as exc:
        raise XsFormatError("<file>", "<json>", f"{source}: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("materials"), dict):
        raise XsFormatError("<file>", "materials", f"{source}: expected an object")
    try:
        groups = GroupStructure(boundary_ev=float(doc.get("boundary_ev", BOUNDARY_EV)))
    except ValueError as exc:
        raise XsFormatError("<file>", "boundary_ev", str(exc)) from None
    materials: Dict[str, MaterialXs] = {
        name: parse_material(name, record) for name, record in doc["materials"].items()
    }
    lib = XsLibrary(
        groups=groups,
        materials=materials,
        source_digest=hashlib.sha256(raw).hexdigest(),
    )
    lib.require()
    return lib


class XsCache:
    """Process-wide store of parsed libraries keyed by resolved path."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: Dict[str, XsLibrary] = {}
        self.parse_count = 0
        self.hit_count = 0

    def get_or_parse(self, path: Path) -> XsLibrary:
        key = str(path.resolve())
        # Parsing under the lock keeps concurrent first loads to a single parse.
        with self._lock:
            lib = self._entries.get(key)
            if lib is not None:
                self.hit_count += 1
                return lib
            lib = _read(path)
            self._entries[key] = lib
            self.parse_count += 1
            logger.info("Parsed cross-section library %s (%s)", key, lib.source_digest[:12])
            return lib

    def __contains__(self, path: Path) -> bool:
        with self._lock:
            return str(Path(path).resolve()) in self._entries


def _read(path: Path) -> XsLibrary:
    if not path.exists():
        raise XsFormatError("<file>", "<path>", f"{path} does not exist")
    return parse_library(path.read_bytes(), source=str(path))


def load_library(path: Path | str, cache: XsCache | None = None) -> XsLibrary:
    """Load a library, going through ``cache`` when one is given."""
    path = Path(path)
    if cache is None:
        return _read(path)
    return cache.get_or_parse(path)
