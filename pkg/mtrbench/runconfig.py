"""Run configuration: one JSON file per benchmark, parsed into frozen dataclasses."""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Tuple, Type, TypeVar

import orjson

from config import OUTPUT_DIR, XS_PATH_OVERRIDE
from mtrbench.errors import ConfigError
from mtrbench.jaya import JayaConfig
from mtrbench.model import GeometryConfig, ParamBounds
from mtrbench.objective import ObjectiveConfig
from mtrbench.ppo_es import PpoEsConfig
from mtrbench.transport import McConfig


logger = logging.getLogger(__name__)

T = TypeVar("T")

TOP_LEVEL_KEYS = {"xs_library", "output_dir", "geometry", "bounds", "mc", "objective", "jaya", "ppo_es", "landscape"}


@dataclass(frozen=True)
class LandscapeConfig:
    resolution: Tuple[int, int] = (40, 40)
    tolerance: float = 0.05

    def __post_init__(self) -> None:
        if len(self.resolution) != 2 or min(self.resolution) < 2:
            raise ValueError("resolution must be two sizes >= 2")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")


@dataclass(frozen=True)
class RunConfig:
    xs_library: Path
    output_dir: Path = Path(OUTPUT_DIR)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    bounds: ParamBounds = field(default_factory=ParamBounds)
    mc: McConfig = field(default_factory=McConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    jaya: JayaConfig = field(default_factory=JayaConfig)
    ppo_es: PpoEsConfig = field(default_factory=PpoEsConfig)
    landscape: LandscapeConfig = field(default_factory=LandscapeConfig)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["xs_library"] = str(self.xs_library)
        out["output_dir"] = str(self.output_dir)
        return out


def _section(raw: Dict[str, Any], name: str, cls: Type[T], **converted: Any) -> T:
    body = raw.get(name, {})
    if not isinstance(body, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    for key in body:
        if key not in known:
            raise ConfigError(f"section {name!r}: unknown key {key!r}")
    kwargs = {**body, **converted}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def parse_run_config(raw: Dict[str, Any], base_dir: Path) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown top-level key {key!r}")
    if XS_PATH_OVERRIDE:
        xs_path = Path(XS_PATH_OVERRIDE)
        logger.info("MTRBENCH_XS_PATH overrides xs_library with %s", xs_path)
    elif "xs_library" in raw:
        xs_path = _resolve(base_dir, raw["xs_library"])
    else:
        raise ConfigError("xs_library is required")
    if not xs_path.exists():
        raise ConfigError(f"cross-section library {xs_path} does not exist")

    output_dir = _resolve(base_dir, raw["output_dir"]) if "output_dir" in raw else Path(OUTPUT_DIR)

    jaya_raw = raw.get("jaya", {})
    init_bounds = None
    if isinstance(jaya_raw, dict) and jaya_raw.get("init_bounds") is not None:
        init_bounds = _section(jaya_raw, "init_bounds", ParamBounds)

    landscape_raw = raw.get("landscape", {})
    resolution = {}
    if isinstance(landscape_raw, dict) and "resolution" in landscape_raw:
        resolution = {"resolution": tuple(landscape_raw["resolution"])}

    ppo_raw = raw.get("ppo_es", {})
    layers = {}
    if isinstance(ppo_raw, dict) and "layer_sizes" in ppo_raw:
        layers = {"layer_sizes": tuple(ppo_raw["layer_sizes"])}

    return RunConfig(
        xs_library=xs_path,
        output_dir=output_dir,
        geometry=_section(raw, "geometry", GeometryConfig),
        bounds=_section(raw, "bounds", ParamBounds),
        mc=_section(raw, "mc", McConfig),
        objective=_section(raw, "objective", ObjectiveConfig),
        jaya=_section(raw, "jaya", JayaConfig, init_bounds=init_bounds),
        ppo_es=_section(raw, "ppo_es", PpoEsConfig, **layers),
        landscape=_section(raw, "landscape", LandscapeConfig, **resolution),
    )


def load_run_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        raw = orjson.loads(path.read_bytes())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except orjson.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    cfg = parse_run_config(raw, path.parent)
    logger.info("Loaded run config %s (xs_library=%s)", path, cfg.xs_library)
    return cfg
