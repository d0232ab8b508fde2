from __future__ import annotations

import copy
from pathlib import Path

import orjson
import pytest

from mtrbench.model import DEFAULT_BOUNDS, GeometryConfig
from mtrbench.objective import Evaluator, ObjectiveConfig
from mtrbench.transport import McConfig
from mtrbench.xslib import load_library

ROOT = Path(__file__).resolve().parents[1]
XS_PATH = ROOT / "data" / "default.xs.json"
BENCH_PATH = ROOT / "data" / "bench.json"

SMALL_MC = McConfig(particles_per_batch=200, n_batches=12, n_inactive=4, seed=3)


def library_doc(*, overrides: dict[str, dict] | None = None, drop: tuple[str, ...] = ()) -> dict:
    """Shipped library as a dict, with per-material field overrides."""
    doc = orjson.loads(XS_PATH.read_bytes())
    doc = copy.deepcopy(doc)
    for name in drop:
        doc["materials"].pop(name)
    for name, fields in (overrides or {}).items():
        doc["materials"][name].update(fields)
    return doc


def write_json(path: Path, doc: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(orjson.dumps(doc))
    return path


def bench_doc(
    *,
    xs_library: Path = XS_PATH,
    mc: McConfig = SMALL_MC,
    jaya: dict | None = None,
    ppo_es: dict | None = None,
    landscape: dict | None = None,
    output_dir: Path | None = None,
) -> dict:
    doc = orjson.loads(BENCH_PATH.read_bytes())
    doc["xs_library"] = str(xs_library)
    doc["mc"] = {
        "particles_per_batch": mc.particles_per_batch,
        "n_batches": mc.n_batches,
        "n_inactive": mc.n_inactive,
        "seed": mc.seed,
    }
    doc["jaya"].update(jaya or {"pop_size": 4, "max_evals": 8})
    doc["ppo_es"].update(ppo_es or {"es_pop": 4, "steps_per_update": 2, "generations": 1, "layer_sizes": [2, 8, 2]})
    doc["landscape"].update(landscape or {"resolution": [2, 2]})
    if output_dir is not None:
        doc["output_dir"] = str(output_dir)
    return doc


@pytest.fixture(scope="session")
def lib():
    return load_library(XS_PATH)


@pytest.fixture
def small_mc() -> McConfig:
    return SMALL_MC


@pytest.fixture
def evaluator(lib):
    with Evaluator(lib, GeometryConfig(), SMALL_MC, ObjectiveConfig(), DEFAULT_BOUNDS, workers=1) as ev:
        yield ev


@pytest.fixture
def bench_file(tmp_path) -> Path:
    return write_json(tmp_path / "bench.json", bench_doc(output_dir=tmp_path / "runs"))
