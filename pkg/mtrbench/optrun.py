"""Optimizer run record and its on-disk form (config.json, history.jsonl, best.json)."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

import orjson

from mtrbench.objective import Evaluation


logger = logging.getLogger(__name__)

JSON_OPTS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS


@dataclass
class OptRun:
    algorithm: str
    config: Dict[str, Any] = field(default_factory=dict)
    history: List[Evaluation] = field(default_factory=list)
    tags: List[Dict[str, Any]] = field(default_factory=list)
    best: Evaluation | None = None

    def record(self, evaluation: Evaluation, **tags: Any) -> None:
        self.history.append(evaluation)
        self.tags.append(tags)
        if self.best is None or evaluation.fitness < self.best.fitness:
            self.best = evaluation

    def best_so_far(self) -> List[float]:
        out: List[float] = []
        current = float("inf")
        for evaluation in self.history:
            current = min(current, evaluation.fitness)
            out.append(current)
        return out

    def history_records(self) -> List[Dict[str, Any]]:
        return [
            ev.to_record(timing=False, algo=self.algorithm, **tags)
            for ev, tags in zip(self.history, self.tags)
        ]

    def diagnostics_records(self) -> List[Dict[str, Any]]:
        records = []
        for ev in self.history:
            if ev.result is None:
                continue
            for batch, (k, entropy) in enumerate(zip(ev.result.batch_k, ev.result.batch_entropy)):
                records.append({"eval": ev.eval_index, "batch": batch, "k": k, "entropy": entropy})
        return records


def save_run(run: OptRun, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_bytes(orjson.dumps(run.config, option=JSON_OPTS))
    (out_dir / "history.jsonl").write_bytes(
        b"".join(orjson.dumps(r) + b"\n" for r in run.history_records())
    )
    (out_dir / "diagnostics.jsonl").write_bytes(
        b"".join(orjson.dumps(r) + b"\n" for r in run.diagnostics_records())
    )
    (out_dir / "timing.jsonl").write_bytes(
        b"".join(orjson.dumps({"eval": ev.eval_index, "ms": ev.wall_time_ms}) + b"\n" for ev in run.history)
    )
    best = run.best.to_record(timing=False, algo=run.algorithm) if run.best else None
    (out_dir / "best.json").write_bytes(orjson.dumps(best, option=JSON_OPTS))
    logger.info("Saved %s run (%d evaluations) to %s", run.algorithm, len(run.history), out_dir)


def load_history(path: Path) -> List[Evaluation]:
    """Read history.jsonl (or a run directory containing it)."""
    path = Path(path)
    if path.is_dir():
        path = path / "history.jsonl"
    return [
        Evaluation.from_record(orjson.loads(line))
        for line in path.read_bytes().splitlines()
        if line.strip()
    ]
