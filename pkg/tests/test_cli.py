from __future__ import annotations

import argparse

import orjson
import pytest

from mtrbench.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main, parse_resolution
from mtrbench.xslib import FUEL

from .conftest import bench_doc, library_doc, write_json


def _opt_dir(bench_file, algo="jaya", seed=1):
    return bench_file.parent / "runs" / f"optimize-{algo}-seed{seed}"


def test_parse_resolution():
    assert parse_resolution("40x40") == (40, 40)
    assert parse_resolution("3X5") == (3, 5)
    assert parse_resolution("7") == (7, 7)
    assert parse_resolution("40\u00d740") == (40, 40)
    for bad in ("1x5", "axb", "2x3x4"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_resolution(bad)


def test_optimize_writes_run_and_summary(bench_file, capsys):
    assert main(["optimize", str(bench_file), "--algo", "jaya", "--seed", "1", "--threads", "1"]) == EXIT_OK
    out = _opt_dir(bench_file)
    for name in ("config.json", "history.jsonl", "best.json", "diagnostics.jsonl", "timing.jsonl", "history_fitness.svg"):
        assert (out / name).exists(), name
    assert len((out / "history.jsonl").read_bytes().splitlines()) == 8
    best = orjson.loads((out / "best.json").read_bytes())
    assert "jaya: best U=" in capsys.readouterr().out
    assert set(best) >= {"u", "w", "k", "flux", "fitness"}


def test_optimize_refuses_to_overwrite(bench_file):
    argv = ["optimize", str(bench_file), "--threads", "1"]
    assert main(argv) == EXIT_OK
    assert main(argv) == EXIT_USAGE
    assert main(argv + ["--force"]) == EXIT_OK


def test_optimize_streams_every_evaluation_with_timing(bench_file):
    argv = ["optimize", str(bench_file), "--threads", "2"]
    for extra in ([], ["--force"]):
        assert main(argv + extra) == EXIT_OK
        records = [orjson.loads(line) for line in (_opt_dir(bench_file) / "evals.jsonl").read_bytes().splitlines()]
        assert [r["eval"] for r in records] == list(range(8))
        assert all(r["ms"] > 0 for r in records)


def test_rerun_is_byte_identical_for_any_thread_count(bench_file, tmp_path):
    outputs = []
    for threads, root in (("1", tmp_path / "one"), ("3", tmp_path / "three")):
        assert main(["optimize", str(bench_file), "--threads", threads, "--out", str(root)]) == EXIT_OK
        run = root / "optimize-jaya-seed1"
        outputs.append(
            [(run / name).read_bytes() for name in ("history.jsonl", "best.json", "diagnostics.jsonl", "history_fitness.svg")]
        )
    assert outputs[0] == outputs[1]


def test_optimize_ppo_es(bench_file):
    assert main(["optimize", str(bench_file), "--algo", "ppo-es", "--seed", "2", "--threads", "2"]) == EXIT_OK
    history = (_opt_dir(bench_file, "ppo-es", 2) / "history.jsonl").read_bytes().splitlines()
    # es_pop 4 x steps_per_update 2 x 1 generation
    assert len(history) == 8
    assert orjson.loads(history[0])["algo"] == "ppo-es"


def test_evals_flag_sets_budget(bench_file):
    assert main(["optimize", str(bench_file), "--evals", "12", "--threads", "1"]) == EXIT_OK
    assert len((_opt_dir(bench_file) / "history.jsonl").read_bytes().splitlines()) == 12


def test_impossible_budget_is_a_usage_error(bench_file):
    assert main(["optimize", str(bench_file), "--evals", "2", "--threads", "1"]) == EXIT_USAGE


def test_landscape_small_grid(bench_file, capsys):
    assert main(["landscape", str(bench_file), "--res", "2x2", "--threads", "2"]) == EXIT_OK
    out = bench_file.parent / "runs" / "landscape-2x2"
    rows = (out / "landscape.csv").read_text().splitlines()
    assert rows[0] == "u,w,k,k_std,flux,flux_std,fitness"
    assert len(rows) == 1 + 4
    assert len((out / "evals.jsonl").read_bytes().splitlines()) == 4
    report = orjson.loads((out / "critical_regions.json").read_bytes())
    assert {"tolerance", "component_count", "components", "w_split"} <= set(report)
    for name in ("k", "fast_flux", "fitness"):
        assert (out / f"{name}.svg").exists()
    assert "critical component(s)" in capsys.readouterr().out


def test_landscape_overlays_history(bench_file):
    assert main(["optimize", str(bench_file), "--threads", "1"]) == EXIT_OK
    argv = ["landscape", str(bench_file), "--res", "2x2", "--history", str(_opt_dir(bench_file))]
    assert main(argv + ["--threads", "1"]) == EXIT_OK
    svg = (bench_file.parent / "runs" / "landscape-2x2" / "fitness.svg").read_text()
    assert 'id="sample-7"' in svg


def test_validate_reports_inconsistent_library(tmp_path, capsys):
    xs = write_json(tmp_path / "xs.json", library_doc(overrides={FUEL: {"sigma_t": [1.801, 1.9]}}))
    bench = write_json(tmp_path / "bench.json", bench_doc(xs_library=xs))
    assert main(["validate", str(bench)]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "[FAIL] xs-consistency" in out
    assert "'fuel'" in out


def test_config_error_exits_one(tmp_path, capsys):
    bench = write_json(tmp_path / "bench.json", {"xs_library": "nowhere.json"})
    assert main(["optimize", str(bench)]) == EXIT_FAILED
    assert "does not exist" in capsys.readouterr().err


def test_bench_speedup_needs_twenty_evals(bench_file):
    assert main(["bench-speedup", str(bench_file), "--evals", "5"]) == EXIT_USAGE


def test_bad_arguments_exit_two(bench_file):
    with pytest.raises(SystemExit) as info:
        main(["optimize", str(bench_file), "--algo", "random-search"])
    assert info.value.code == 2
