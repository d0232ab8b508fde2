"""Release checks behind ``validate``: library sanity, MC oracle, PPO gradient."""

import logging
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from mtrbench.errors import MtrBenchError
from mtrbench.model import homogeneous_model
from mtrbench.policy import gradient_check, init_policy, random_rollout
from mtrbench.runconfig import RunConfig
from mtrbench.transport import McConfig, kinf_analytic, run_keig
from mtrbench.xslib import CADMIUM, FAST, FUEL, THERMAL, WATER, XsLibrary, load_library


logger = logging.getLogger(__name__)

ORACLE_SEEDS = 20
ORACLE_MIN_PASS = 19
ORACLE_SIGMAS = 3.0
GRADIENT_TOL = 1e-4
# Minimum thermal-to-fast absorption ratio of the cadmium filter.
CADMIUM_THERMAL_RATIO = 100.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def check_library(cfg: RunConfig) -> tuple:
    try:
        lib = load_library(cfg.xs_library)
    except MtrBenchError as exc:
        return None, CheckResult("xs-consistency", False, str(exc))
    return lib, CheckResult(
        "xs-consistency", True, f"{len(lib.materials)} materials, digest {lib.source_digest[:12]}"
    )


def shape_violations(lib: XsLibrary) -> List[str]:
    """Ways the library breaks the two-region calibration shape; empty when it holds."""
    problems = []
    fissile = sorted(name for name, mat in lib.materials.items() if mat.is_fissile)
    if fissile != [FUEL]:
        problems.append(f"fissile materials {fissile}, expected only {FUEL!r}")

    cd = lib.material(CADMIUM).sigma_a
    if cd[FAST] <= 0 or cd[THERMAL] < CADMIUM_THERMAL_RATIO * cd[FAST]:
        problems.append(
            f"cadmium sigma_a thermal/fast must be >= {CADMIUM_THERMAL_RATIO:g}, got {cd[THERMAL]:g}/{cd[FAST]:g}"
        )

    water = lib.material(WATER)
    if water.removal <= sum(water.sigma_a):
        problems.append(
            f"water down-scatter {water.removal:g} must exceed its total absorption {sum(water.sigma_a):g}"
        )

    nsf = lib.material(FUEL).nu_sigma_f
    if not nsf[THERMAL] > nsf[FAST] > 0:
        problems.append(f"fuel nu_sigma_f must rise from fast to thermal, got {nsf[FAST]:g} -> {nsf[THERMAL]:g}")
    elif kinf_analytic(lib.material(FUEL)) <= 1.0:
        problems.append(f"fuel k_inf={kinf_analytic(lib.material(FUEL)):.6f} cannot reach criticality")
    return problems


def check_shape(lib: XsLibrary) -> CheckResult:
    try:
        problems = shape_violations(lib)
    except MtrBenchError as exc:
        return CheckResult("calibration-shape", False, str(exc))
    if problems:
        return CheckResult("calibration-shape", False, "; ".join(problems))
    return CheckResult("calibration-shape", True, f"fuel k_inf={kinf_analytic(lib.material(FUEL)):.6f}")


def check_oracle(lib: XsLibrary, mc: McConfig, seeds: int = ORACLE_SEEDS, min_pass: int = ORACLE_MIN_PASS) -> List[CheckResult]:
    """Homogeneous-medium MC k against the closed form, per material."""
    results = []
    for name in sorted(lib.materials):
        mat = lib.material(name)
        try:
            expected = kinf_analytic(mat)
        except (ValueError, MtrBenchError) as exc:
            results.append(CheckResult(f"oracle-{name}", False, str(exc)))
            continue
        model = homogeneous_model(mat)
        hits = 0
        for seed in range(1, seeds + 1):
            res = run_keig(model, replace(mc, seed=seed))
            if abs(res.k_mean - expected) <= ORACLE_SIGMAS * res.k_std:
                hits += 1
        results.append(
            CheckResult(
                f"oracle-{name}",
                hits >= min_pass,
                f"{hits}/{seeds} runs within {ORACLE_SIGMAS:g} sigma of k_inf={expected:.6f}",
            )
        )
    return results


def check_gradient(seed: int = 7, layer_sizes=(2, 8, 2), n_samples: int = 16) -> CheckResult:
    rng = np.random.default_rng(seed)
    net = init_policy(layer_sizes, rng, output_scale=1.0)
    err = gradient_check(net, random_rollout(net, n_samples, rng))
    return CheckResult("ppo-gradient", err < GRADIENT_TOL, f"max relative error {err:.2e}")


def run_checks(cfg: RunConfig) -> List[CheckResult]:
    lib, consistency = check_library(cfg)
    results = [consistency]
    if lib is not None:
        results.append(check_shape(lib))
        results.extend(check_oracle(lib, cfg.mc))
    results.append(check_gradient())
    for result in results:
        if result.passed:
            logger.info("%s", result.line())
        else:
            logger.warning("%s", result.line())
    return results
