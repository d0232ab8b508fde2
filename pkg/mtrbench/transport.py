"""Two-group Monte Carlo k-eigenvalue engine for reflective 1-D slabs.

Each batch runs through a compiled kernel that follows one history at a
time until it ends in absorption. Fission sites are banked with implicit
production at each absorption, and the fast and thermal track lengths
inside the tally layer are accumulated per batch.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numba import njit

from config import MAX_EVENTS_PER_HISTORY, VOID_SIGMA_T
from mtrbench import rng
from mtrbench.errors import DegenerateMediumError, TransportError
from mtrbench.model import SlabModel
from mtrbench.rng import SLOT_BRANCH, SLOT_DIRECTION, SLOT_FLIGHT, SLOT_REACTION, uniform
from mtrbench.xslib import FAST, THERMAL, MaterialXs


logger = logging.getLogger(__name__)

ENTROPY_BINS = 16
_SOURCE_STREAM = 1
_RESAMPLE_STREAM = 2


@dataclass(frozen=True)
class McConfig:
    particles_per_batch: int = 2000
    n_batches: int = 60
    n_inactive: int = 10
    seed: int = 1

    def __post_init__(self) -> None:
        if self.particles_per_batch < 100:
            raise ValueError("particles_per_batch must be >= 100")
        if not (self.n_batches > self.n_inactive >= 1):
            raise ValueError("need n_batches > n_inactive >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def n_active(self) -> int:
        return self.n_batches - self.n_inactive


@dataclass(frozen=True)
class RunResult:
    k_mean: float
    k_std: float
    fast_flux: float
    fast_flux_std: float
    thermal_flux: float
    thermal_flux_std: float
    batches_used: int
    batch_k: Tuple[float, ...] = ()
    batch_entropy: Tuple[float, ...] = ()


@dataclass(frozen=True)
class _Tables:
    edges: np.ndarray
    sigma_t: np.ndarray  # (layers, groups)
    sigma_a: np.ndarray
    nu_sigma_f: np.ndarray
    sigma_s: np.ndarray  # (layers, groups, groups)
    void: np.ndarray
    fissile: np.ndarray
    tally: int
    tally_width: float


def _tables(model: SlabModel) -> _Tables:
    xs = [layer.xs for layer in model.layers]
    sigma_t = np.array([m.sigma_t for m in xs], dtype=float)
    nu_sigma_f = np.array([m.nu_sigma_f for m in xs], dtype=float)
    void = sigma_t < VOID_SIGMA_T
    for g in (FAST, THERMAL):
        if void[:, g].all():
            raise DegenerateMediumError(
                f"every layer is void in group {g + 1}; particles would stream forever"
            )
    tally = model.tally_index
    return _Tables(
        edges=model.edges,
        sigma_t=sigma_t,
        sigma_a=np.array([m.sigma_a for m in xs], dtype=float),
        nu_sigma_f=nu_sigma_f,
        sigma_s=np.array([m.sigma_s for m in xs], dtype=float),
        void=void,
        fissile=(nu_sigma_f > 0).any(axis=1),
        tally=tally,
        tally_width=float(model.layers[tally].thickness_cm),
    )


def kinf_analytic(mat: MaterialXs) -> float:
    """Two-group infinite-medium k for chi=(1, 0) and no upscatter."""
    if mat.chi != (1.0, 0.0) or mat.sigma_s[THERMAL][FAST] != 0:
        raise ValueError(f"{mat.name}: analytic k_inf needs chi=(1, 0) and no upscatter")
    removal = mat.sigma_s[FAST][THERMAL]
    if removal > 0 and mat.sigma_a[THERMAL] == 0:
        raise DegenerateMediumError(f"{mat.name}: thermal absorption is zero, thermal flux unbounded")
    if not mat.is_fissile:
        return 0.0
    thermal = mat.nu_sigma_f[THERMAL] * removal / mat.sigma_a[THERMAL] if removal > 0 else 0.0
    return (mat.nu_sigma_f[FAST] + thermal) / (mat.sigma_a[FAST] + removal)


def shannon_entropy(sites: np.ndarray, n_bins: int, extent: Tuple[float, float] | None = None) -> float:
    """Entropy in bits of the binned site positions."""
    sites = np.asarray(sites, dtype=float)
    if sites.size == 0:
        raise ValueError("entropy of an empty bank is undefined")
    lo, hi = extent if extent is not None else (float(sites.min()), float(sites.max()))
    if hi <= lo:
        return 0.0
    counts, _ = np.histogram(sites, bins=n_bins, range=(lo, hi))
    p = counts[counts > 0] / sites.size
    # A single occupied bin sums to -0.0.
    return float(-(p * np.log2(p)).sum()) + 0.0


def _initial_source(tables: _Tables, n: int, seed: int, batch: int = 0) -> np.ndarray:
    gen = rng.batch_generator(seed, batch, _SOURCE_STREAM)
    widths = np.diff(tables.edges)
    weights = np.where(tables.fissile, widths, 0.0)
    if weights.sum() == 0:
        weights = widths
    layer = gen.choice(len(widths), size=n, p=weights / weights.sum())
    return tables.edges[layer] + gen.random(n) * widths[layer]


@njit(cache=True, nogil=True)
def _track_batch(edges, sigma_t, sigma_a, nu_sigma_f, sigma_s, void, tally, source, key, max_events):
    """Run one generation, one history at a time.

    Returns (banked sites, fast track, thermal track, runaway histories); the
    track lengths are summed over the tally layer.
    """
    n_layers = edges.size - 1
    sites = np.empty(2 * source.size + 16)
    n_sites = 0
    track = np.zeros(2)
    runaway = 0
    for p in range(source.size):
        pid = np.uint64(p)
        x = source[p]
        layer = min(max(np.searchsorted(edges, x, side="right") - 1, 0), n_layers - 1)
        g = FAST
        mu = 2.0 * uniform(key, pid, 0, SLOT_DIRECTION) - 1.0
        counter = 1
        while True:
            if counter > max_events:
                runaway += 1
                break
            if mu > 0.0:
                to_edge = (edges[layer + 1] - x) / mu
            else:
                to_edge = (edges[layer] - x) / mu
            if void[layer, g]:
                flight = np.inf
            else:
                flight = -np.log(uniform(key, pid, counter, SLOT_FLIGHT)) / sigma_t[layer, g]

            if flight >= to_edge:
                # Surface crossing, with mirror reflection at both outer faces.
                if layer == tally:
                    track[g] += to_edge
                if mu > 0.0:
                    x = edges[layer + 1]
                    if layer == n_layers - 1:
                        mu = -mu
                    else:
                        layer += 1
                else:
                    x = edges[layer]
                    if layer == 0:
                        mu = -mu
                    else:
                        layer -= 1
                counter += 1
                continue

            x += flight * mu
            if layer == tally:
                track[g] += flight
            st = sigma_t[layer, g]
            sa = sigma_a[layer, g]
            if uniform(key, pid, counter, SLOT_REACTION) * st < sa:
                nsf = nu_sigma_f[layer, g]
                if nsf > 0.0:
                    count = int(np.floor(nsf / sa + uniform(key, pid, counter, SLOT_BRANCH)))
                    if n_sites + count > sites.size:
                        grown = np.empty(max(2 * sites.size, n_sites + count))
                        grown[:n_sites] = sites[:n_sites]
                        sites = grown
                    for _ in range(count):
                        sites[n_sites] = x
                        n_sites += 1
                break

            to_fast = sigma_s[layer, g, FAST]
            if uniform(key, pid, counter, SLOT_BRANCH) * (to_fast + sigma_s[layer, g, THERMAL]) < to_fast:
                g = FAST
            else:
                g = THERMAL
            mu = 2.0 * uniform(key, pid, counter, SLOT_DIRECTION) - 1.0
            counter += 1
    return sites[:n_sites].copy(), track[FAST], track[THERMAL], runaway


def _mean_std(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def run_keig(model: SlabModel, cfg: McConfig) -> RunResult:
    tables = _tables(model)
    has_fuel = bool(tables.fissile.any())
    n = cfg.particles_per_batch
    extent = (float(tables.edges[0]), float(tables.edges[-1]))
    source = _initial_source(tables, n, cfg.seed)

    k_values = np.zeros(cfg.n_batches)
    fast = np.zeros(cfg.n_batches)
    thermal = np.zeros(cfg.n_batches)
    entropy = np.zeros(cfg.n_batches)
    batches_used = 0
    for batch in range(cfg.n_batches):
        batches_used = batch + 1
        sites, fast_track, thermal_track, runaway = _track_batch(
            tables.edges,
            tables.sigma_t,
            tables.sigma_a,
            tables.nu_sigma_f,
            tables.sigma_s,
            tables.void,
            tables.tally,
            source,
            rng.stream_key(cfg.seed, batch),
            MAX_EVENTS_PER_HISTORY,
        )
        if runaway:
            raise TransportError(
                f"{runaway} histories exceeded {MAX_EVENTS_PER_HISTORY} events in batch {batch}"
            )
        k_values[batch] = sites.size / n
        fast[batch] = fast_track / (tables.tally_width * n)
        thermal[batch] = thermal_track / (tables.tally_width * n)
        if sites.size == 0:
            if not has_fuel:
                # No fissile material: remaining generations score zero.
                logger.warning("Source extinct after batch %d; remaining batches score k=0", batch)
                break
            logger.warning("Source extinct in batch %d; restarting from the fuel layers", batch)
            source = _initial_source(tables, n, cfg.seed, batch + 1)
            continue
        entropy[batch] = shannon_entropy(sites, ENTROPY_BINS, extent)
        logger.debug("batch %d k=%.5f entropy=%.4f", batch, k_values[batch], entropy[batch])
        gen = rng.batch_generator(cfg.seed, batch + 1, _RESAMPLE_STREAM)
        pick = gen.choice(sites.size, size=n, replace=sites.size < n)
        source = sites[pick]

    active = slice(cfg.n_inactive, cfg.n_batches)
    k_mean, k_std = _mean_std(k_values[active])
    fast_mean, fast_std = _mean_std(fast[active])
    thermal_mean, thermal_std = _mean_std(thermal[active])
    return RunResult(
        k_mean=k_mean,
        k_std=k_std,
        fast_flux=fast_mean,
        fast_flux_std=fast_std,
        thermal_flux=thermal_mean,
        thermal_flux_std=thermal_std,
        batches_used=batches_used,
        batch_k=tuple(float(v) for v in k_values),
        batch_entropy=tuple(float(v) for v in entropy),
    )
