"""Grid scans of the (U, W) box, critical-region topology and SVG heatmaps."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.cm import ScalarMappable
from matplotlib.colors import LogNorm, Normalize
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Rectangle
from scipy import ndimage
from scipy.interpolate import griddata

from mtrbench.model import DEFAULT_BOUNDS, ParamBounds, ParamPoint
from mtrbench.objective import Evaluation


logger = logging.getLogger(__name__)

CSV_HEADER = ("u", "w", "k", "k_std", "flux", "flux_std", "fitness")
FIELDS = {"fitness": "fitness", "fast_flux": "flux", "k": "k"}
DEFAULT_TOL = 0.05

# Cross-shaped structuring element: 4-neighbour connectivity.
_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass
class LandscapeMap:
    u_grid: np.ndarray
    w_grid: np.ndarray
    k: np.ndarray  # (n_u, n_w)
    k_std: np.ndarray
    flux: np.ndarray
    flux_std: np.ndarray
    fitness: np.ndarray
    failed: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.failed is None:
            self.failed = np.zeros(self.k.shape, dtype=bool)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.u_grid.size, self.w_grid.size)

    def field(self, name: str) -> np.ndarray:
        return getattr(self, FIELDS.get(name, name))


@dataclass
class Component:
    cells: List[Tuple[int, int]]
    best_cell: Tuple[int, int]
    best_u: float
    best_w: float
    best_k: float
    best_flux: float
    best_fitness: float
    w_min: float
    w_max: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": len(self.cells),
            "cells": [list(c) for c in self.cells],
            "best": {
                "cell": list(self.best_cell),
                "u": self.best_u,
                "w": self.best_w,
                "k": self.best_k,
                "flux": self.best_flux,
                "fitness": self.best_fitness,
            },
            "w_min": self.w_min,
            "w_max": self.w_max,
        }


@dataclass
class CriticalRegionReport:
    tolerance: float
    components: List[Component]

    @property
    def component_count(self) -> int:
        return len(self.components)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tolerance": self.tolerance,
            "component_count": self.component_count,
            "components": [c.to_dict() for c in self.components],
            "w_split": basin_split(self),
        }


def grid_points(bounds: ParamBounds, resolution: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    n_u, n_w = resolution
    if n_u < 2 or n_w < 2:
        raise ValueError("grid resolution must be at least 2x2")
    return (
        np.linspace(bounds.u_min, bounds.u_max, n_u),
        np.linspace(bounds.w_min, bounds.w_max, n_w),
    )


def grid_scan(evaluator, resolution: Tuple[int, int], bounds: ParamBounds = DEFAULT_BOUNDS) -> LandscapeMap:
    """Evaluate every grid point; cell (i, j) gets evaluation index i * n_w + j."""
    u_grid, w_grid = grid_points(bounds, resolution)
    points = [ParamPoint(float(u), float(w)) for u in u_grid for w in w_grid]
    logger.info("Scanning %dx%d grid (%d evaluations)", u_grid.size, w_grid.size, len(points))
    outcomes = evaluator.evaluate_batch(points, return_exceptions=True)

    shape = (u_grid.size, w_grid.size)
    arrays = {name: np.full(shape, np.nan) for name in ("k", "k_std", "flux", "flux_std", "fitness")}
    failed = np.zeros(shape, dtype=bool)
    for idx, outcome in enumerate(outcomes):
        i, j = divmod(idx, w_grid.size)
        if isinstance(outcome, Exception):
            logger.warning("Cell U=%.4f W=%.4f failed: %s", u_grid[i], w_grid[j], outcome)
            failed[i, j] = True
            continue
        arrays["k"][i, j] = outcome.k
        arrays["k_std"][i, j] = outcome.k_std
        arrays["flux"][i, j] = outcome.fast_flux
        arrays["flux_std"][i, j] = outcome.fast_flux_std
        arrays["fitness"][i, j] = outcome.fitness
    return LandscapeMap(u_grid=u_grid, w_grid=w_grid, failed=failed, **arrays)


def write_csv(lmap: LandscapeMap, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(CSV_HEADER)
        for i, u in enumerate(lmap.u_grid):
            for j, w in enumerate(lmap.w_grid):
                row = (u, w, lmap.k[i, j], lmap.k_std[i, j], lmap.flux[i, j], lmap.flux_std[i, j], lmap.fitness[i, j])
                writer.writerow([repr(float(v)) for v in row])


def read_csv(path: Path) -> LandscapeMap:
    with Path(path).open(newline="", encoding="utf-8") as fp:
        reader = csv.reader(fp)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = np.array([[float(v) for v in row] for row in reader])
    u_grid = np.unique(rows[:, 0])
    w_grid = np.unique(rows[:, 1])
    shape = (u_grid.size, w_grid.size)
    cols = {name: rows[:, c].reshape(shape) for c, name in enumerate(CSV_HEADER) if c >= 2}
    return LandscapeMap(
        u_grid=u_grid,
        w_grid=w_grid,
        k=cols["k"],
        k_std=cols["k_std"],
        flux=cols["flux"],
        flux_std=cols["flux_std"],
        fitness=cols["fitness"],
        failed=np.isnan(cols["k"]),
    )


def critical_regions(lmap: LandscapeMap, tol: float = DEFAULT_TOL) -> CriticalRegionReport:
    with np.errstate(invalid="ignore"):
        critical = (np.abs(lmap.k - 1.0) <= tol) & ~lmap.failed
    labels, count = ndimage.label(critical, structure=_FOUR_CONNECTED)
    components = []
    for label in range(1, count + 1):
        cells = [tuple(int(v) for v in c) for c in np.argwhere(labels == label)]
        best = min(cells, key=lambda c: lmap.fitness[c])
        ws = [lmap.w_grid[j] for _, j in cells]
        components.append(
            Component(
                cells=cells,
                best_cell=best,
                best_u=float(lmap.u_grid[best[0]]),
                best_w=float(lmap.w_grid[best[1]]),
                best_k=float(lmap.k[best]),
                best_flux=float(lmap.flux[best]),
                best_fitness=float(lmap.fitness[best]),
                w_min=float(min(ws)),
                w_max=float(max(ws)),
            )
        )
    # Low-W component first.
    components.sort(key=lambda c: (c.w_max, c.w_min))
    return CriticalRegionReport(tolerance=tol, components=components)


def basin_split(report: CriticalRegionReport) -> float | None:
    """W halfway between the low-W component and the nearest other component."""
    if report.component_count < 2:
        return None
    low = report.components[0]
    above = min(c.w_min for c in report.components[1:])
    return 0.5 * (low.w_max + above)


def _norm(field_name: str, values: np.ndarray):
    finite = values[np.isfinite(values)]
    if field_name == "fast_flux":
        positive = finite[finite > 0]
        if positive.size == 0:
            return Normalize(vmin=0.0, vmax=1.0)
        vmin, vmax = float(positive.min()), float(positive.max())
        return LogNorm(vmin=vmin, vmax=vmax if vmax > vmin else vmin * 10.0)
    if finite.size == 0:
        return Normalize(vmin=0.0, vmax=1.0)
    vmin, vmax = float(finite.min()), float(finite.max())
    return Normalize(vmin=vmin, vmax=vmax if vmax > vmin else vmin + 1.0)


def _edges(grid: np.ndarray) -> np.ndarray:
    mid = 0.5 * (grid[1:] + grid[:-1])
    return np.concatenate(([grid[0] - (mid[0] - grid[0])], mid, [grid[-1] + (grid[-1] - mid[-1])]))


def _draw_cells(ax, u_grid: np.ndarray, w_grid: np.ndarray, values: np.ndarray, field_name: str):
    norm = _norm(field_name, values)
    cmap = matplotlib.colormaps["viridis"]
    u_edges, w_edges = _edges(u_grid), _edges(w_grid)
    for i in range(u_grid.size):
        for j in range(w_grid.size):
            value = values[i, j]
            if not np.isfinite(value):
                color = "lightgrey"
            elif field_name == "fast_flux":
                color = cmap(norm(max(value, norm.vmin)))
            else:
                color = cmap(norm(value))
            cell = Rectangle(
                (u_edges[i], w_edges[j]),
                u_edges[i + 1] - u_edges[i],
                w_edges[j + 1] - w_edges[j],
                facecolor=color,
                edgecolor="none",
            )
            cell.set_gid(f"cell-{i}-{j}")
            ax.add_patch(cell)
    ax.set_xlim(u_edges[0], u_edges[-1])
    ax.set_ylim(w_edges[0], w_edges[-1])
    ax.set_xlabel("uranium density U (g/cc)")
    ax.set_ylabel("water density W (g/cc)")
    return ScalarMappable(norm=norm, cmap=cmap)


def _overlay_history(ax, history: Sequence[Evaluation]) -> None:
    for n, ev in enumerate(history):
        (marker,) = ax.plot(
            [ev.params.u_density], [ev.params.w_density], marker="x", color="black", markersize=4, linestyle="none"
        )
        marker.set_gid(f"sample-{n}")


def _save(fig: Figure, out: Path) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "mtrbench", "svg.fonttype": "none"}):
        fig.savefig(out, format="svg", metadata={"Date": None})


def render_heatmap(
    lmap: LandscapeMap,
    field_name: str,
    out: Path,
    history: Sequence[Evaluation] | None = None,
    tol: float = DEFAULT_TOL,
) -> None:
    if field_name not in FIELDS:
        raise ValueError(f"field must be one of {sorted(FIELDS)}")
    fig = Figure(figsize=(7, 6))
    ax = fig.add_subplot()
    mappable = _draw_cells(ax, lmap.u_grid, lmap.w_grid, lmap.field(field_name), field_name)
    fig.colorbar(mappable, ax=ax, label=field_name)

    with np.errstate(invalid="ignore"):
        critical = (np.abs(lmap.k - 1.0) <= tol) & ~lmap.failed
    radius = 0.3 * min(np.ptp(lmap.u_grid) / lmap.u_grid.size, np.ptp(lmap.w_grid) / lmap.w_grid.size)
    for n, (i, j) in enumerate(np.argwhere(critical)):
        ring = Circle((lmap.u_grid[i], lmap.w_grid[j]), radius, fill=False, edgecolor="red", linewidth=1.0)
        ring.set_gid(f"critical-{n}")
        ax.add_patch(ring)
    if history:
        _overlay_history(ax, history)
    ax.set_title(f"{field_name} over (U, W)")
    _save(fig, out)
    logger.info("Wrote %s heatmap to %s", field_name, out)


def render_history_map(
    history: Sequence[Evaluation],
    field_name: str,
    out: Path,
    bounds: ParamBounds = DEFAULT_BOUNDS,
    resolution: Tuple[int, int] = (40, 40),
) -> None:
    """Nearest-neighbour fill of scattered samples, with a cross per sample."""
    if field_name not in FIELDS:
        raise ValueError(f"field must be one of {sorted(FIELDS)}")
    if not history:
        raise ValueError("history is empty")
    u_grid, w_grid = grid_points(bounds, resolution)
    span = bounds.upper - bounds.lower
    samples = np.array([[ev.params.u_density, ev.params.w_density] for ev in history])
    values = np.array(
        [{"fitness": ev.fitness, "fast_flux": ev.fast_flux, "k": ev.k}[field_name] for ev in history], dtype=float
    )
    uu, ww = np.meshgrid(u_grid, w_grid, indexing="ij")
    # Distances measured in box-normalized coordinates.
    filled = griddata(
        (samples - bounds.lower) / span,
        values,
        ((uu - bounds.u_min) / span[0], (ww - bounds.w_min) / span[1]),
        method="nearest",
    )
    fig = Figure(figsize=(7, 6))
    ax = fig.add_subplot()
    mappable = _draw_cells(ax, u_grid, w_grid, filled, field_name)
    fig.colorbar(mappable, ax=ax, label=field_name)
    _overlay_history(ax, history)
    ax.set_title(f"{field_name} as sampled ({len(history)} points)")
    _save(fig, out)
    logger.info("Wrote sampled %s map to %s", field_name, out)
