"""Steady water identification by shape index, and DEM burning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import GeoGrid, connected_components

SWI_MIN = 6.0
SWI_MAX = 200.0
MIN_AREA_CELLS = 78
BURN_DEPTH = 10.0


@dataclass(frozen=True)
class ComponentGeometry:
    label: int
    cells: int
    area: float
    perimeter: float

    @property
    def swi(self) -> float:
        return self.perimeter / np.sqrt(self.area)


def _mask_array(mask: GeoGrid) -> np.ndarray:
    if mask.cells.dtype == bool:
        return mask.cells
    return (mask.cells != 0) & mask.valid


def component_geometry(mask: GeoGrid, labels=None) -> list[ComponentGeometry]:
    """Area and edge-count perimeter of each eight-connected True component."""
    m = _mask_array(mask)
    if labels is None:
        labels = connected_components(mask, 8).cells
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return []
    padded = np.pad(m, 1, constant_values=False)
    exposed = np.zeros(m.shape, dtype=np.int64)
    core = padded[1:-1, 1:-1]
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        nb = padded[1 + dr:padded.shape[0] - 1 + dr, 1 + dc:padded.shape[1] - 1 + dc]
        exposed += core & ~nb
    idx = np.arange(1, n + 1)
    counts = ndimage.sum_labels(np.ones_like(labels), labels, idx).astype(np.int64)
    edges = ndimage.sum_labels(exposed, labels, idx).astype(np.int64)
    cs = float(mask.cellsize)
    return [
        ComponentGeometry(int(i), int(c), c * cs * cs, e * cs)
        for i, c, e in zip(idx.tolist(), counts.tolist(), edges.tolist())
    ]


def classify_steady_water(
    water_mask: GeoGrid,
    swi_min: float = SWI_MIN,
    swi_max: float = SWI_MAX,
    min_area_cells: int = MIN_AREA_CELLS,
) -> GeoGrid:
    """Keep water components that are river/lake shaped or large enough.

    A component survives when ``swi_min <= SWI <= swi_max`` or when it covers
    at least ``min_area_cells`` cells.
    """
    if not swi_min < swi_max:
        raise ValueError("swi_min must be below swi_max")
    if min_area_cells < 1:
        raise ValueError("min_area_cells must be at least 1")
    labels = connected_components(water_mask, 8).cells
    keep = [0]
    for g in component_geometry(water_mask, labels):
        keep.append(bool(swi_min <= g.swi <= swi_max or g.cells >= min_area_cells))
    lookup = np.array(keep, dtype=bool)
    return water_mask.like(lookup[labels], nodata=0)


def burn_hydrology(dem: GeoGrid, steady_water: GeoGrid, burn_depth: float = BURN_DEPTH) -> GeoGrid:
    """Flatten each steady-water component to its minimum elevation minus ``burn_depth``."""
    dem.check_geometry(steady_water, "steady water mask")
    if not burn_depth > 0:
        raise ValueError("burn_depth must be positive")
    m = _mask_array(steady_water) & dem.valid
    out = dem.cells.astype(np.float64)
    if not m.any():
        return dem.like(out)
    labels, n = ndimage.label(m, structure=np.ones((3, 3), dtype=bool))
    mins = ndimage.minimum(out, labels, np.arange(1, n + 1))
    low = np.concatenate(([np.nan], np.asarray(mins, dtype=np.float64) - burn_depth))
    out[m] = np.minimum(out[m], low[labels[m]])
    return dem.like(out)
