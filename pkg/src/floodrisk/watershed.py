"""Sub-watershed delineation: D8 stream-link basins and MFD flat-seed growth."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from . import kernels
from .grid import GeoGrid, ZoneLabels, connected_components
from .routing import (
    d8_flow_direction,
    extract_streams,
    fill_pits,
    flow_accumulation,
    link_downstream,
    mfd_flow_direction,
    receivers,
    strahler_order,
)

# sub-watershed area thresholds in hectares
THRESHOLD_LADDER_HA = (66.7, 200.0, 667.0, 2000.0, 3333.0, 6667.0)

SEED_KINDS = {kernels.FLAT_SEED: "flat", kernels.TRACED: "traced"}


class NoStreamsError(ValueError):
    pass


@dataclass(frozen=True)
class DelineationConfig:
    method: Literal["d8", "mfd"] = "mfd"
    area_threshold_ha: float = 66.7
    stream_threshold_cells: Optional[float] = None
    pit_fill: bool = True

    def __post_init__(self):
        if self.method not in ("d8", "mfd"):
            raise ValueError(f"unknown delineation method {self.method!r}")
        if not self.area_threshold_ha > 0:
            raise ValueError("area_threshold_ha must be positive")

    def threshold_cells(self, cellsize: float) -> float:
        return self.area_threshold_ha * 10_000.0 / (cellsize * cellsize)


@dataclass(frozen=True)
class Delineation:
    zones: ZoneLabels
    kinds: dict  # label -> seed kind name


def _relabel_scan_order(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Renumber positive labels 1..N by first appearance in raster order."""
    flat = labels.ravel()
    pos = flat > 0
    uniq, first = np.unique(flat[pos], return_index=True)
    rank = np.argsort(np.argsort(np.flatnonzero(pos)[first]))
    lut = np.zeros(int(flat.max()) + 1 if flat.size else 1, dtype=np.int64)
    lut[uniq] = rank + 1
    return lut[labels], uniq[np.argsort(rank)]


def boundary_zones(zones: GeoGrid) -> set[int]:
    """Labels of zones touching the grid edge or a nodata (label 0) cell."""
    lab = zones.cells
    out = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])).tolist())
    padded = np.pad(lab, 1, constant_values=0)
    rows, cols = lab.shape
    near_nodata = np.zeros(lab.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            near_nodata |= padded[1 + dr:rows + 1 + dr, 1 + dc:cols + 1 + dc] == 0
    out |= set(np.unique(lab[near_nodata]).tolist())
    out.discard(0)
    return out


def delineate_d8(dem: GeoGrid, cfg: DelineationConfig) -> Delineation:
    """Stream-link sub-watersheds at an area threshold.

    Links are junction-delimited stretches of the D8 stream network thresholded
    at the area threshold. A link basin smaller than the threshold is merged
    into the basin of the link it drains into, upstream links first. Cells whose
    path meets no stream form one zone per terminal outlet.
    """
    if cfg.method != "d8":
        raise ValueError("delineate_d8 needs method='d8'")
    routed = fill_pits(dem) if cfg.pit_fill else dem
    flow = d8_flow_direction(routed)
    acc = flow_accumulation(flow)
    thr = cfg.threshold_cells(dem.cellsize)
    stream_thr = cfg.stream_threshold_cells if cfg.stream_threshold_cells is not None else thr
    streams = extract_streams(acc, max(stream_thr, 1))
    if not streams.cells.any():
        raise NoStreamsError(f"no streams at threshold ({cfg.area_threshold_ha} ha)")
    net = strahler_order(streams, flow)
    valid = dem.valid
    zone = kernels.downstream_labels(flow.codes, valid, net.link_ids.cells.clip(min=0))

    # merge undersized link basins downstream
    nlinks = len(net.links)
    parent = np.arange(nlinks + 1)
    area = np.bincount(zone.ravel(), minlength=nlinks + 1).astype(np.float64)
    downstream = link_downstream(net, flow)
    indeg = np.zeros(nlinks + 1, dtype=np.int64)
    for t in downstream.values():
        indeg[t] += 1
    ready = [lid for lid in range(1, nlinks + 1) if indeg[lid] == 0]
    while ready:
        lid = ready.pop(0)
        t = downstream.get(lid)
        if t is None:
            continue
        if area[lid] < thr:
            parent[lid] = t
            area[t] += area[lid]
        indeg[t] -= 1
        if indeg[t] == 0:
            ready.append(t)
    root = parent.copy()
    for lid in range(1, nlinks + 1):
        r = lid
        while root[r] != r:
            r = root[r]
        root[lid] = r
    zone = root[zone]

    # streamless basins keyed by their terminal cell
    rec = receivers(flow)
    terminal = valid.ravel() & (rec < 0)
    tid = np.zeros(valid.size, dtype=np.int64)
    tid[terminal] = np.arange(1, int(terminal.sum()) + 1) + nlinks
    tlab = kernels.downstream_labels(flow.codes, valid, tid.reshape(valid.shape))
    zone = np.where((zone == 0) & valid, tlab, zone)
    zone[~valid] = 0

    labels, old = _relabel_scan_order(zone)
    kinds = {i + 1: ("link" if o <= nlinks else "outlet") for i, o in enumerate(old.tolist())}
    return Delineation(ZoneLabels.from_grid(dem, labels), kinds)


def flat_components(flow_mask: np.ndarray, valid: np.ndarray, like: GeoGrid):
    """Eight-connected flat components (no lower neighbour) and their processing order."""
    flats = like.like((flow_mask == 0) & valid, nodata=0)
    comp = connected_components(flats, 8).cells
    sizes = np.bincount(comp.ravel())
    labels = np.arange(1, sizes.size)
    order = labels[np.lexsort((labels, -sizes[1:]))] if labels.size else labels
    return comp, order


def delineate_mfd(dem: GeoGrid, cfg: DelineationConfig) -> Delineation:
    """Grow sub-watersheds upslope from flat seeds until the area threshold.

    Flat components (cells with no strictly lower neighbour) seed zones in
    descending size order. A zone absorbs cells whose MFD mask points into it,
    one cell at a time, and closes once its area reaches the threshold; the
    cells still flowing into a closed zone seed new zones, one per
    eight-connected group.
    """
    if cfg.method != "mfd":
        raise ValueError("delineate_mfd needs method='mfd'")
    flow = mfd_flow_direction(dem)
    mask = flow.codes
    comp, order = flat_components(mask, dem.valid, dem)
    labels, kinds = kernels.mfd_grow(mask, dem.valid, comp, order, cfg.threshold_cells(dem.cellsize))
    kind_names = {i: SEED_KINDS[int(k)] for i, k in enumerate(kinds.tolist()) if i > 0}
    return Delineation(ZoneLabels.from_grid(dem, labels), kind_names)


def delineate(dem: GeoGrid, cfg: DelineationConfig) -> Delineation:
    if cfg.method == "d8":
        return delineate_d8(dem, cfg)
    return delineate_mfd(dem, cfg)


def write_zone_summary(result: Delineation, path) -> None:
    zones = result.zones
    sizes = zones.sizes()
    ha = zones.cell_area / 10_000.0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "cell_count", "area_ha", "seed_kind"])
        for label in sorted(sizes):
            w.writerow([label, sizes[label], repr(sizes[label] * ha), result.kinds.get(label, "")])
