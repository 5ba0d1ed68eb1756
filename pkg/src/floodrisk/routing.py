"""Flow routing on D8 and multiple-flow-direction grids, plus the D8 stream network."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import kernels
from .grid import GeoGrid

# D8 codes / MFD bits, neighbour i = 0..7 clockwise from east
E, SE, S, SW, W, NW, N, NE = (1 << i for i in range(8))
OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
FLOW_NODATA = -1


@dataclass(frozen=True)
class FlowField:
    """Per-cell flow encoding; ``grid`` cells hold codes, nodata is -1."""

    grid: GeoGrid
    mode: Literal["single", "multi"]

    @property
    def codes(self) -> np.ndarray:
        return np.where(self.grid.valid, self.grid.cells, 0).astype(np.uint8)

    @property
    def valid(self) -> np.ndarray:
        return self.grid.valid

    @classmethod
    def from_grid(cls, grid: GeoGrid, mode: str) -> "FlowField":
        if mode not in ("single", "multi"):
            raise ValueError(f"unknown flow mode {mode!r}")
        v = grid.valid
        c = grid.cells
        if v.any() and (c[v].min() < 0 or c[v].max() > 255):
            raise ValueError("flow codes must lie in 0..255")
        if mode == "single":
            vals = c[v].astype(np.int64)
            if ((vals & (vals - 1)) != 0).any():
                raise ValueError("single-direction codes need at most one bit set")
        return cls(grid.like(np.where(v, c.astype(np.int64), FLOW_NODATA), nodata=FLOW_NODATA), mode)


@dataclass(frozen=True)
class StreamNetwork:
    stream_mask: GeoGrid
    orders: GeoGrid
    link_ids: GeoGrid
    links: list  # (link_id, outlet_row, outlet_col, order)


def _flow_grid(dem: GeoGrid, codes: np.ndarray) -> GeoGrid:
    cells = np.where(dem.valid, codes.astype(np.int64), FLOW_NODATA)
    return dem.like(cells, nodata=FLOW_NODATA)


def fill_pits(dem: GeoGrid) -> GeoGrid:
    """Priority-flood depression filling with a one-ulp gradient across filled flats.

    Every valid cell not on the grid edge or next to nodata ends with a
    strictly lower neighbour, so D8 paths reach the domain boundary.
    """
    z = np.where(dem.valid, dem.cells, 0.0).astype(np.float64)
    filled = kernels.fill_depressions(z, dem.valid)
    return dem.like(np.where(dem.valid, filled, dem.nodata).astype(np.float64))


def d8_flow_direction(dem: GeoGrid) -> FlowField:
    z = np.where(dem.valid, dem.cells, 0.0)
    codes = kernels.d8_directions(z, dem.valid, dem.cellsize)
    return FlowField(_flow_grid(dem, codes), "single")


def mfd_flow_direction(dem: GeoGrid) -> FlowField:
    z = np.where(dem.valid, dem.cells, 0.0)
    masks = kernels.mfd_masks(z, dem.valid)
    return FlowField(_flow_grid(dem, masks), "multi")


def _require_single(flow: FlowField):
    if flow.mode != "single":
        raise ValueError("operation needs a single-direction (D8) flow field")


def flow_accumulation(flow: FlowField) -> GeoGrid:
    """Number of upstream cells draining through each cell (self excluded)."""
    _require_single(flow)
    acc = kernels.flow_accumulation(flow.codes, flow.valid)
    return flow.grid.like(np.where(flow.valid, np.asarray(acc, dtype=np.int64), FLOW_NODATA), nodata=FLOW_NODATA)


def extract_streams(acc: GeoGrid, threshold_cells: float) -> GeoGrid:
    if threshold_cells < 1:
        raise ValueError("threshold_cells must be at least 1")
    return acc.like(acc.valid & (acc.cells >= threshold_cells), nodata=0)


def receivers(flow: FlowField) -> np.ndarray:
    """Flat index of each cell's D8 receiver; -1 where there is none or the cell is nodata."""
    _require_single(flow)
    codes = flow.codes.astype(np.int64)
    valid = flow.valid
    rows, cols = codes.shape
    rec = np.full(codes.size, -1, dtype=np.int64)
    rr, cc = np.indices(codes.shape)
    for i, (dr, dc) in enumerate(OFFSETS):
        sel = valid & (codes == (1 << i))
        nr, nc = rr[sel] + dr, cc[sel] + dc
        inside = (nr >= 0) & (nr < rows) & (nc >= 0) & (nc < cols)
        tgt = np.full(nr.shape, -1, dtype=np.int64)
        tgt[inside] = nr[inside] * cols + nc[inside]
        ok = np.zeros(nr.shape, dtype=bool)
        ok[inside] = valid.ravel()[tgt[inside]]
        tgt[~ok] = -1
        rec[np.flatnonzero(sel.ravel())] = tgt
    return rec


def strahler_order(streams: GeoGrid, flow: FlowField) -> StreamNetwork:
    """Strahler order and junction-delimited links over a D8 stream forest."""
    _require_single(flow)
    streams.check_geometry(flow.grid, "flow field")
    smask = (streams.cells != 0) & streams.valid & flow.valid
    flat = smask.ravel()
    rec = receivers(flow)
    down = np.where((rec >= 0) & flat[np.maximum(rec, 0)], rec, -1)
    down[~flat] = -1

    stream_idx = np.flatnonzero(flat)
    n = smask.size
    indeg = np.bincount(down[down >= 0], minlength=n)
    down_l = down.tolist()
    indeg_l = indeg.tolist()

    order = [0] * n
    top = [0] * n  # highest inflow order
    ntop = [0] * n  # inflows carrying that order
    link_head = [-1] * n
    queue = deque(c for c in stream_idx.tolist() if indeg_l[c] == 0)
    remaining = indeg_l[:]
    seen = 0
    while queue:
        c = queue.popleft()
        seen += 1
        if indeg_l[c] == 0:
            order[c] = 1
        else:
            order[c] = top[c] + 1 if ntop[c] >= 2 else top[c]
        if indeg_l[c] != 1:
            link_head[c] = c
        t = down_l[c]
        if t >= 0:
            if order[c] > top[t]:
                top[t], ntop[t] = order[c], 1
            elif order[c] == top[t]:
                ntop[t] += 1
            if indeg_l[t] == 1:
                link_head[t] = link_head[c]
            remaining[t] -= 1
            if remaining[t] == 0:
                queue.append(t)
    if seen != stream_idx.size:
        raise ValueError("stream cells do not form a forest under the flow field")

    heads = sorted({link_head[c] for c in stream_idx.tolist()})
    link_of_head = {h: i + 1 for i, h in enumerate(heads)}
    link_ids = np.zeros(n, dtype=np.int64)
    orders = np.zeros(n, dtype=np.int64)
    outlets = {}
    cols = smask.shape[1]
    for c in stream_idx.tolist():
        lid = link_of_head[link_head[c]]
        link_ids[c] = lid
        orders[c] = order[c]
        t = down_l[c]
        if t < 0 or indeg_l[t] != 1:
            outlets[lid] = c
    links = [(lid, outlets[lid] // cols, outlets[lid] % cols, int(orders[outlets[lid]])) for lid in sorted(outlets)]
    g = flow.grid
    return StreamNetwork(
        stream_mask=g.like(smask, nodata=0),
        orders=g.like(orders.reshape(smask.shape), nodata=-1),
        link_ids=g.like(link_ids.reshape(smask.shape), nodata=-1),
        links=links,
    )


def link_downstream(network: StreamNetwork, flow: FlowField) -> dict[int, int]:
    """Map each link id to the link its outlet drains into (absent for terminal links)."""
    rec = receivers(flow)
    ids = network.link_ids.cells.ravel()
    cols = network.link_ids.cols
    out = {}
    for lid, r, c, _ in network.links:
        t = rec[r * cols + c]
        if t >= 0 and ids[t] > 0:
            out[lid] = int(ids[t])
    return out


def write_links_csv(network: StreamNetwork, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["link_id", "outlet_row", "outlet_col", "order"])
        for row in network.links:
            w.writerow(row)
