"""Indicator rating onto the common 0-5 scale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .grid import DEFAULT_NODATA, GeoGrid, euclidean_distance
from .routing import StreamNetwork

RATING_NODATA = DEFAULT_NODATA
JENKS_SAMPLE_CAP = 1_000_000

LANDUSE_CODES = {"vegetation": 1, "soil": 2, "building": 3, "road": 4, "water": 5}
LANDUSE_RATINGS = {"vegetation": 1, "soil": 2, "building": 3, "road": 4, "water": 5}
HYDROLITH_CODES = {"pervious": 1, "impervious": 2, "water": 3}
HYDROLITH_RATINGS = {"pervious": 1, "impervious": 3, "water": 4}

# (upper bound of class, rating); exactly-zero slope is its own class
SLOPE_BREAKS = ((0.0, 5), (2.0, 4), (6.0, 3), (12.0, 2), (20.0, 1), (math.inf, 0))
ELEVATION_BREAKS = ((12.0, 5), (23.0, 4), (46.0, 3), (152.0, 2), (math.inf, 1))

# stream level -> ((max distance in metres, rating), ...)
DISTANCE_BINS = {
    1: ((500.0, 1), (math.inf, 0)),
    2: ((500.0, 2), (1000.0, 1), (math.inf, 0)),
    3: ((500.0, 3), (1000.0, 2), (1500.0, 1), (math.inf, 0)),
    4: ((1000.0, 3), (2000.0, 2), (3000.0, 1), (math.inf, 0)),
    5: ((1000.0, 4), (2000.0, 3), (4000.0, 2), (6000.0, 1), (math.inf, 0)),
}
STEADY_WATER_RATING = 5


@dataclass(frozen=True)
class RatingScheme:
    kind: Literal["numeric-breaks", "categorical-lookup"]
    breaks: tuple = ()
    lookup: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "numeric-breaks":
            if not self.breaks:
                raise ValueError("numeric scheme needs at least one class")
            ubs = [float(b) for b, _ in self.breaks]
            if any(b >= a for a, b in zip(ubs[1:], ubs)):
                raise ValueError("class upper bounds must be strictly ascending")
            ratings = [r for _, r in self.breaks]
        elif self.kind == "categorical-lookup":
            ratings = list(self.lookup.values())
        else:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if any(int(r) != r or not 0 <= r <= 5 for r in ratings):
            raise ValueError("ratings must be integers in 0..5")

    @classmethod
    def numeric(cls, breaks: Sequence) -> "RatingScheme":
        return cls("numeric-breaks", tuple((float(b), int(r)) for b, r in breaks))

    @classmethod
    def categorical(cls, lookup: Mapping) -> "RatingScheme":
        return cls("categorical-lookup", lookup={int(k): int(v) for k, v in lookup.items()})


SLOPE_SCHEME = RatingScheme.numeric(SLOPE_BREAKS)
ELEVATION_SCHEME = RatingScheme.numeric(ELEVATION_BREAKS)
LANDUSE_SCHEME = RatingScheme.categorical({LANDUSE_CODES[k]: v for k, v in LANDUSE_RATINGS.items()})
HYDROLITH_SCHEME = RatingScheme.categorical({HYDROLITH_CODES[k]: v for k, v in HYDROLITH_RATINGS.items()})


def _mirror_pad(a: np.ndarray) -> np.ndarray:
    # reflect each axis on its own; a length-1 axis can only repeat itself
    for axis, n in enumerate(a.shape):
        width = [(0, 0)] * a.ndim
        width[axis] = (1, 1)
        a = np.pad(a, width, mode="reflect" if n > 1 else "edge")
    return a


def compute_slope(dem: GeoGrid) -> GeoGrid:
    """Slope in degrees from Horn's 3x3 finite difference.

    Edges are mirror-padded; a nodata neighbour takes the centre value.
    """
    z = np.where(dem.valid, dem.cells, 0.0).astype(np.float64)
    v = dem.valid
    zp, vp = _mirror_pad(z), _mirror_pad(v)
    rows, cols = z.shape

    def nb(dr, dc):
        vals = zp[1 + dr:rows + 1 + dr, 1 + dc:cols + 1 + dc]
        ok = vp[1 + dr:rows + 1 + dr, 1 + dc:cols + 1 + dc]
        return np.where(ok, vals, z)

    a, b, c = nb(-1, -1), nb(-1, 0), nb(-1, 1)
    d, f = nb(0, -1), nb(0, 1)
    g, h, i = nb(1, -1), nb(1, 0), nb(1, 1)
    cs = float(dem.cellsize)
    dzdx = ((c + 2 * f + i) - (a + 2 * d + g)) / (8 * cs)
    dzdy = ((g + 2 * h + i) - (a + 2 * b + c)) / (8 * cs)
    slope = np.degrees(np.arctan(np.hypot(dzdx, dzdy)))
    return dem.like(np.where(v, slope, float(RATING_NODATA)), nodata=float(RATING_NODATA))


def _subsample(values: np.ndarray, cap: int) -> np.ndarray:
    values = np.sort(values)
    if values.size <= cap:
        return values
    idx = np.round(np.linspace(0, values.size - 1, cap)).astype(np.int64)
    return values[idx]


def jenks_breaks(values, k: int, cap: int = JENKS_SAMPLE_CAP) -> list[float]:
    """Fisher-Jenks optimal class boundaries.

    Returns ``k + 1`` numbers ``[min, upper_1, ..., upper_k]`` where ``upper_i``
    is the largest value of class ``i``. Inputs larger than ``cap`` are reduced
    to an evenly spaced rank subsample first.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    vals = np.asarray(values, dtype=np.float64).ravel()
    vals = vals[np.isfinite(vals)]
    vals = _subsample(vals, cap)
    uniq, counts = np.unique(vals, return_counts=True)
    if uniq.size < k:
        raise ValueError(f"need at least {k} distinct values, got {uniq.size}")
    starts = kernels.jenks_dp(uniq, counts, k)
    ends = list(starts[1:]) + [uniq.size]
    return [float(uniq[0])] + [float(uniq[e - 1]) for e in ends]


def classify_by_breaks(values: np.ndarray, breaks: Sequence[float]) -> np.ndarray:
    """1-based class index of each value under ``jenks_breaks`` boundaries."""
    uppers = np.asarray(breaks[1:-1], dtype=np.float64)
    return np.searchsorted(uppers, values, side="left") + 1


def rate_numeric(grid: GeoGrid, scheme: RatingScheme) -> GeoGrid:
    if scheme.kind != "numeric-breaks":
        raise ValueError("rate_numeric needs a numeric-breaks scheme")
    ubs = np.array([b for b, _ in scheme.breaks], dtype=np.float64)
    ratings = np.array([r for _, r in scheme.breaks], dtype=np.int64)
    v = grid.valid
    vals = grid.cells.astype(np.float64)
    idx = np.searchsorted(ubs, np.where(v, vals, ubs[0]), side="left")
    over = v & (idx >= ubs.size)
    if over.any():
        worst = vals[over].max()
        raise ValueError(f"value {worst!r} above the top class bound {ubs[-1]!r}")
    out = np.where(v, ratings[np.minimum(idx, ubs.size - 1)], RATING_NODATA)
    return grid.like(out.astype(np.int64), nodata=RATING_NODATA)


def rate_categorical(grid: GeoGrid, scheme: RatingScheme) -> GeoGrid:
    if scheme.kind != "categorical-lookup":
        raise ValueError("rate_categorical needs a categorical-lookup scheme")
    v = grid.valid
    codes = grid.cells[v]
    present, counts = np.unique(codes, return_counts=True)
    missing = [(c, n) for c, n in zip(present.tolist(), counts.tolist()) if c not in scheme.lookup]
    if missing:
        desc = ", ".join(f"{c!r} ({n} cells)" for c, n in missing)
        raise ValueError(f"unmapped category code(s): {desc}")
    out = np.full(grid.shape, RATING_NODATA, dtype=np.int64)
    for code, rating in scheme.lookup.items():
        out[v & (grid.cells == code)] = rating
    return grid.like(out, nodata=RATING_NODATA)


def distance_rating(level: int, distance) -> np.ndarray:
    """Rating of cells at ``distance`` metres from a stream of ``level``."""
    bins = DISTANCE_BINS[min(max(int(level), 1), 5)]
    ubs = np.array([b for b, _ in bins])
    ratings = np.array([r for _, r in bins], dtype=np.int64)
    return ratings[np.searchsorted(ubs, np.asarray(distance), side="left")]


def rate_distance_from_streams(
    network: StreamNetwork,
    steady_water: GeoGrid,
    domain: Optional[np.ndarray] = None,
) -> GeoGrid:
    """Distance-from-streams rating, taking the best rating over stream levels.

    Steady water cells rate 5. ``domain`` (default: everywhere) marks cells
    that receive a rating; others are nodata.
    """
    orders = network.orders
    orders.check_geometry(steady_water, "steady water mask")
    lv = np.clip(np.where(orders.valid, orders.cells, 0), 0, 5)
    out = np.zeros(orders.shape, dtype=np.int64)
    for level in range(1, 6):
        src = lv == level
        if not src.any():
            continue
        dist = euclidean_distance(orders.like(src, nodata=0)).cells
        np.maximum(out, distance_rating(level, dist), out=out)
    water = steady_water.cells.astype(bool) & steady_water.valid
    out[water] = STEADY_WATER_RATING
    if domain is not None:
        out[~np.asarray(domain, dtype=bool)] = RATING_NODATA
    return orders.like(out, nodata=RATING_NODATA)


def slope_scheme_from_data(slope: GeoGrid, cap: int = JENKS_SAMPLE_CAP) -> RatingScheme:
    """Six-class slope scheme: exact zero rates 5, natural breaks of the rest rate 4..0."""
    vals = slope.cells[slope.valid]
    breaks = jenks_breaks(vals[vals > 0], 5, cap)
    uppers = breaks[1:-1] + [math.inf]
    return RatingScheme.numeric([(0.0, 5)] + list(zip(uppers, (4, 3, 2, 1, 0))))


def elevation_scheme_from_data(dem: GeoGrid, cap: int = JENKS_SAMPLE_CAP) -> RatingScheme:
    """Five natural-breaks elevation classes rated 5 (lowest) to 1."""
    breaks = jenks_breaks(dem.cells[dem.valid], 5, cap)
    uppers = breaks[1:-1] + [math.inf]
    return RatingScheme.numeric(list(zip(uppers, (5, 4, 3, 2, 1))))
