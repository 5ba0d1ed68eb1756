"""AHP weighting, zonal statistics, flood risk index synthesis and risk classes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

from .grid import GeoGrid, ZoneLabels
from .rating import classify_by_breaks, jenks_breaks

CRITERIA = ("Slope", "Elevation", "DistanceFromStreams", "HydroLithological", "LandUse")

# pairwise judgments between CRITERIA, row criterion vs column criterion
DEFAULT_JUDGMENT = (
    ("1", "4", "1/2", "3", "1/2"),
    ("1/4", "1", "1/3", "1/2", "1/4"),
    ("2", "3", "1", "3", "1"),
    ("1/3", "2", "1/3", "1", "1/3"),
    ("2", "4", "1", "3", "1"),
)

# Saaty's random consistency index by matrix order
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45}
CR_LIMIT = 0.1

RISK_CLASS_NAMES = {1: "Very Low", 2: "Low", 3: "Normal", 4: "High", 5: "Very High"}
CLASS_NODATA = 0
FRI_NODATA = -9999.0

Statistic = Literal["maximum", "median", "majority"]
STATISTICS = ("maximum", "median", "majority")


class ConvergenceError(RuntimeError):
    pass


def parse_judgment(rows) -> np.ndarray:
    """Judgment matrix from numbers or rational strings such as ``"1/3"``."""
    out = []
    for row in rows:
        if isinstance(row, str):
            row = row.split()
        out.append([float(Fraction(str(v).strip())) if isinstance(v, str) else float(v) for v in row])
    mat = np.array(out, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"judgment matrix must be square, got shape {mat.shape}")
    return mat


@dataclass(frozen=True)
class JudgmentModel:
    matrix: np.ndarray
    weights: np.ndarray
    lambda_max: float
    ci: float
    cr: float
    ri: float
    iterations: int = 0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def accepted(self) -> bool:
        return self.cr < CR_LIMIT


def weights_from_judgment(J, tol: float = 1e-12, max_iter: int = 10_000) -> JudgmentModel:
    """Principal eigenvector weights of a positive reciprocal matrix by power iteration."""
    J = parse_judgment(J) if not isinstance(J, np.ndarray) else np.asarray(J, dtype=np.float64)
    n = J.shape[0]
    if J.shape != (n, n) or not 2 <= n <= 9:
        raise ValueError("judgment matrix must be square with order 2..9")
    if not (J > 0).all():
        raise ValueError("judgment matrix entries must be positive")
    if not np.allclose(np.diag(J), 1.0, rtol=0, atol=1e-9) or not np.allclose(J * J.T, 1.0, rtol=0, atol=1e-9):
        raise ValueError("judgment matrix is not reciprocal")

    x = np.full(n, 1.0 / n)
    lam = np.nan
    for it in range(1, max_iter + 1):
        y = J @ x
        lam_new = y.sum()  # x sums to one
        x = y / lam_new
        if abs(lam_new - lam) < tol:
            lam = lam_new
            break
        lam = lam_new
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    ci = (lam - n) / (n - 1)
    ri = RANDOM_INDEX[n]
    cr = ci / ri if ri > 0 else 0.0
    return JudgmentModel(J, x, float(lam), float(ci), float(cr), ri, it)


# ---------------------------------------------------------------------------
# zonal statistics


def _zone_runs(zones: np.ndarray, values: np.ndarray):
    order = np.lexsort((values, zones))
    z, v = zones[order], values[order]
    zstart = np.flatnonzero(np.r_[True, z[1:] != z[:-1]])
    return z, v, zstart


def zonal_values(zones: np.ndarray, values: np.ndarray, method: Statistic) -> dict[int, float]:
    """Statistic of ``values`` per zone label; inputs are matching 1D arrays."""
    if method not in STATISTICS:
        raise ValueError(f"unknown zonal statistic {method!r}")
    if zones.size == 0:
        return {}
    z, v, zs = _zone_runs(zones, values)
    ze = np.r_[zs[1:], z.size]
    labels = z[zs]
    if method == "maximum":
        stat = v[ze - 1]
    elif method == "median":
        stat = v[zs + (ze - zs - 1) // 2]
    else:
        rstart = np.flatnonzero(np.r_[True, (z[1:] != z[:-1]) | (v[1:] != v[:-1])])
        rlen = np.diff(np.r_[rstart, z.size])
        rzone = np.searchsorted(zs, rstart, side="right") - 1
        # per zone: longest run, earliest (smallest value) on ties
        key = np.lexsort((rstart, -rlen, rzone))
        first = np.r_[True, rzone[key][1:] != rzone[key][:-1]]
        stat = v[rstart[key][first]]
    return dict(zip(labels.tolist(), stat.tolist()))


def zonal_statistic(zones: ZoneLabels, rated: GeoGrid, method: Statistic) -> GeoGrid:
    """Broadcast a per-zone statistic of ``rated`` back to every cell of the zone.

    maximum is the largest value, median the lower median, majority the most
    frequent value with ties going to the smallest. Nodata never enters a
    statistic; zones without data, and cells outside any zone, become nodata.
    """
    rated.check_geometry(zones, "zone raster")
    lab = zones.cells
    ok = rated.valid & (lab > 0)
    stats = zonal_values(lab[ok], rated.cells[ok], method)
    out = np.full(rated.shape, rated.nodata, dtype=rated.cells.dtype)
    if stats:
        keys = np.fromiter(stats.keys(), dtype=np.int64)
        vals = np.array(list(stats.values()), dtype=rated.cells.dtype)
        lut = np.full(int(lab.max()) + 1, rated.nodata, dtype=rated.cells.dtype)
        lut[keys] = vals
        inside = lab > 0
        out[inside] = lut[lab[inside]]
    return rated.like(out)


# ---------------------------------------------------------------------------
# flood risk index


@dataclass(frozen=True)
class ConstraintSpec:
    constrained: frozenset = field(default_factory=frozenset)
    method: Statistic = "maximum"
    zones: Optional[ZoneLabels] = None

    def __post_init__(self):
        object.__setattr__(self, "constrained", frozenset(self.constrained))
        unknown = self.constrained - set(CRITERIA)
        if unknown:
            raise ValueError(f"unknown criteria {sorted(unknown)}")
        if self.method not in STATISTICS:
            raise ValueError(f"unknown zonal statistic {self.method!r}")
        if self.constrained and self.zones is None:
            raise ValueError("constrained criteria need a zone raster")

    @property
    def passthrough(self) -> tuple:
        return tuple(c for c in CRITERIA if c not in self.constrained)

    @property
    def model_name(self) -> str:
        if not self.constrained:
            return "AHP"
        if self.constrained == frozenset(CRITERIA):
            return "WZSAHP"
        return "WZSAHP-RC"


def flood_risk_index(
    criteria: Mapping[str, GeoGrid],
    omega: Sequence[float],
    spec: Optional[ConstraintSpec] = None,
) -> GeoGrid:
    """Weighted sum of rated criteria, with constrained ones replaced by zonal statistics."""
    spec = spec or ConstraintSpec()
    omega = np.asarray(omega, dtype=np.float64)
    if omega.size != len(CRITERIA) or set(criteria) != set(CRITERIA):
        raise ValueError(f"need {len(CRITERIA)} weights and criteria {CRITERIA}, got {omega.size} and {sorted(criteria)}")
    first = criteria[CRITERIA[0]]
    total = np.zeros(first.shape, dtype=np.float64)
    valid = np.ones(first.shape, dtype=bool)
    for w, name in zip(omega.tolist(), CRITERIA):
        grid = criteria[name]
        first.check_geometry(grid, name)
        if name in spec.constrained:
            grid = zonal_statistic(spec.zones, grid, spec.method)
        valid &= grid.valid
        total = total + w * grid.cells.astype(np.float64)
    return first.like(np.where(valid, total, FRI_NODATA), nodata=FRI_NODATA)


@dataclass(frozen=True)
class RiskClassGrid:
    grid: GeoGrid
    breaks: tuple

    @property
    def names(self):
        return RISK_CLASS_NAMES


def classify_risk(fri: GeoGrid, k: int = 5) -> RiskClassGrid:
    """Natural-breaks slicing of the index into classes 1 (Very Low) .. k."""
    v = fri.valid
    vals = fri.cells[v].astype(np.float64)
    distinct = np.unique(vals)
    out = np.full(fri.shape, CLASS_NODATA, dtype=np.int64)
    if distinct.size < k:
        warnings.warn(
            f"flood risk index has {distinct.size} distinct values, fewer than {k} classes",
            RuntimeWarning,
            stacklevel=2,
        )
        if distinct.size:
            out[v] = np.searchsorted(distinct, vals) + 1
        breaks = tuple([float(distinct[0])] + distinct.tolist()) if distinct.size else ()
    else:
        breaks = tuple(jenks_breaks(vals, k))
        out[v] = classify_by_breaks(vals, breaks)
    return RiskClassGrid(fri.like(out, nodata=CLASS_NODATA), breaks)
