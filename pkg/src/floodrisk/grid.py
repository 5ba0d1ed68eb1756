"""Georeferenced grid container, ESRI ASCII grid I/O and generic raster primitives."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from . import kernels

PathLike = Union[str, Path]

DEFAULT_NODATA = -9999

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


class AsciiGridError(ValueError):
    """Malformed ESRI ASCII grid file."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class GeometryMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GeoGrid:
    """Immutable 2D raster with lower-left origin; row 0 is the northernmost row.

    ``cells`` is stored as a read-only ``(rows, cols)`` array.
    """

    cells: np.ndarray
    cellsize: float
    x_origin: float = 0.0
    y_origin: float = 0.0
    nodata: float = DEFAULT_NODATA
    _valid: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        cells = np.array(self.cells, copy=True)
        if cells.ndim != 2:
            raise ValueError(f"cells must be 2D, got shape {cells.shape}")
        if cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValueError("grid needs at least one row and one column")
        if not self.cellsize > 0:
            raise ValueError(f"cellsize must be positive, got {self.cellsize}")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        if cells.dtype == bool:
            valid = np.ones(cells.shape, dtype=bool)
        elif np.issubdtype(cells.dtype, np.floating):
            valid = np.isfinite(cells) & (cells != self.nodata)
        else:
            valid = cells != self.nodata
        valid.flags.writeable = False
        object.__setattr__(self, "_valid", valid)

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self):
        return self.cells.shape

    @property
    def valid(self) -> np.ndarray:
        """Boolean array, True where the cell holds data."""
        return self._valid

    @property
    def cell_area(self) -> float:
        return float(self.cellsize) ** 2

    def geometry(self):
        return (self.rows, self.cols, float(self.cellsize), float(self.x_origin), float(self.y_origin))

    def same_geometry(self, other: "GeoGrid") -> bool:
        return self.geometry() == other.geometry()

    def check_geometry(self, other: "GeoGrid", what: str = "grid") -> None:
        if not self.same_geometry(other):
            raise GeometryMismatch(f"{what} geometry {other.geometry()} does not match {self.geometry()}")

    def like(self, cells, nodata=None) -> "GeoGrid":
        """New grid with this geometry and the given cell values."""
        return GeoGrid(
            cells,
            self.cellsize,
            self.x_origin,
            self.y_origin,
            self.nodata if nodata is None else nodata,
        )

    def masked(self, dtype=float) -> np.ndarray:
        """Cells as ``dtype`` with nodata replaced by NaN (float) for arithmetic."""
        out = self.cells.astype(dtype)
        out[~self.valid] = np.nan
        return out

    def __eq__(self, other):
        if not isinstance(other, GeoGrid):
            return NotImplemented
        return (
            self.geometry() == other.geometry()
            and _same_nodata(self.nodata, other.nodata)
            and self.cells.dtype.kind == other.cells.dtype.kind
            and np.array_equal(self.cells, other.cells, equal_nan=self.cells.dtype.kind == "f")
        )

    __hash__ = None


def _same_nodata(a, b):
    return float(a) == float(b) or (np.isnan(a) and np.isnan(b))


class ZoneLabels(GeoGrid):
    """Integer zone raster; label 0 means unassigned or nodata."""

    def __init__(self, cells, cellsize, x_origin=0.0, y_origin=0.0, nodata=0):
        super().__init__(np.asarray(cells, dtype=np.int64), cellsize, x_origin, y_origin, 0)

    @classmethod
    def from_grid(cls, grid: GeoGrid, labels) -> "ZoneLabels":
        return cls(labels, grid.cellsize, grid.x_origin, grid.y_origin)

    @property
    def count(self) -> int:
        return int(np.unique(self.cells[self.cells > 0]).size)

    def sizes(self) -> dict[int, int]:
        labels, counts = np.unique(self.cells[self.cells > 0], return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))


# ---------------------------------------------------------------------------
# ESRI ASCII grid


def _format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _parse_number(token: str):
    try:
        return int(token)
    except ValueError:
        return float(token)


def read_ascii_grid(path: PathLike) -> GeoGrid:
    """Read an ESRI ASCII grid.

    Header keys are case-insensitive; ``xllcenter``/``yllcenter`` are accepted
    and converted to corner coordinates. Integer-only files load as int64,
    anything else as float64.
    """
    path = Path(path)
    with open(path, "r") as fh:
        lines = fh.read().splitlines()

    header = {}
    lineno = 0
    centered = set()
    while lineno < len(lines):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        key = parts[0].lower()
        if key in ("xllcenter", "yllcenter"):
            centered.add(key[0])
            key = key[0] + "llcorner"
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise AsciiGridError(path, lineno + 1, f"header line for {parts[0]!r} needs exactly one value")
        if key in header:
            raise AsciiGridError(path, lineno + 1, f"duplicate header key {parts[0]!r}")
        try:
            header[key] = _parse_number(parts[1])
        except ValueError:
            raise AsciiGridError(path, lineno + 1, f"non-numeric header value {parts[1]!r}") from None
        lineno += 1

    for key in _HEADER_KEYS:
        if key == "nodata_value":
            continue
        if key not in header:
            raise AsciiGridError(path, lineno + 1, f"missing header key {key!r}")
    ncols, nrows = header["ncols"], header["nrows"]
    if not isinstance(ncols, int) or not isinstance(nrows, int) or ncols < 1 or nrows < 1:
        raise AsciiGridError(path, 1, "ncols and nrows must be positive integers")
    cellsize = float(header["cellsize"])
    if not cellsize > 0:
        raise AsciiGridError(path, 1, "cellsize must be positive")
    xll = float(header["xllcorner"])
    yll = float(header["yllcorner"])
    if "x" in centered:
        xll -= cellsize / 2
    if "y" in centered:
        yll -= cellsize / 2
    nodata = header.get("nodata_value", DEFAULT_NODATA)

    rows = []
    is_int = True
    for i in range(lineno, len(lines)):
        tokens = lines[i].split()
        if not tokens:
            continue
        if len(rows) == nrows:
            raise AsciiGridError(path, i + 1, f"more than {nrows} data rows")
        if len(tokens) != ncols:
            raise AsciiGridError(path, i + 1, f"expected {ncols} values, found {len(tokens)}")
        row = []
        for tok in tokens:
            try:
                val = _parse_number(tok)
            except ValueError:
                raise AsciiGridError(path, i + 1, f"non-numeric token {tok!r}") from None
            if not isinstance(val, int):
                is_int = False
            row.append(val)
        rows.append(row)
    if len(rows) != nrows:
        raise AsciiGridError(path, len(lines), f"expected {nrows} data rows, found {len(rows)}")

    cells = np.array(rows, dtype=np.int64 if is_int else np.float64)
    return GeoGrid(cells, cellsize, xll, yll, nodata)


def write_ascii_grid(grid: GeoGrid, path: PathLike) -> None:
    """Write ``grid`` as ESRI ASCII; floats use the shortest round-trippable repr."""
    nodata = grid.nodata if grid.nodata is not None else DEFAULT_NODATA
    # the nodata literal follows the cell dtype so all-nodata grids keep their type
    if grid.cells.dtype.kind in "iub":
        nodata_literal = str(int(nodata))
    else:
        nodata_literal = repr(float(nodata))
    header = [
        f"ncols {grid.cols}",
        f"nrows {grid.rows}",
        f"xllcorner {_format_number(float(grid.x_origin))}",
        f"yllcorner {_format_number(float(grid.y_origin))}",
        f"cellsize {_format_number(float(grid.cellsize))}",
        f"NODATA_value {nodata_literal}",
    ]
    cells = grid.cells
    valid = grid.valid
    if cells.dtype.kind in "iub":
        fmt = str
        values = cells.astype(np.int64).tolist()
    else:
        fmt = repr
        values = cells.astype(np.float64).tolist()
    valid_rows = valid.tolist()
    body = []
    for r in range(grid.rows):
        vr = valid_rows[r]
        body.append(" ".join(fmt(v) if ok else nodata_literal for v, ok in zip(values[r], vr)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header + body))
        fh.write("\n")


# ---------------------------------------------------------------------------
# spatial primitives

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


def connected_components(mask: GeoGrid, connectivity: int = 8) -> ZoneLabels:
    """Label connected True cells; labels follow raster scan order of first encounter."""
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 4 or 8")
    m = _as_bool(mask)
    labels, _ = ndimage.label(m, structure=_STRUCTURES[connectivity])
    return ZoneLabels.from_grid(mask, labels)


def _as_bool(mask: GeoGrid) -> np.ndarray:
    if mask.cells.dtype == bool:
        return mask.cells.copy()
    return (mask.cells != 0) & mask.valid


def euclidean_distance(mask: GeoGrid) -> GeoGrid:
    """Exact center-to-center distance in map units to the nearest True cell."""
    m = _as_bool(mask)
    if not m.any():
        raise ValueError("no source cells")
    sq = kernels.squared_edt(m.astype(np.uint8))
    dist = np.sqrt(sq) * float(mask.cellsize)
    return mask.like(dist, nodata=DEFAULT_NODATA)
