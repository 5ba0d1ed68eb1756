"""Synthetic valley-basin scenes for tests and demos.

A scene is a meandering valley draining to the southern edge, with a river in
the valley floor and a few small constructed ponds. A village block and a road
complete the land cover. The flood mask covers the low valley floor next to
the river; dry ground sits on the upper slopes.

    python -m floodrisk.synthetic OUTDIR [--size 128] [--seed 0]

writes the input grids plus a ready-to-run ``run.toml``.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .grid import GeoGrid, write_ascii_grid
from .rating import HYDROLITH_CODES, LANDUSE_CODES


@dataclass(frozen=True)
class Scene:
    dem: GeoGrid
    water_mask: GeoGrid
    landuse: GeoGrid
    hydrolith: GeoGrid
    flooded: GeoGrid
    dry: GeoGrid
    normal_water: GeoGrid

    def grids(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def valley_scene(
    rows: int = 128,
    cols: int = 128,
    cellsize: float = 30.0,
    seed: int = 0,
    floor_frac: float = 0.25,
    roughness: float = 1.0,
) -> Scene:
    rng = np.random.default_rng(seed)
    r, c = np.indices((rows, cols), dtype=np.float64)
    centre = cols / 2 + 0.12 * cols * np.sin(2 * np.pi * r / rows * 1.3 + rng.uniform(0, np.pi))
    offset = np.abs(c - centre)
    floor_w = max(3.0, floor_frac * cols)
    # a gently rising floodplain, then hillsides climbing at roughly 10-15 degrees
    down = 0.01 * (rows - 1 - r) * cellsize
    side = np.clip(offset - floor_w, 0, None) * cellsize
    # side valleys cut into the hillsides so tributaries get their own basins
    gullies = 1.0 + 0.35 * np.sin(2 * np.pi * r / max(rows / 5.0, 8.0))
    dem = 3.0 + down + 4.0 * np.minimum(offset, floor_w) / floor_w + 0.22 * side * gullies
    hills = ndimage.gaussian_filter(rng.normal(size=(rows, cols)), 3.0)
    hills /= max(hills.std(), 1e-12)
    # small hummocks on the floodplain give noisy pixel slopes
    hummocks = ndimage.gaussian_filter(rng.normal(size=(rows, cols)), 1.0)
    hummocks /= max(hummocks.std(), 1e-12)
    on_floor = offset <= floor_w
    dem = dem + np.where(on_floor, roughness * hummocks, 1.5 * hills)
    dem = np.round(dem, 3)

    river = offset <= max(1.0, 0.012 * cols)
    ponds = np.zeros((rows, cols), dtype=bool)
    for _ in range(3):
        pr = int(rng.integers(rows // 6, rows - rows // 6))
        side_sign = 1 if rng.random() < 0.5 else -1
        pc = int(np.clip(centre[pr, 0] + side_sign * (floor_w + 4), 0, cols - 4))
        ponds[pr:pr + 3, pc:pc + 3] = True
    water = river | ponds

    landuse = np.full((rows, cols), LANDUSE_CODES["vegetation"], dtype=np.int64)
    landuse[offset <= 2 * floor_w] = LANDUSE_CODES["soil"]
    vr, vc = rows // 3, int(np.clip(centre[rows // 3, 0] + floor_w * 1.5, 0, cols - 8))
    village = np.zeros_like(water)
    village[vr:vr + max(4, rows // 16), vc:vc + max(4, cols // 16)] = True
    landuse[village] = LANDUSE_CODES["building"]
    road = np.zeros_like(water)
    road[:, min(cols - 1, vc + max(4, cols // 16))] = True
    landuse[road] = LANDUSE_CODES["road"]
    landuse[water] = LANDUSE_CODES["water"]

    hydrolith = np.full((rows, cols), HYDROLITH_CODES["pervious"], dtype=np.int64)
    hydrolith[village | road] = HYDROLITH_CODES["impervious"]
    hydrolith[water] = HYDROLITH_CODES["water"]

    flooded = (offset <= floor_w) & ~water
    dry = (offset >= floor_w + 0.25 * cols) & ~water

    def grid(a, nodata=-9999):
        return GeoGrid(a, cellsize, 500000.0, 3500000.0, nodata)

    return Scene(
        dem=grid(dem),
        water_mask=grid(water.astype(np.int64), 0),
        landuse=grid(landuse),
        hydrolith=grid(hydrolith),
        flooded=grid(flooded.astype(np.int64), 0),
        dry=grid(dry.astype(np.int64), 0),
        normal_water=grid(water.astype(np.int64), 0),
    )


def _stream_threshold(scene: Scene) -> int:
    return max(20, scene.dem.rows * scene.dem.cols // 150)


def config_text(scene: Scene, output_dir: str = "out") -> str:
    lines = ["[inputs]"]
    lines += [f'{k} = "{k}.asc"' for k in scene.grids()]
    lines += [
        "",
        "[output]",
        f'dir = "{output_dir}"',
        "",
        "[routing]",
        f"stream_threshold_cells = {_stream_threshold(scene)}",
        "",
        "[delineation]",
        'method = "d8"',
        "area_threshold_ha = 66.7",
        "",
        "[constraint]",
        'method = "maximum"',
        'criteria = ["Slope", "DistanceFromStreams"]',
        "",
    ]
    return "\n".join(lines)


def write_fixture(directory, rows: int = 128, cols: int = 128, cellsize: float = 30.0, seed: int = 0) -> Path:
    """Write a scene and its ``run.toml`` into ``directory``; return the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scene = valley_scene(rows, cols, cellsize, seed)
    for name, g in scene.grids().items():
        write_ascii_grid(g, directory / f"{name}.asc")
    cfg = directory / "run.toml"
    cfg.write_text(config_text(scene))
    return cfg


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m floodrisk.synthetic")
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--cellsize", type=float, default=30.0)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)
    print(write_fixture(a.outdir, a.size, a.size, a.cellsize, a.seed))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
