"""End-to-end workflow: condition, route, delineate, rate, weigh, synthesize, classify, validate.

Each stage reads its inputs through a :class:`Workspace`, which serves grids
from memory when the previous stage ran in the same process and from the
stage directory otherwise, so running stages one by one from the command line
yields the same files as :func:`run_pipeline`.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .ahp import (
    CRITERIA,
    ConstraintSpec,
    RiskClassGrid,
    classify_risk,
    flood_risk_index,
    parse_judgment,
    weights_from_judgment,
)
from .config import PipelineConfig
from .grid import GeoGrid, ZoneLabels, read_ascii_grid, write_ascii_grid
from .hydro import burn_hydrology, classify_steady_water
from .rating import (
    compute_slope,
    elevation_scheme_from_data,
    rate_categorical,
    rate_distance_from_streams,
    rate_numeric,
    slope_scheme_from_data,
)
from .routing import (
    FlowField,
    d8_flow_direction,
    extract_streams,
    fill_pits,
    flow_accumulation,
    mfd_flow_direction,
    strahler_order,
    write_links_csv,
)
from .validation import ValidationMasks, report_rows, validate, write_report_csv
from .watershed import DelineationConfig, delineate, write_zone_summary

log = logging.getLogger(__name__)

SCATTER_STRIDE = 20
RATING_FILES = {
    "Slope": "rating_slope",
    "Elevation": "rating_elevation",
    "DistanceFromStreams": "rating_distance",
    "HydroLithological": "rating_hydrolith",
    "LandUse": "rating_landuse",
}
MATRIX_COLUMNS = (
    "model",
    "constrained",
    "statistic",
    "zone_source",
    "threshold_ha",
    "validation_set",
    "tp",
    "fp",
    "fn",
    "tn",
    "correct_pct",
    "fit_pct",
    "precision",
    "recall",
    "f1",
    "precision_defined",
    "recall_defined",
    "candidate",
    "error",
)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class Workspace:
    """Named intermediate artifacts backed by a stage directory."""

    def __init__(self, cfg: PipelineConfig, directory: Optional[Path] = None):
        self.cfg = cfg
        self.dir = Path(directory or cfg.output_dir)
        self.cache: dict = {}
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.dir / name

    def _record(self, path: Path):
        if path not in self.written:
            self.written.append(path)

    def put(self, name: str, grid: GeoGrid) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.path(f"{name}.asc")
        write_ascii_grid(grid, p)
        self._record(p)
        self.cache[name] = grid

    def get(self, name: str) -> GeoGrid:
        if name in self.cache:
            return self.cache[name]
        p = self.path(f"{name}.asc")
        if not p.exists():
            raise FileNotFoundError(f"missing intermediate {p}; run the producing stage first")
        grid = read_ascii_grid(p)
        self.cache[name] = grid
        return grid

    def input(self, key: str) -> GeoGrid:
        name = f"input:{key}"
        if name not in self.cache:
            self.cache[name] = read_ascii_grid(self.cfg.inputs[key])
        return self.cache[name]

    def csv_path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.path(name)
        self._record(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        self.written.clear()


def _bool_grid(g: GeoGrid) -> GeoGrid:
    return g.like((g.cells != 0) & g.valid, nodata=0)


# ---------------------------------------------------------------------------
# stages


def stage_condition(ws: Workspace) -> None:
    h = ws.cfg.hydro
    dem = ws.input("dem")
    water = _bool_grid(ws.input("water_mask"))
    dem.check_geometry(water, "water mask")
    steady = classify_steady_water(water, h.swi_min, h.swi_max, h.min_area_cells)
    ws.put("steady_water", steady)
    ws.put("dem_conditioned", burn_hydrology(dem, steady, h.burn_depth))


def _routing_dem(ws: Workspace) -> GeoGrid:
    dem = ws.get("dem_conditioned")
    return fill_pits(dem) if ws.cfg.routing.pit_fill else dem


def stage_flowdir(ws: Workspace) -> None:
    routed = _routing_dem(ws)
    if ws.cfg.routing.pit_fill:
        ws.put("dem_filled", routed)
    ws.put("flowdir_d8", d8_flow_direction(routed).grid)
    ws.put("flowdir_mfd", mfd_flow_direction(ws.get("dem_conditioned")).grid)


def _d8(ws: Workspace) -> FlowField:
    return FlowField.from_grid(ws.get("flowdir_d8"), "single")


def stage_accumulate(ws: Workspace) -> None:
    ws.put("accumulation", flow_accumulation(_d8(ws)))


def stage_streams(ws: Workspace) -> None:
    streams = extract_streams(ws.get("accumulation"), ws.cfg.routing.stream_threshold_cells)
    net = strahler_order(streams, _d8(ws))
    ws.put("streams", net.stream_mask)
    ws.put("stream_order", net.orders)
    write_links_csv(net, ws.csv_path("stream_links.csv"))


def _delineation_config(ws: Workspace, method=None, threshold=None) -> DelineationConfig:
    d = ws.cfg.delineation
    return DelineationConfig(
        method=method or d.method,
        area_threshold_ha=threshold if threshold is not None else d.area_threshold_ha,
        pit_fill=ws.cfg.routing.pit_fill,
    )


def stage_delineate(ws: Workspace) -> None:
    result = delineate(ws.get("dem_conditioned"), _delineation_config(ws))
    ws.put("zones", result.zones)
    write_zone_summary(result, ws.csv_path("zones.csv"))


def _write_schemes(ws: Workspace, schemes: dict) -> None:
    with open(ws.csv_path("rating_schemes.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "kind", "bound_or_code", "rating"])
        for name, scheme in schemes.items():
            if scheme.kind == "numeric-breaks":
                for ub, r in scheme.breaks:
                    w.writerow([name, scheme.kind, repr(float(ub)), r])
            else:
                for code in sorted(scheme.lookup):
                    w.writerow([name, scheme.kind, code, scheme.lookup[code]])


def stage_rate(ws: Workspace) -> None:
    dem = ws.input("dem")
    schemes = ws.cfg.rating.schemes()
    slope = compute_slope(dem)
    if schemes["slope"] is None:
        schemes["slope"] = slope_scheme_from_data(slope)
    if schemes["elevation"] is None:
        schemes["elevation"] = elevation_scheme_from_data(dem)
    landuse = ws.input("landuse")
    hydrolith = ws.input("hydrolith")
    dem.check_geometry(landuse, "land use grid")
    dem.check_geometry(hydrolith, "hydro-lithology grid")
    net = strahler_order(ws.get("streams"), _d8(ws))
    steady = _bool_grid(ws.get("steady_water"))

    ws.put(RATING_FILES["Slope"], rate_numeric(slope, schemes["slope"]))
    ws.put(RATING_FILES["Elevation"], rate_numeric(dem, schemes["elevation"]))
    ws.put(RATING_FILES["DistanceFromStreams"], rate_distance_from_streams(net, steady, dem.valid))
    ws.put(RATING_FILES["HydroLithological"], rate_categorical(hydrolith, schemes["hydrolith"]))
    ws.put(RATING_FILES["LandUse"], rate_categorical(landuse, schemes["landuse"]))
    _write_schemes(ws, schemes)


def stage_weights(ws: Workspace) -> None:
    model = weights_from_judgment(parse_judgment(ws.cfg.judgment))
    with open(ws.csv_path("weights.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for name, wt in zip(CRITERIA, model.weights.tolist()):
            w.writerow([f"weight.{name}", repr(wt)])
        w.writerow(["lambda_max", repr(model.lambda_max)])
        w.writerow(["ci", repr(model.ci)])
        w.writerow(["ri", repr(model.ri)])
        w.writerow(["cr", repr(model.cr)])
        w.writerow(["accepted", "true" if model.accepted else "false"])
    if not model.accepted:
        raise ValueError(f"judgment matrix rejected: consistency ratio {model.cr:.4f} >= 0.1")
    ws.cache["weights"] = model.weights


def _weights(ws: Workspace) -> np.ndarray:
    if "weights" in ws.cache:
        return ws.cache["weights"]
    p = ws.path("weights.csv")
    if not p.exists():
        raise FileNotFoundError(f"missing intermediate {p}; run the weights stage first")
    with open(p, newline="") as fh:
        table = {row["quantity"]: row["value"] for row in csv.DictReader(fh)}
    if table.get("accepted") != "true":
        raise ValueError("weights.csv records a rejected judgment matrix")
    ws.cache["weights"] = np.array([float(table[f"weight.{c}"]) for c in CRITERIA])
    return ws.cache["weights"]


def _criteria(ws: Workspace) -> dict:
    return {name: ws.get(fname) for name, fname in RATING_FILES.items()}


def _flooded(ws: Workspace) -> np.ndarray:
    return _bool_grid(ws.input("flooded")).cells


def scatter_pairs(fri: GeoGrid, fri_pixel: GeoGrid, flooded: np.ndarray, stride: int = SCATTER_STRIDE):
    """(row, col, constrained, pixel) for flooded cells on a stride lattice anchored at the lower-left cell."""
    rows, cols = fri.shape
    rr, cc = np.indices(fri.shape)
    on = ((rows - 1 - rr) % stride == 0) & (cc % stride == 0)
    sel = on & np.asarray(flooded, dtype=bool) & fri.valid & fri_pixel.valid
    out = []
    for r, c in zip(*np.nonzero(sel)):
        out.append((int(r), int(c), float(fri.cells[r, c]), float(fri_pixel.cells[r, c])))
    return out


def write_scatter_csv(pairs, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "fri_constrained", "fri_pixel"])
        for r, c, a, b in pairs:
            w.writerow([r, c, repr(a), repr(b)])


def _constraint(ws: Workspace, zones: Optional[ZoneLabels], method=None) -> ConstraintSpec:
    c = ws.cfg.constraint
    return ConstraintSpec(frozenset(c.criteria), method or c.method, zones if c.criteria else None)


def stage_fri(ws: Workspace) -> None:
    omega = _weights(ws)
    criteria = _criteria(ws)
    zones = ZoneLabels.from_grid(ws.get("zones"), ws.get("zones").cells)
    fri = flood_risk_index(criteria, omega, _constraint(ws, zones))
    fri_pixel = flood_risk_index(criteria, omega)
    ws.put("fri", fri)
    ws.put("fri_pixel", fri_pixel)
    write_scatter_csv(scatter_pairs(fri, fri_pixel, _flooded(ws)), ws.csv_path("scatter.csv"))


def _write_breaks(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["map", "class", "lower", "upper"])
        for name, breaks in rows:
            for k in range(1, len(breaks)):
                w.writerow([name, k, repr(breaks[k - 1]), repr(breaks[k])])


def stage_classify(ws: Workspace) -> None:
    risk = classify_risk(ws.get("fri"))
    risk_pixel = classify_risk(ws.get("fri_pixel"))
    ws.put("risk_class", risk.grid)
    ws.put("risk_class_pixel", risk_pixel.grid)
    _write_breaks(ws.csv_path("risk_breaks.csv"), [("fri", risk.breaks), ("fri_pixel", risk_pixel.breaks)])


def _masks(ws: Workspace) -> ValidationMasks:
    return ValidationMasks(
        _bool_grid(ws.input("flooded")),
        _bool_grid(ws.input("dry")),
        _bool_grid(ws.input("normal_water")),
    )


def _risk(grid: GeoGrid) -> RiskClassGrid:
    return RiskClassGrid(grid, ())


def _config_columns(constrained, statistic: str, method: str, threshold) -> dict:
    if not constrained:
        return {"model": "AHP", "constrained": "", "statistic": "", "zone_source": "pixel", "threshold_ha": ""}
    return {
        "model": "WZSAHP" if set(constrained) == set(CRITERIA) else "WZSAHP-RC",
        "constrained": "&".join(c for c in CRITERIA if c in constrained),
        "statistic": statistic,
        "zone_source": method,
        "threshold_ha": repr(float(threshold)),
    }


def stage_validate(ws: Workspace) -> None:
    masks = _masks(ws)
    d, c = ws.cfg.delineation, ws.cfg.constraint
    rows = report_rows(_config_columns((), "", "", None), validate(_risk(ws.get("risk_class_pixel")), masks))
    if c.criteria:
        cols = _config_columns(c.criteria, c.method, d.method, d.area_threshold_ha)
        rows += report_rows(cols, validate(_risk(ws.get("risk_class")), masks))
    write_report_csv(rows, ws.csv_path("validation.csv"))


STAGES: dict[str, Callable[[Workspace], None]] = {
    "condition": stage_condition,
    "flowdir": stage_flowdir,
    "accumulate": stage_accumulate,
    "streams": stage_streams,
    "delineate": stage_delineate,
    "rate": stage_rate,
    "weights": stage_weights,
    "fri": stage_fri,
    "classify": stage_classify,
    "validate": stage_validate,
}


def run_stage(name: str, ws: Workspace) -> None:
    try:
        STAGES[name](ws)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(cfg: PipelineConfig, output_dir=None) -> dict[str, Path]:
    """Run every stage; on failure remove what this run wrote and raise :class:`StageError`."""
    ws = Workspace(cfg, output_dir)
    try:
        for name in STAGES:
            log.info("stage %s", name)
            run_stage(name, ws)
    except StageError:
        ws.cleanup()
        raise
    return {p.name: p for p in ws.written}


# ---------------------------------------------------------------------------
# comparison matrix


SHARED_STAGES = ("condition", "flowdir", "accumulate", "streams", "rate", "weights")
METRICS = ("correct_pct", "fit_pct", "f1")


def select_candidates(rows: list[dict]) -> set:
    """Configurations matching or beating the AHP baseline on every metric in every validation set."""
    base = {r["validation_set"]: r for r in rows if r["model"] == "AHP" and not r.get("error")}
    by_cfg: dict = {}
    for r in rows:
        if r["model"] == "AHP":
            continue
        by_cfg.setdefault(_cfg_key(r), []).append(r)
    out = set()
    for key, group in by_cfg.items():
        if any(r.get("error") for r in group):
            continue
        sets = {r["validation_set"] for r in group}
        if sets != set(base):
            continue
        if all(float(r[m]) >= float(base[r["validation_set"]][m]) for r in group for m in METRICS):
            out.add(key)
    return out


def _cfg_key(r: dict) -> tuple:
    return (r["model"], r["constrained"], r["statistic"], r["zone_source"], str(r["threshold_ha"]))


def run_matrix(cfg: PipelineConfig, output_dir=None) -> list[dict]:
    """Score every (zone source, threshold, statistic) combination against the pixel AHP baseline."""
    ws = Workspace(cfg, output_dir)
    try:
        for name in SHARED_STAGES:
            run_stage(name, ws)
        masks = _masks(ws)
        omega = _weights(ws)
        criteria = _criteria(ws)
    except StageError:
        ws.cleanup()
        raise

    rows = []
    base = classify_risk(flood_risk_index(criteria, omega))
    rows += report_rows(_config_columns((), "", "", None), validate(base, masks))
    dem = ws.get("dem_conditioned")
    constrained = frozenset(cfg.constraint.criteria)
    m = cfg.matrix
    thresholds = {"d8": m.d8_thresholds_ha, "mfd": m.mfd_thresholds_ha}
    for method in m.methods:
        for thr in thresholds[method]:
            zones = None
            zone_error = None
            try:
                zones = delineate(dem, _delineation_config(ws, method, thr)).zones
            except Exception as exc:  # noqa: BLE001 - recorded per row
                zone_error = f"delineate: {exc}"
            for stat in m.statistics:
                cols = _config_columns(constrained, stat, method, thr)
                try:
                    if zone_error:
                        raise RuntimeError(zone_error)
                    spec = ConstraintSpec(constrained, stat, zones)
                    risk = classify_risk(flood_risk_index(criteria, omega, spec))
                    rows += report_rows(cols, validate(risk, masks))
                except Exception as exc:  # noqa: BLE001 - recorded per row
                    rows += [dict(cols, validation_set=s, error=str(exc)) for s in (1, 2)]
    cands = select_candidates(rows)
    for r in rows:
        r["candidate"] = r["model"] != "AHP" and _cfg_key(r) in cands
    write_report_csv(rows, ws.csv_path("matrix.csv"), MATRIX_COLUMNS)
    return rows

