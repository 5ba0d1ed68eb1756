"""Accuracy of risk maps against flooded / dry / normal-water ground truth."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .ahp import RiskClassGrid
from .grid import GeoGrid

POSITIVE_CLASSES = {1: (3, 4, 5), 2: (4, 5)}


def _bool(mask) -> np.ndarray:
    if isinstance(mask, GeoGrid):
        if mask.cells.dtype == bool:
            return mask.cells
        return (mask.cells != 0) & mask.valid
    return np.asarray(mask, dtype=bool)


@dataclass(frozen=True)
class ValidationMasks:
    flooded: GeoGrid
    dry: GeoGrid
    normal_water: GeoGrid

    def __post_init__(self):
        self.flooded.check_geometry(self.dry, "dry mask")
        self.flooded.check_geometry(self.normal_water, "normal water mask")
        f, d, w = _bool(self.flooded), _bool(self.dry), _bool(self.normal_water)
        if (f & d).any() or (f & w).any() or (d & w).any():
            raise ValueError("validation masks must be disjoint")


@dataclass(frozen=True)
class ConfusionRow:
    tp: int
    fp: int
    fn: int
    tn: int
    correct_pct: float
    fit_pct: float
    precision: float
    recall: float
    f1: float
    precision_defined: bool
    recall_defined: bool


def positive_mask(risk, validation_set: int) -> GeoGrid:
    """Cells counted as predicted flood under validation set 1 or 2."""
    grid = risk.grid if isinstance(risk, RiskClassGrid) else risk
    if validation_set not in POSITIVE_CLASSES:
        raise ValueError("validation_set must be 1 or 2")
    pos = np.isin(grid.cells, POSITIVE_CLASSES[validation_set]) & grid.valid
    return grid.like(pos, nodata=0)


def correct_fit(fa_fri, fa_water, excluded=None) -> tuple[float, float]:
    """Correct ratio and fit ratio in percent."""
    pred, truth = _bool(fa_fri), _bool(fa_water)
    if pred.shape != truth.shape:
        raise ValueError("mask shapes differ")
    if excluded is not None:
        keep = ~_bool(excluded)
        pred, truth = pred & keep, truth & keep
    n_truth = int(truth.sum())
    if n_truth == 0:
        raise ValueError("no ground-truth flood cells")
    inter = int((pred & truth).sum())
    union = int((pred | truth).sum())
    return inter / n_truth * 100.0, inter / union * 100.0


def confusion_f1(fa_fri, masks: ValidationMasks) -> ConfusionRow:
    """Confusion counts over flooded and dry cells; normal water is not scored."""
    pred = _bool(fa_fri)
    flooded, dry = _bool(masks.flooded), _bool(masks.dry)
    tp = int((flooded & pred).sum())
    fn = int((flooded & ~pred).sum())
    fp = int((dry & pred).sum())
    tn = int((dry & ~pred).sum())
    p_def, r_def = tp + fp > 0, tp + fn > 0
    p = tp / (tp + fp) if p_def else 0.0
    r = tp / (tp + fn) if r_def else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    if r_def:
        correct, fit = correct_fit(pred, flooded, excluded=~(flooded | dry))
    else:
        correct, fit = 0.0, 0.0
    return ConfusionRow(tp, fp, fn, tn, correct, fit, p, r, f1, p_def, r_def)


def validate(risk: RiskClassGrid, masks: ValidationMasks, sets=(1, 2)) -> dict[int, ConfusionRow]:
    risk.grid.check_geometry(masks.flooded, "validation masks")
    return {s: confusion_f1(positive_mask(risk, s), masks) for s in sets}


REPORT_COLUMNS = (
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
)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def report_rows(config: dict, results: dict[int, ConfusionRow]) -> list[dict]:
    rows = []
    for s, row in sorted(results.items()):
        rec = dict(config)
        rec["validation_set"] = s
        rec.update(asdict(row))
        rows.append(rec)
    return rows


def write_report_csv(rows, path, columns=REPORT_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in rows:
            w.writerow([_cell(rec.get(c)) for c in columns])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

