import numpy as np
import pytest

from floodrisk.ahp import RiskClassGrid
from floodrisk.grid import GeoGrid
from floodrisk.validation import (
    REPORT_COLUMNS,
    ValidationMasks,
    confusion_f1,
    correct_fit,
    positive_mask,
    read_report_csv,
    report_rows,
    validate,
    write_report_csv,
)


def classes(a):
    return RiskClassGrid(GeoGrid(np.asarray(a, dtype=np.int64), 30.0, nodata=0), ())


def bmask(a):
    return GeoGrid(np.asarray(a, dtype=bool), 30.0, nodata=0)


@pytest.mark.parametrize("cls,set1,set2", [(5, True, True), (4, True, True), (3, True, False), (2, False, False), (1, False, False)])
def test_positive_mask(cls, set1, set2):
    rc = classes(np.full((2, 3), cls))
    assert positive_mask(rc, 1).cells.all() == set1 and not (positive_mask(rc, 1).cells.any() ^ set1)
    assert positive_mask(rc, 2).cells.all() == set2 and not (positive_mask(rc, 2).cells.any() ^ set2)
    with pytest.raises(ValueError):
        positive_mask(rc, 3)


def test_correct_fit_identities():
    a = np.zeros((4, 4), bool)
    a[:2] = True
    assert correct_fit(a, a) == (100.0, 100.0)
    assert correct_fit(~a, a) == (0.0, 0.0)
    truth = np.zeros((4, 4), bool)
    truth[0] = True
    assert correct_fit(a, truth) == (100.0, 50.0)
    with pytest.raises(ValueError, match="no ground-truth flood cells"):
        correct_fit(a, np.zeros((4, 4), bool))


def test_fit_never_exceeds_correct(rng):
    for _ in range(100):
        shape = (int(rng.integers(1, 20)), int(rng.integers(1, 20)))
        pred = rng.random(shape) < rng.random()
        truth = rng.random(shape) < rng.random()
        truth.flat[0] = True
        c, f = correct_fit(pred, truth)
        assert 0 <= f <= c <= 100


def _counts_scene(tp, fp, fn, tn, water=0):
    n = tp + fp + fn + tn + water
    flooded = np.zeros(n, bool)
    dry = np.zeros(n, bool)
    normal = np.zeros(n, bool)
    pred = np.zeros(n, bool)
    flooded[:tp + fn] = True
    pred[:tp] = True
    dry[tp + fn:tp + fn + fp + tn] = True
    pred[tp + fn:tp + fn + fp] = True
    normal[n - water:] = True
    pred[n - water:] = True  # predictions on normal water are never scored
    masks = ValidationMasks(bmask(flooded[None]), bmask(dry[None]), bmask(normal[None]))
    return pred[None], masks


def test_confusion_example():
    pred, masks = _counts_scene(30, 10, 20, 40, water=7)
    row = confusion_f1(pred, masks)
    assert (row.tp, row.fp, row.fn, row.tn) == (30, 10, 20, 40)
    assert row.precision == pytest.approx(0.75)
    assert row.recall == pytest.approx(0.6)
    assert row.f1 == pytest.approx(2 / 3, abs=1e-9)
    assert row.correct_pct == pytest.approx(row.recall * 100)


def test_perfect_prediction():
    pred, masks = _counts_scene(12, 0, 0, 9)
    row = confusion_f1(pred, masks)
    assert (row.precision, row.recall, row.f1) == (1.0, 1.0, 1.0)
    assert (row.correct_pct, row.fit_pct) == (100.0, 100.0)


def test_normal_water_only_is_undefined():
    z = np.zeros((1, 5), bool)
    masks = ValidationMasks(bmask(z), bmask(z), bmask(~z))
    row = confusion_f1(np.ones((1, 5), bool), masks)
    assert (row.tp, row.fp, row.fn, row.tn) == (0, 0, 0, 0)
    assert not row.precision_defined and not row.recall_defined
    assert row.precision == row.recall == row.f1 == 0.0


def test_recall_equals_correct(rng):
    for _ in range(30):
        lab = rng.integers(0, 3, (10, 10))
        lab.flat[0] = 0
        masks = ValidationMasks(bmask(lab == 0), bmask(lab == 1), bmask(lab == 2))
        row = confusion_f1(rng.random((10, 10)) < 0.5, masks)
        assert row.correct_pct == pytest.approx(row.recall * 100)
        assert row.fit_pct <= row.correct_pct


def test_masks_must_be_disjoint():
    m = np.ones((2, 2), bool)
    with pytest.raises(ValueError, match="disjoint"):
        ValidationMasks(bmask(m), bmask(m), bmask(~m))


def test_validate_and_report(tmp_path):
    rc = classes([[5, 4, 3, 1]])
    masks = ValidationMasks(bmask([[1, 1, 1, 0]]), bmask([[0, 0, 0, 1]]), bmask([[0, 0, 0, 0]]))
    res = validate(rc, masks)
    assert res[1].correct_pct == 100.0
    assert res[2].correct_pct == pytest.approx(200 / 3)
    rows = report_rows({"model": "AHP", "constrained": "", "statistic": "", "zone_source": "", "threshold_ha": ""}, res)
    p = tmp_path / "report.csv"
    write_report_csv(rows, p)
    assert p.read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
    back = read_report_csv(p)
    assert [r["validation_set"] for r in back] == ["1", "2"]
    assert back[0]["precision_defined"] == "true"
    assert float(back[1]["correct_pct"]) == res[2].correct_pct
