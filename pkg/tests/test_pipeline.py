import csv
import hashlib

import numpy as np
import pytest

from floodrisk.ahp import CRITERIA, flood_risk_index
from floodrisk.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main
from floodrisk.config import load_config
from floodrisk.grid import read_ascii_grid
from floodrisk.pipeline import METRICS, RATING_FILES, STAGES, StageError, run_matrix, run_pipeline
from floodrisk.validation import REPORT_COLUMNS


def tree_hash(directory):
    h = {}
    for p in sorted(directory.iterdir()):
        h[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    return h


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def baseline_run(valley_fixture, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    run_pipeline(load_config(valley_fixture), out)
    return out


def test_outputs_present(baseline_run):
    names = {p.name for p in baseline_run.iterdir()}
    for f in ("fri.asc", "risk_class.asc", "zones.asc", "weights.csv", "validation.csv", "scatter.csv", "zones.csv"):
        assert f in names


def test_repeat_run_is_byte_identical(valley_fixture, baseline_run, tmp_path):
    run_pipeline(load_config(valley_fixture), tmp_path)
    assert tree_hash(tmp_path) == tree_hash(baseline_run)


def test_stage_by_stage_cli_matches(valley_fixture, baseline_run, tmp_path):
    for name in STAGES:
        assert main([name, "--config", str(valley_fixture), "--stage-output", str(tmp_path)]) == EXIT_OK
    assert tree_hash(tmp_path) == tree_hash(baseline_run)


def test_scatter_below_diagonal(baseline_run):
    rows = read_csv(baseline_run / "scatter.csv")
    assert rows, "scatter sample is empty"
    assert all(float(r["fri_pixel"]) <= float(r["fri_constrained"]) for r in rows)
    for r in rows:
        assert int(r["col"]) % 20 == 0 and (127 - int(r["row"])) % 20 == 0


def test_unconstrained_equals_direct_ahp(valley_fixture, tmp_path):
    cfg = load_config(valley_fixture, ["constraint.criteria=[]"])
    run_pipeline(cfg, tmp_path)
    fri = read_ascii_grid(tmp_path / "fri.asc")
    weights = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "weights.csv")}
    assert weights["accepted"] == "true"
    omega = [float(weights[f"weight.{c}"]) for c in CRITERIA]
    grids = {c: read_ascii_grid(tmp_path / f"{RATING_FILES[c]}.asc") for c in CRITERIA}
    direct = flood_risk_index(grids, omega)
    assert np.array_equal(fri.cells, direct.cells)
    assert (tmp_path / "fri.asc").read_bytes() == (tmp_path / "fri_pixel.asc").read_bytes()
    models = {r["model"] for r in read_csv(tmp_path / "validation.csv")}
    assert models == {"AHP"}


def test_cli_exit_codes_and_cleanup(valley_fixture, tmp_path, capsys):
    assert main(["pipeline", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    assert main(["pipeline"]) == EXIT_CONFIG
    assert main(["nosuchstage", "--config", str(valley_fixture)]) == EXIT_CONFIG
    assert main(["pipeline", "--config", str(valley_fixture), "--set", "delineation.method=dinf"]) == EXIT_CONFIG
    empty = tmp_path / "empty"
    assert main(["fri", "--config", str(valley_fixture), "--stage-output", str(empty)]) == EXIT_STAGE
    assert "stage 'fri' failed" in capsys.readouterr().err
    assert not empty.exists() or not any(empty.iterdir())
    broken = tmp_path / "broken"
    code = main(["pipeline", "--config", str(valley_fixture), "--stage-output", str(broken),
                 "--set", "delineation.area_threshold_ha=1e7"])
    assert code == EXIT_STAGE
    assert "delineate" in capsys.readouterr().err
    assert not any(broken.iterdir())


def test_pipeline_error_names_stage(valley_fixture, tmp_path):
    cfg = load_config(valley_fixture, ["delineation.area_threshold_ha=1e7"])
    with pytest.raises(StageError) as info:
        run_pipeline(cfg, tmp_path)
    assert info.value.stage == "delineate"
    assert "no streams at threshold" in str(info.value)


@pytest.fixture(scope="module")
def matrix_run(valley_fixture, tmp_path_factory):
    out = tmp_path_factory.mktemp("matrix")
    run_matrix(load_config(valley_fixture), out)
    return read_csv(out / "matrix.csv")


def test_matrix_enumerates_threshold_ladder(matrix_run):
    for stat in ("maximum", "median", "majority"):
        d8 = [r for r in matrix_run if r["zone_source"] == "d8" and r["statistic"] == stat and r["validation_set"] == "1"]
        assert [float(r["threshold_ha"]) for r in d8] == [66.7, 200.0, 667.0, 2000.0, 3333.0, 6667.0]
    base = [r for r in matrix_run if r["model"] == "AHP"]
    assert [r["validation_set"] for r in base] == ["1", "2"]


def test_matrix_candidates_by_hand(matrix_run):
    base = {r["validation_set"]: r for r in matrix_run if r["model"] == "AHP"}
    groups = {}
    for r in matrix_run:
        if r["model"] != "AHP":
            groups.setdefault((r["statistic"], r["zone_source"], r["threshold_ha"]), []).append(r)
    for rows in groups.values():
        ok = all(
            not r["error"] and all(float(r[m]) >= float(base[r["validation_set"]][m]) for m in METRICS)
            for r in rows
        )
        assert {r["candidate"] for r in rows} == {"true" if ok else "false"}


def test_single_config_matrix_equals_pipeline(valley_fixture, baseline_run, tmp_path):
    cfg = load_config(valley_fixture, ['matrix.methods=["d8"]', 'matrix.statistics=["maximum"]', "matrix.d8_thresholds_ha=[66.7]"])
    run_matrix(cfg, tmp_path)
    rows = read_csv(tmp_path / "matrix.csv")
    report = read_csv(baseline_run / "validation.csv")
    assert [{k: r[k] for k in REPORT_COLUMNS} for r in rows] == report
