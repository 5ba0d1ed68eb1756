import csv

import numpy as np
import pytest

from floodrisk.grid import GeoGrid
from floodrisk.routing import (
    FlowField,
    d8_flow_direction,
    extract_streams,
    fill_pits,
    flow_accumulation,
    mfd_flow_direction,
    receivers,
    strahler_order,
    write_links_csv,
)

from . import oracles
from .conftest import random_dem


def dem(a, cs=30.0):
    return GeoGrid(np.asarray(a, dtype=np.float64), cs)


def flow(codes, cs=30.0):
    return FlowField.from_grid(GeoGrid(np.asarray(codes, dtype=np.int64), cs), "single")


def test_east_plane_points_east():
    z = -np.tile(np.arange(6.0), (5, 1))
    codes = d8_flow_direction(dem(z)).grid.cells
    assert (codes[:, :-1] == 1).all()


def test_pit_has_no_direction():
    z = np.full((3, 3), 5.0)
    z[1, 1] = 1.0
    assert d8_flow_direction(dem(z)).grid.cells[1, 1] == 0
    assert mfd_flow_direction(dem(z)).grid.cells[1, 1] == 0


def test_mfd_examples():
    z = np.full((3, 3), 5.0)
    z[1, 1] = 9.0
    assert mfd_flow_direction(dem(z)).grid.cells[1, 1] == 255
    z = np.full((3, 3), 5.0)
    z[2, 0] = 1.0  # south-west neighbour only
    assert mfd_flow_direction(dem(z)).grid.cells[1, 1] == 8


def test_d8_tie_takes_lowest_code():
    z = np.array([[5.0, 5.0, 5.0], [5.0, 5.0, 4.0], [5.0, 4.0, 5.0]])
    assert d8_flow_direction(dem(z)).grid.cells[1, 1] == 1  # east and south tie


@pytest.mark.parametrize("integer", [False, True])
def test_directions_match_oracle(rng, integer):
    for _ in range(20):
        g = random_dem(rng, 16, 16, float(rng.uniform(1, 50)), integer=integer, nodata_frac=0.05)
        z = np.where(g.valid, g.cells, 0.0).tolist()
        v = g.valid.tolist()
        assert d8_flow_direction(g).codes.tolist() == oracles.d8(z, v, g.cellsize)
        assert mfd_flow_direction(g).codes.tolist() == oracles.mfd(z, v)


def test_mfd_contains_d8(rng):
    for _ in range(10):
        g = random_dem(rng, 20, 20, integer=True)
        d8 = d8_flow_direction(g).codes
        m = mfd_flow_direction(g).codes
        assert np.all((d8 & m) == d8)


def test_accumulation_chain_and_pit():
    f = d8_flow_direction(dem([[5.0, 4, 3, 2, 1]]))
    assert flow_accumulation(f).cells.tolist() == [[0, 1, 2, 3, 4]]
    f = d8_flow_direction(dem([[3.0, 2, 0, 2, 3]]))
    assert flow_accumulation(f).cells[0, 2] == 4


def test_accumulation_rejects_multi():
    with pytest.raises(ValueError):
        flow_accumulation(mfd_flow_direction(dem([[1.0, 0.0]])))


def test_accumulation_matches_path_oracle(rng):
    for _ in range(20):
        g = random_dem(rng, int(rng.integers(2, 33)), int(rng.integers(2, 33)), nodata_frac=0.03)
        f = d8_flow_direction(g)
        acc = flow_accumulation(f).cells
        ref = oracles.accumulation(f.codes.tolist(), g.valid.tolist())
        assert np.where(g.valid, acc, 0).tolist() == ref


def test_accumulation_conservation(rng):
    for _ in range(10):
        g = random_dem(rng, 25, 25, nodata_frac=0.05)
        f = d8_flow_direction(g)
        acc = flow_accumulation(f).cells.ravel()
        outlets = g.valid.ravel() & (receivers(f) < 0)
        assert int((acc[outlets] + 1).sum()) == int(g.valid.sum())


def test_fill_pits_drains_everything(rng):
    for _ in range(10):
        g = random_dem(rng, 30, 30, integer=True, nodata_frac=0.02)
        filled = fill_pits(g)
        assert np.all(filled.cells[g.valid] >= g.cells[g.valid])
        rec = receivers(d8_flow_direction(filled))
        acc = flow_accumulation(d8_flow_direction(filled)).cells.ravel()
        # every valid cell must reach an edge or nodata-adjacent outlet
        interior = np.ones_like(g.valid)
        interior[[0, -1], :] = False
        interior[:, [0, -1]] = False
        padded = np.pad(g.valid, 1, constant_values=False)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                interior &= padded[1 + dr:31 + dr, 1 + dc:31 + dc]
        sinks = g.valid.ravel() & (rec < 0)
        assert not (sinks & interior.ravel()).any()
        assert int((acc[sinks] + 1).sum()) == int(g.valid.sum())


def test_extract_streams_examples():
    acc = flow_accumulation(d8_flow_direction(dem([[5.0, 4, 3, 2, 1]])))
    assert extract_streams(acc, 1).cells.tolist() == [[False, True, True, True, True]]
    assert extract_streams(acc, 3).cells.tolist() == [[False, False, False, True, True]]
    assert not extract_streams(acc, 99).cells.any()


def _y_of_y():
    S, SE, SW, E = 4, 2, 8, 1
    codes = np.zeros((5, 7), dtype=np.int64)
    codes[0, 0] = S
    codes[1, 0] = SE
    codes[0, 2] = S
    codes[1, 2] = SW
    codes[2, 1] = SE
    codes[0, 4] = S
    codes[1, 4] = SE
    codes[0, 6] = S
    codes[1, 6] = SW
    codes[2, 5] = SW
    codes[3, 2] = E
    codes[3, 3] = E
    codes[3, 4] = S
    streams = codes != 0
    streams[4, 4] = True
    return codes, streams


def test_strahler_examples(tmp_path):
    codes, streams = _y_of_y()
    net = strahler_order(GeoGrid(streams, 30.0), flow(codes))
    o = net.orders.cells
    for cell in [(0, 0), (1, 0), (0, 2), (1, 2), (0, 4), (1, 4), (0, 6), (1, 6)]:
        assert o[cell] == 1
    for cell in [(2, 1), (3, 2), (3, 3), (2, 5)]:
        assert o[cell] == 2
    assert o[3, 4] == 3 and o[4, 4] == 3
    assert len(net.links) == 7
    ids = net.link_ids.cells
    assert (ids[streams] > 0).all() and (ids[~streams] <= 0).all()
    p = tmp_path / "links.csv"
    write_links_csv(net, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["link_id", "outlet_row", "outlet_col", "order"]
    assert ["3", "4", "4", "3"] in [r for r in rows[1:]] or any(r[1:] == ["4", "4", "3"] for r in rows[1:])


def test_strahler_single_stream_and_merge():
    codes = np.zeros((1, 5), dtype=np.int64)
    codes[0, :4] = 1
    net = strahler_order(GeoGrid(np.ones((1, 5), dtype=bool), 30.0), flow(codes))
    assert net.orders.cells.tolist() == [[1, 1, 1, 1, 1]]
    assert len(net.links) == 1


def test_strahler_nondecreasing_downstream(rng):
    for _ in range(10):
        g = fill_pits(random_dem(rng, 40, 40))
        f = d8_flow_direction(g)
        streams = extract_streams(flow_accumulation(f), 15)
        net = strahler_order(streams, f)
        o = net.orders.cells.ravel()
        rec = receivers(f)
        s = streams.cells.ravel()
        for i in np.flatnonzero(s):
            if rec[i] >= 0 and s[rec[i]]:
                assert o[rec[i]] >= o[i]
        assert ((o >= 1) == s).all()
