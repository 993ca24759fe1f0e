import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spfc import Grid, ModelParams, cold_start, diagnose, run
from spfc.io import TRACE_COLUMNS, SnapshotFormatError, TraceWriter, read_snapshot, read_trace, write_snapshot


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([2, 3]), n=st.sampled_from([4, 5, 8]))
def test_snapshot_round_trip_is_bit_exact(tmp_path_factory, seed, dim, n):
    g = Grid(dim, n, 100.0 / 3)
    values = np.random.default_rng(seed).standard_normal(g.shape) * 10.0 ** np.random.default_rng(seed).integers(-300, 300)
    path = tmp_path_factory.mktemp("snap") / "f.spfc"
    write_snapshot(path, g, values, time=0.1 + 0.2)
    snap = read_snapshot(path)
    assert snap.grid == g and snap.time == 0.1 + 0.2
    assert snap.values.tobytes() == values.astype("<f8").tobytes()


def test_snapshot_layout(tmp_path):
    g = Grid(2, 4, 1.0)
    values = np.arange(16, dtype=float).reshape(4, 4)
    path = write_snapshot(tmp_path / "s.spfc", g, values, 2.5)
    raw = path.read_bytes()
    header, payload = raw.split(b"\n", 1)
    assert header == b"SPFC1 2 4 1.0 2.5"
    # row-major: f[0, 1] (x=0, y=h) is the second value
    assert np.frombuffer(payload, "<f8")[1] == values[0, 1]


def test_snapshot_corruption(tmp_path):
    g = Grid(2, 4)
    path = write_snapshot(tmp_path / "s.spfc", g, np.zeros(g.shape), 0.0)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)
    bad = tmp_path / "b.spfc"
    bad.write_bytes(b"XPFC1 2 4 1.0 0.0\n" + bytes(128))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad)


def test_trace_round_trip(tmp_path):
    p = ModelParams(Grid(2, 8, 2 * math.pi), 0.5)
    s = cold_start(0.1 * np.random.default_rng(0).standard_normal(p.grid.shape), 0.1, p)
    _, diags = run(s, [(0.5, 0.1)])
    path = tmp_path / "trace.csv"
    with TraceWriter(path) as w:
        w.write(diagnose(s))
        for d in diags:
            w.write(d)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(TRACE_COLUMNS)
    tr = read_trace(path)
    assert list(tr["step"]) == [0, 1, 2, 3, 4, 5]
    assert tr["e_modified"][3] == diags[2].e_modified
    assert np.isnan(tr["lhs_coefficient"][0])


def test_trace_rejects_out_of_order(tmp_path):
    p = ModelParams(Grid(2, 8), 0.5)
    d = diagnose(cold_start(np.zeros(p.grid.shape), 0.1, p))
    with TraceWriter(tmp_path / "t.csv") as w:
        w.write(d)
        with pytest.raises(ValueError):
            w.write(d)
