import struct

import numpy as np
import pytest

from ymflow import lattice as lt
from ymflow import snapshot as snap


def test_round_trip_gauge_field(tmp_path):
    g = lt.PeriodicGrid((4, 5, 4, 6), (1.0, 2.0, 1.0, 0.5))
    f = lt.random_gauge_field(g, 3, 1.0, 0.4, 2, 0.3)
    p = tmp_path / "f.hflw"
    snap.write_field(p, f, t=0.125)
    s = snap.read_snapshot(p, {"A": f.A.shape[:2], "higgs": f.higgs.shape[:2]})
    assert s.shape == g.shape and s.periods == (1.0, 2.0, 1.0, 0.5)
    assert s.lie_dim == 3 and s.t == 0.125 and s.n == 4
    assert np.array_equal(s.fields["A"], f.A)
    assert np.array_equal(s.fields["higgs"], f.higgs)


def test_component_order_is_site_major(tmp_path):
    arr = np.arange(2 * 4 * 4, dtype=float).reshape(2, 4, 4)
    p = tmp_path / "s.hflw"
    snap.write_snapshot(p, (4, 4), (1, 1), 3, {"u": arr})
    raw = p.read_bytes()
    data = np.frombuffer(raw[-8 * arr.size:], "<f8")
    # first site, both components, then the next site
    assert list(data[:4]) == [arr[0, 0, 0], arr[1, 0, 0], arr[0, 0, 1], arr[1, 0, 1]]


def test_header_layout(tmp_path):
    p = tmp_path / "h.hflw"
    snap.write_snapshot(p, (4, 4), (1.0, 1.0), 8, {"A": np.zeros((1, 4, 4))}, t=2.0)
    raw = p.read_bytes()
    assert raw[:4] == b"HFLW"
    assert struct.unpack_from("<II", raw, 4) == (1, 2)


def test_rejects_bad_magic_and_trailing_bytes(tmp_path):
    p = tmp_path / "x.hflw"
    snap.write_snapshot(p, (4, 4), (1, 1), 3, {"A": np.ones((2, 4, 4))})
    good = p.read_bytes()
    p.write_bytes(b"XXXX" + good[4:])
    with pytest.raises(ValueError):
        snap.read_snapshot(p)
    p.write_bytes(good + b"\0")
    with pytest.raises(ValueError):
        snap.read_snapshot(p)


def test_rejects_shape_mismatch(tmp_path):
    with pytest.raises(ValueError):
        snap.write_snapshot(tmp_path / "y", (4, 4), (1, 1), 3, {"A": np.ones((2, 4, 5))})
