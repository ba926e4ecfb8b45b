import math

import numpy as np
import pytest

from ymflow import exterior as ext
from ymflow import flow as fl
from ymflow import lattice as lt
from ymflow import monitors as mon
from ymflow.flow import FlowState

# independent radial quadrature (scipy quad, relative tol 1e-13) for n=4,
# R=1/4, rho=1/2, |F|^2 = 1; frozen here so regressions in the oracle show up
ORACLE_N4 = 4.49170294e-4


def test_smoothstep_profile():
    r = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 2.0])
    v = mon.smoothstep_profile(r)
    assert v[0] == v[1] == v[2] == 1.0
    assert v[3] == pytest.approx(0.5)
    assert v[4] == v[5] == 0.0


def test_cutoff_validation():
    g = lt.PeriodicGrid((8,) * 4)
    with pytest.raises(ValueError):
        mon.CutoffSpec((0.5,) * 4, 0.0)
    with pytest.raises(ValueError):
        mon.CutoffSpec((0.5,) * 4, 0.6).validate(g)
    with pytest.raises(ValueError):
        mon.CutoffSpec((0.5,) * 3, 0.4).validate(g)


def test_periodic_distance_nearest_image():
    g = lt.PeriodicGrid((8, 8))
    d = mon.periodic_distance(g, (0.0, 0.0))
    assert d[7, 0] == pytest.approx(1 / 8)
    assert d.max() == pytest.approx(math.sqrt(0.5))


def test_weighted_energy_zero_field():
    g = lt.PeriodicGrid((6,) * 4)
    F = np.zeros((3, 6) + g.shape)
    assert mon.weighted_energy(g, F, 0.2, (0.5,) * 4) == 0.0


def test_radial_oracle_value():
    assert mon.weighted_energy_radial_oracle(4, 0.25, 0.5) == pytest.approx(ORACLE_N4, rel=1e-8)


@pytest.mark.parametrize("N", [8, 16])
def test_weighted_energy_matches_quadrature_oracle(N):
    g = lt.PeriodicGrid((N,) * 4)
    cut = mon.CutoffSpec((0.5,) * 4, 0.5)
    val = mon.weighted_energy(g, R=0.25, x=(0.5,) * 4, cutoff=cut, density=np.ones(g.shape))
    assert val == pytest.approx(ORACLE_N4, rel=1e-3)


def test_fft_field_matches_direct_sum(rng):
    g = lt.PeriodicGrid((8,) * 4)
    dens = rng.random(g.shape)
    field = mon.weighted_energy_field(g, dens, 0.15, 0.5)
    for idx in [(0, 0, 0, 0), (3, 5, 1, 7), (7, 7, 7, 7)]:
        x = tuple(i * h for i, h in zip(idx, g.h))
        direct = mon.weighted_energy(g, R=0.15, x=x, cutoff=mon.CutoffSpec(x, 0.5), density=dens)
        assert field[idx] == pytest.approx(direct, rel=1e-12)


def test_weighted_energy_monotone_in_density(rng):
    g = lt.PeriodicGrid((6,) * 4)
    low = rng.random(g.shape)
    high = low + rng.random(g.shape)
    a = mon.weighted_energy(g, R=0.2, x=(0.3,) * 4, density=low)
    b = mon.weighted_energy(g, R=0.2, x=(0.3,) * 4, density=high)
    assert b >= a


def test_cutoff_is_invisible_for_concentrated_data():
    g = lt.PeriodicGrid((16,) * 4)
    x = (0.5,) * 4
    d = mon.periodic_distance(g, x)
    dens = np.where(d < 0.2, 1.0 + np.cos(d), 0.0)  # support in B_{rho/2}
    cut = mon.CutoffSpec(x, 0.45)
    a = mon.weighted_energy(g, R=0.1, x=x, density=dens)
    b = mon.weighted_energy(g, R=0.1, x=x, cutoff=cut, density=dens)
    assert abs(a - b) <= 1e-12


def test_weighted_energy_parabolic_scaling():
    # scale the torus by lam: |F|^2 picks up lam^-4 and R becomes lam R
    lam, N = 2.0, 16
    g1 = lt.PeriodicGrid((N,) * 4)
    g2 = lt.PeriodicGrid((N,) * 4, (lam,) * 4)
    d = mon.periodic_distance(g1, (0.5,) * 4)
    dens = np.exp(-(d / 0.1) ** 2)
    a = mon.weighted_energy(g1, R=0.1, x=(0.5,) * 4, cutoff=mon.CutoffSpec((0.5,) * 4, 0.5), density=dens)
    b = mon.weighted_energy(g2, R=0.1 * lam, x=(0.5 * lam,) * 4, cutoff=mon.CutoffSpec((0.5 * lam,) * 4, 0.5 * lam),
                            density=dens / lam**4)
    assert b == pytest.approx(a, rel=1e-2)


def test_probe_column_and_record_row():
    p = mon.Probe((0.5, 0.25), 0.125)
    assert p.column == "phi_R0.125_x0.5_0.25"
    rec = mon.MonitorRecord(0.0, 0.0, 1.0, (0.5, 0.5), 0.1, 0.2, 0.0, 0.0, {p.column: 3.0})
    hdr = mon.MonitorRecord.header(2, [p])
    assert hdr == ["t", "dt", "E", "E_alpha_0", "E_alpha_1", "K", "L", "int_K_dt",
                   "energy_identity_residual", p.column]
    assert len(rec.row([p])) == len(hdr)


def _history(st, steps, keep=True):
    hist = [(st.t, lt.pointwise_norm_sq(st.F))]
    reports = []
    for st, rep in fl.run(st, steps):
        reports.append(rep)
        hist.append((st.t, lt.pointwise_norm_sq(st.F)))
    return st, hist, reports


def test_hamilton_check_zero_and_abelian_runs():
    assert mon.hamilton_check([0, 1, 2], [0, 0, 0], [0, 0, 0], 3.0)["worst"] == 0.0
    g = lt.PeriodicGrid((4, 12, 4, 4))
    st = FlowState(0.0, lt.abelian_mode_field(g, 0.4))
    st, _, reports = _history(st, 30)
    res = mon.hamilton_check_reports(reports, 2 * st.t)
    assert res["worst_relative"] <= 1e-6
    with pytest.raises(ValueError):
        mon.hamilton_check([0, 1], [1, 1], [0, 0], 1.0)


def test_hamilton_check_detects_energy_gain():
    res = mon.hamilton_check([0.0, 0.1], [1.0, 2.0], [0.0, 0.0], 1.0)
    assert res["worst_relative"] > 0.5


def test_monotonicity_probe_validation():
    with pytest.raises(ValueError):
        mon.MonotonicityProbe((0,), 0.1, 0.2, 0.0, 1.0)
    with pytest.raises(ValueError):
        mon.MonotonicityProbe((0,), 0.5, 0.1, 0.0, 0.01)  # gamma > 1
    p = mon.MonotonicityProbe((0,), 0.2, 0.1, 0.0, 0.03)
    assert p.gamma == pytest.approx(1.0)
    assert float(p.radius(0.03)) == pytest.approx(0.1)


def test_monotonicity_trace_zero_and_gamma_one():
    g = lt.PeriodicGrid((8,) * 4)
    zero = [(t, np.zeros(g.shape)) for t in (0.0, 0.01, 0.02)]
    probe = mon.MonotonicityProbe((0.5,) * 4, 0.2, math.sqrt(0.02), 0.0, 0.02)
    tr = mon.monotonicity_trace(g, zero, probe)
    assert not tr["phi"].any() and tr["increment"] == 0.0
    st = FlowState(0.0, lt.kahler_slice_field(g, 0, amplitude=0.05),
                   ext.CalibrationSpec("Kahler", 2), ext.geometry_split(ext.CalibrationSpec("Kahler", 2)))
    st, hist, _ = _history(st, 40)
    probe = mon.MonotonicityProbe((0.5,) * 4, 0.125, math.sqrt(0.125**2 - st.t), 0.0, st.t)
    tr = mon.monotonicity_trace(g, hist, probe, mon.CutoffSpec((0.5,) * 4, 0.5))
    assert tr["gamma"] == pytest.approx(1.0)
    assert tr["relative_increment"] <= 0.02
    with pytest.raises(ValueError):
        mon.monotonicity_trace(g, hist[:1], probe)


def test_blowup_report_cases():
    g = lt.PeriodicGrid((6,) * 4)
    split = ext.geometry_split(ext.CalibrationSpec("FourManifold"))
    m = mon.RunMonitor(g, split)
    st = FlowState(0.0, lt.GaugeField.zero(g))
    m.observe(st)
    for st, rep in fl.run(st, 3, dt=1e-3):
        m.observe(st, rep.dt)
    rep0 = mon.blowup_report(m.records)
    assert rep0["int_K_dt"] == 0.0 and rep0["log_L_growth"] == 0.0
    m = mon.RunMonitor(g, split)
    st = FlowState(0.0, lt.abelian_mode_field(g, 0.5))
    m.observe(st)
    for st, rep in fl.run(st, 5):
        m.observe(st, rep.dt)
    assert mon.blowup_report(m.records)["log_L_growth"] < 0
    ab = mon.blowup_report(m.records, aborted=True, reason="non-finite field values")
    assert ab["aborted"] and ab["last_finite"]["t"] == m.records[-1].t


def test_run_monitor_energy_identity_column():
    g = lt.PeriodicGrid((8,) * 4)
    split = ext.geometry_split(ext.CalibrationSpec("FourManifold"))
    m = mon.RunMonitor(g, split, probes=[mon.Probe((0.5,) * 4, 0.125)])
    st = FlowState(0.0, lt.random_gauge_field(g, 2, 1.0, 0.4))
    m.observe(st)
    for st, rep in fl.run(st, 20):
        m.observe(st, rep.dt)
    assert m.records[-1].energy_identity_residual < 1e-3
    assert len(m.header()) == len(m.rows()[0])


def test_singular_candidates():
    g = lt.PeriodicGrid((16,) * 4)
    assert mon.singular_candidates(g, [(0.0, np.zeros(g.shape))], 0.1) == []
    smooth = lt.curvature(g, lt.liealg.su2(), lt.random_gauge_field(g, 1, 1.0, 0.05).A)
    assert mon.singular_candidates(g, [(0.0, lt.pointwise_norm_sq(smooth))], 0.1) == []
    d = mon.periodic_distance(g, (0.25, 0.5, 0.5, 0.75))
    bump = 1.0e5 * np.exp(-(d / 0.06) ** 2)
    cands = mon.singular_candidates(g, [(0.0, bump)], 0.1)
    assert cands
    pts = np.array(cands) * g.h
    centre = np.array([0.25, 0.5, 0.5, 0.75])
    dist = np.sqrt(np.sum(np.minimum(abs(pts - centre), 1 - abs(pts - centre)) ** 2, axis=1))
    assert dist.max() <= 0.25


@pytest.mark.parametrize("label", ["FourManifold", "Kahler(2)", "Kahler(3)", "QuatKahler(2)", "G2", "Spin7"])
def test_product_instanton_residual(label):
    psi = ext.build_calibration(ext.CalibrationSpec.parse(label))
    assert mon.product_instanton_residual(psi, 20, 0) <= 1e-12


def test_instanton_residual_field_detects_non_instantons(rng):
    psi = ext.g2_phi()
    F = rng.standard_normal((3, 21, 2, 2))
    assert mon.instanton_residual_field(F, psi).min() > 0.1


def test_reduction_report_shapes():
    rep = mon.reduction_report("su4", 0, 8)
    assert rep["case"] == "su4" and rep["pi7_residual"] <= 1e-10
    assert rep["equivalence"]["agree"] == rep["equivalence"]["samples"]
