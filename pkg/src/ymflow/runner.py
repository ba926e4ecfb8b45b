"""Scenario execution behind ``ymflow run`` and ``ymflow reduce-check``."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import deque

import numpy as np

from . import exterior as ext
from . import flow as fl
from . import lattice as lt
from . import liealg
from . import monitors as mon
from . import reductions as red
from . import snapshot
from .config import RunConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IDENTITY = 3
EXIT_BLOWUP = 4

MAX_PRINCIPLE_TOL = 1e-10


# --------------------------------------------------------------------------
# initial data


def bump_field(grid, amplitude: float, width: float, center=None, alg=None) -> lt.GaugeField:
    """Rotational Gaussian bump: curvature concentrated near ``center``.

    A = a e^{-r^2/w^2} (-(x2-c2) dx1 + (x1-c1) dx2) / w (x) T1, plus the same
    in the (x3, x4) plane with T2 so the brackets do not vanish.
    """
    alg = alg or liealg.su2()
    n = grid.n
    c = np.asarray(center if center is not None else 0.5 * np.asarray(grid.periods), dtype=float)

    def A_fn(pos):
        delta = pos - c.reshape((-1,) + (1,) * (pos.ndim - 1))
        p = np.asarray(grid.periods).reshape((-1,) + (1,) * (pos.ndim - 1))
        delta = (delta + 0.5 * p) % p - 0.5 * p
        g = amplitude * np.exp(-np.sum(delta**2, axis=0) / width**2) / width
        out = np.zeros((alg.dim, n) + pos.shape[1:])
        for lie, (i, j) in enumerate(((0, 1), (2, 3))[: n // 2][:2]):
            out[lie, i] = -g * delta[j]
            out[lie, j] = g * delta[i]
        return out

    return lt.GaugeField.from_functions(grid, A_fn, None, alg)


def commuting_field(grid, n_higgs: int, seed: int, amplitude: float, alg=None) -> lt.GaugeField:
    """A = 0 and constant Higgs fields along a single Lie direction."""
    alg = alg or liealg.su2()
    f = lt.GaugeField.zero(grid, n_higgs, alg)
    if not n_higgs:
        return f
    vals = amplitude * np.random.default_rng(seed).uniform(-1.0, 1.0, n_higgs)
    H = np.zeros_like(f.higgs)
    H[:, 0] = vals.reshape((-1,) + (1,) * grid.n)
    return f.with_fields(f.A, H)


def initial_field(cfg: RunConfig, grid) -> lt.GaugeField:
    nh = fl.FLOW_KINDS[cfg.flow][0]
    alg = liealg.su2()
    if cfg.ansatz == "zero":
        return lt.GaugeField.zero(grid, nh, alg)
    if cfg.ansatz in ("random", "rank1"):
        structure = "rank1" if cfg.ansatz == "rank1" else "generic"
        return lt.random_gauge_field(grid, cfg.seed, cfg.k_max, cfg.amplitude, nh, cfg.higgs_amplitude, alg, structure)
    if cfg.ansatz == "commuting":
        return commuting_field(grid, nh, cfg.seed, cfg.amplitude, alg)
    if cfg.ansatz == "kahler_slice":
        f = lt.kahler_slice_field(grid, cfg.seed, cfg.k_max, cfg.amplitude, alg)
    elif cfg.ansatz == "abelian_mode":
        f = lt.abelian_mode_field(grid, cfg.amplitude, alg=alg)
    else:
        f = bump_field(grid, cfg.amplitude, cfg.width, cfg.center, alg)
    if nh:
        f = f.with_fields(f.A, np.zeros((nh, alg.dim) + tuple(grid.shape)))
    return f


# --------------------------------------------------------------------------
# run


def _fmt(v) -> str:
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


class _Extras:
    """Scenario-specific CSV columns beyond the MonitorRecord ones."""

    def __init__(self, cfg: RunConfig, grid, split):
        self.grid = grid
        self.kind = cfg.flow
        self.Pw = None
        self.perp = None
        if cfg.geometry is not None and cfg.spec.family == "Kahler":
            w = ext.kahler_omega(cfg.spec.k).coeffs
            self.Pw = np.outer(w, w) / (w @ w)
        if split is not None and split.perp:
            self.perp = split.perp_projector
        self.nh = fl.FLOW_KINDS[cfg.flow][0]
        self.names = []
        if self.Pw is not None:
            self.names.append("sup_F_omega")
        if self.perp is not None:
            self.names.append("norm_F_perp")
        self.names += [f"sup_higgs_{i}" for i in range(self.nh)]
        self._red_names = None

    def values(self, state) -> dict:
        out = {}
        F = state.F
        if self.Pw is not None:
            out["sup_F_omega"] = math.sqrt(self.grid.sup(lt.pointwise_norm_sq(liealg.apply_projector(self.Pw, F))))
        if self.perp is not None:
            out["norm_F_perp"] = math.sqrt(self.grid.integrate(lt.pointwise_norm_sq(liealg.apply_projector(self.perp, F))))
        if self.nh:
            for i, v in enumerate(red.higgs_sup(self.grid, state.field.higgs)):
                out[f"sup_higgs_{i}"] = v
            q = red.field_quantities(self.kind, self.grid, state.alg, state.field.A, state.field.higgs)
            for k, v in q.items():
                out[f"q_{k}"] = v
            if self._red_names is None:
                self._red_names = [f"q_{k}" for k in q]
                self.names += self._red_names
        return out


def _worst_increment(series) -> float:
    s = np.asarray(series, dtype=float)
    return float(np.max(np.diff(s))) if len(s) > 1 else 0.0


def run_config(cfg: RunConfig, out_dir: str, log=None) -> tuple[int, dict]:
    """Execute a configuration; writes CSV, JSON report and snapshot into ``out_dir``."""
    log = log or (lambda msg: None)
    os.makedirs(out_dir, exist_ok=True)
    grid = lt.PeriodicGrid(cfg.shape, cfg.periods)
    split = ext.geometry_split(cfg.spec) if cfg.geometry is not None else None
    field0 = initial_field(cfg, grid)
    state = fl.FlowState(0.0, field0, cfg.spec, split, cfg.flow, cfg.method, cfg.c_cfl, cfg.beta)
    probes = [mon.Probe(tuple(p["x"]), p["R"]) for p in cfg.probes]
    cutoff = None if cfg.cutoff is None else mon.CutoffSpec(tuple(cfg.cutoff["center"]), cfg.cutoff["radius"])
    monitor = mon.RunMonitor(grid, split, cfg.beta, probes, cutoff)
    extras = _Extras(cfg, grid, split)

    keep_all = cfg.monotonicity is not None
    tail = cfg.singular_R**2
    history = [] if keep_all else deque()
    K_hist = []
    extra_rows = []
    reports = []

    def record(st, dt, step):
        rec = monitor.observe(st, dt)
        ex = extras.values(st)
        extra_rows.append((step, ex))
        dens = lt.pointwise_norm_sq(st.F)
        history.append((st.t, dens))
        K_hist.append(rec.K)
        if not keep_all:
            while len(history) > 2 and history[1][0] <= st.t - tail - 1e-15:
                history.popleft()
                K_hist.pop(0)
        return rec

    record(state, 0.0, 0)
    aborted, reason = False, None
    step = 0
    try:
        while True:
            if cfg.steps is not None and step >= cfg.steps:
                break
            if cfg.t_end is not None and state.t >= cfg.t_end * (1 - 1e-12):
                break
            for _ in range(30):
                dt = cfg.dt * state.dt_scale if cfg.dt else fl.auto_dt(state)
                if cfg.t_end is not None:
                    dt = min(dt, cfg.t_end - state.t)
                new, rep = fl.ym_step(state, dt)
                if not rep.rejected:
                    break
                state = new
                log(f"step {step + 1}: rejected, halving dt")
            else:
                raise fl.BlowupError("step rejected repeatedly", state)
            state = new
            reports.append(rep)
            step += 1
            record(state, rep.dt, step)
    except fl.BlowupError as exc:
        aborted, reason = True, str(exc)
        log(f"aborted: {reason}")

    # csv
    names = list(extras.names)
    header = monitor.header() + names
    rows = []
    for rec, (stp, ex) in zip(monitor.records, extra_rows):
        if stp % cfg.every == 0 or stp == extra_rows[-1][0]:
            rows.append(rec.row(monitor.probes) + [_fmt(ex.get(k, float("nan"))) for k in names])
    write_csv(os.path.join(out_dir, cfg.csv), header, rows)

    # report
    t_final = state.t
    T = cfg.hamilton_T if cfg.hamilton_T is not None else 2.0 * max(t_final, 1e-300)
    rep = dict(name=cfg.name, config=cfg.to_dict(), steps=step, t_final=t_final)
    rep["blowup"] = mon.blowup_report(monitor.records, aborted, reason,
                                      split.kappa_total(cfg.beta) if split is not None else 1.0)
    rep["energy_identity"] = fl.energy_identity(reports)
    rep["hamilton"] = mon.hamilton_check_reports(reports, T) if T > t_final else None
    rep["energy_monotone"] = all(r.E_after <= r.E_before * (1 + 1e-12) for r in reports)
    if "sup_F_omega" in names:
        rep["kahler_max_principle_worst_increment"] = _worst_increment([e["sup_F_omega"] for _, e in extra_rows])
    if "norm_F_perp" in names:
        vals = [e["norm_F_perp"] for _, e in extra_rows]
        F0 = math.sqrt(grid.integrate(lt.pointwise_norm_sq(fl.evaluate(grid, field0.alg, field0.A, field0.higgs, cfg.flow).F)))
        rep["F_perp_relative_max"] = max(vals) / F0 if F0 > 0 else 0.0
    if extras.nh:
        worst = max(_worst_increment([e[f"sup_higgs_{i}"] for _, e in extra_rows]) for i in range(extras.nh))
        rep["higgs_max_principle_worst_increment"] = worst
        rep["higgs_max_principle_holds"] = worst <= MAX_PRINCIPLE_TOL
        rep["monitored_final"] = {k: v for k, v in extra_rows[-1][1].items() if k.startswith("q_")}
    if cfg.monotonicity is not None:
        m = dict(cfg.monotonicity)
        if m["t2"] == "end":
            m["t2"] = t_final
        kappa = split.kappa_total(cfg.beta) if split is not None else 1.0
        try:
            probe = mon.MonotonicityProbe(tuple(m["x"]), m["R1"], m["R2"], m["t1"], m["t2"])
            tr = mon.monotonicity_trace(grid, list(history), probe, cutoff, K_hist, kappa)
            rep["monotonicity"] = {k: v for k, v in tr.items() if k not in ("t", "phi")}
        except ValueError as exc:
            # e.g. the run ended before t2 or the probe radii imply gamma > 1
            rep["monotonicity"] = {"error": str(exc)}
    hist = list(history)
    rep["singular_candidates"] = mon.singular_candidates(grid, hist, cfg.singular_R, cfg.eps0)
    rep["eps0"] = cfg.eps0
    write_json(os.path.join(out_dir, cfg.report), rep)
    if cfg.snapshot:
        snapshot.write_field(os.path.join(out_dir, cfg.snapshot), state.field, state.t)
    return (EXIT_BLOWUP if aborted else EXIT_OK), rep


# --------------------------------------------------------------------------
# reduce-check

REDUCE_GRIDS = {"k3": (8,) * 4, "cy3": (4,) * 6, "g2mono": (4,) * 7}


def reduce_check(case: str, seed: int = 0, steps: int = 5, data: str = "random", out_dir: str | None = None,
                 tol: float = 1e-10) -> tuple[int, dict]:
    """pi_7 cross-check and a short reduced-flow run with the monitored quantities."""
    c = red.get_case(case)
    alg = liealg.su2()
    rep = mon.reduction_report(c.name, seed, 32, alg)
    ok = rep["pi7_residual"] <= tol
    if c.name == "su4":
        eq = rep["equivalence"]
        ok = ok and rep["rank"] == 7 and rep["kernel_residual"] <= tol and eq["agree"] == eq["samples"]
    if c.name == "k3":
        rep["end_to_end_residual"] = red.k3_end_to_end(4, seed, alg)
        ok = ok and rep["end_to_end_residual"] <= tol
    rows = []
    header = None
    if c.name != "su4":
        grid = lt.PeriodicGrid(REDUCE_GRIDS[c.name])
        if data == "commuting":
            f = commuting_field(grid, c.n_higgs, seed, 1.0, alg)
        else:
            f = lt.random_gauge_field(grid, seed, 1.0, 0.5, c.n_higgs, 1.0, alg)
        state = fl.FlowState(0.0, f, kind=c.name)
        sups = [red.higgs_sup(grid, state.field.higgs)]

        def qrow(st):
            q = red.field_quantities(c.name, grid, alg, st.field.A, st.field.higgs)
            return q

        q = qrow(state)
        header = ["t", "E"] + [f"sup_higgs_{i}" for i in range(c.n_higgs)] + [f"q_{k}" for k in q]
        rows.append([_fmt(state.t), _fmt(state.evaluation.E)] + [_fmt(v) for v in sups[-1]] + [_fmt(v) for v in q.values()])
        for state, _ in fl.run(state, steps):
            sups.append(red.higgs_sup(grid, state.field.higgs))
            q = qrow(state)
            rows.append([_fmt(state.t), _fmt(state.evaluation.E)] + [_fmt(v) for v in sups[-1]] + [_fmt(v) for v in q.values()])
        inc = float(np.max(np.diff(np.array(sups), axis=0))) if len(sups) > 1 else 0.0
        rep["higgs_max_principle_worst_increment"] = inc
        rep["monitored_final"] = q
        ok = ok and inc <= MAX_PRINCIPLE_TOL
    rep["passed"] = bool(ok)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_json(os.path.join(out_dir, f"reduce_{c.name}.json"), rep)
        if header is not None:
            write_csv(os.path.join(out_dir, f"reduce_{c.name}.csv"), header, rows)
    return (EXIT_OK if ok else EXIT_IDENTITY), rep
