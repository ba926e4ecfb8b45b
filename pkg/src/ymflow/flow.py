"""Time integration of Yang-Mills flow and its Higgs reductions.

The discrete right-hand sides are exact negative gradients of the discrete
energies below, so the energy identity holds up to time-stepping error.
Dissipation is reported with the 1-form pairing ||a||^2 = 1/2 int sum_j |a_j|^2,
under which dE/dt = -2 ||dA/dt||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import exterior as ext
from . import g2ops
from . import lattice as lt
from . import liealg

# number of Higgs fields per flow kind and the expected base dimension
FLOW_KINDS = {"ym": (0, None), "k3": (4, 4), "cy3": (2, 6), "g2mono": (1, 7)}


class BlowupError(RuntimeError):
    """Non-finite values or curvature beyond the resolvable range."""

    def __init__(self, message, state=None, record=None):
        super().__init__(message)
        self.state = state
        self.record = record


@dataclass
class Evaluation:
    """Derived quantities of one field configuration."""

    F: np.ndarray
    dA: np.ndarray
    dH: np.ndarray | None
    E: float
    dissipation: float
    L: float


def _higgs_potential_grad(alg, H, kind):
    """Return (potential density, -grad) of 1/2 sum_{i<j} |[H_i, H_j]|^2."""
    p = H.shape[0]
    if kind == "g2mono" or p < 2:
        return 0.0, np.zeros_like(H)
    dens = 0.0
    force = np.zeros_like(H)
    for i in range(p):
        for j in range(p):
            if i == j:
                continue
            c = alg.bracket(H[i], H[j])
            if i < j:
                dens = dens + 0.5 * np.sum(c * c, axis=0)
            force[i] -= alg.bracket(H[j], c)
    return dens, force


def flow_rhs(space, alg, A, H, kind="ym", F=None):
    """(dA/dt, dH/dt, F) for the flow ``kind``."""
    F = lt.curvature(space, alg, A) if F is None else F
    dA = -lt.d_star(space, alg, A, F)
    dH = None
    if H is not None and len(H):
        dH = np.empty_like(H)
        _, force = _higgs_potential_grad(alg, H, kind)
        for i in range(H.shape[0]):
            DH = lt.ext_d0(space, alg, A, H[i])
            # -[Phi, D Phi] per component
            dA -= alg.bracket(H[i][:, None], DH)
            dH[i] = -lt.higgs_laplacian(space, alg, A, H[i]) + force[i]
    return dA, dH, F


def flow_energy(space, alg, A, H, kind="ym", F=None):
    """1/2 int |F|^2 + |D Phi|^2 + sum_{i<j} |[Phi_i, Phi_j]|^2."""
    F = lt.curvature(space, alg, A) if F is None else F
    dens = lt.pointwise_norm_sq(F)
    if H is not None and len(H):
        for i in range(H.shape[0]):
            dens = dens + lt.pointwise_norm_sq(lt.ext_d0(space, alg, A, H[i]))
        pot, _ = _higgs_potential_grad(alg, H, kind)
        dens = dens + 2.0 * pot
    return 0.5 * space.integrate(dens)


def evaluate(space, alg, A, H, kind="ym") -> Evaluation:
    dA, dH, F = flow_rhs(space, alg, A, H, kind)
    E = flow_energy(space, alg, A, H, kind, F)
    diss_dens = np.sum(dA * dA, axis=(0, 1))
    if dH is not None:
        diss_dens = diss_dens + np.sum(dH * dH, axis=(0, 1))
    D = 0.5 * space.integrate(diss_dens)
    L = math.sqrt(max(space.sup(lt.pointwise_norm_sq(F)), 0.0))
    return Evaluation(F, dA, dH, E, D, L)


@dataclass
class StepReport:
    dt: float
    E_before: float
    E_after: float
    D_before: float
    D_after: float
    rejected: bool = False


@dataclass
class FlowState:
    t: float
    field: lt.GaugeField
    spec: ext.CalibrationSpec | None = None
    split: ext.EigenSplit | None = None
    kind: str = "ym"
    integrator: str = "rk4"
    c_cfl: float | None = None
    beta: int = 0
    dt_scale: float = 1.0
    _eval: Evaluation | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}")
        nh, dim_req = FLOW_KINDS[self.kind]
        have = 0 if self.field.higgs is None else self.field.higgs.shape[0]
        if have != nh:
            raise ValueError(f"flow {self.kind!r} needs {nh} Higgs fields, got {have}")
        if dim_req is not None and self.field.n != dim_req:
            raise ValueError(f"flow {self.kind!r} runs on T^{dim_req}, got n={self.field.n}")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    @property
    def space(self):
        return self.field.space

    @property
    def alg(self):
        return self.field.alg

    @property
    def evaluation(self) -> Evaluation:
        if self._eval is None:
            self._eval = evaluate(self.space, self.alg, self.field.A, self.field.higgs, self.kind)
        return self._eval

    @property
    def F(self):
        return self.evaluation.F


def auto_dt(state: FlowState, L: float | None = None) -> float:
    """c_cfl min(h)^2 / (1 + min(h)^2 sup|F|), scaled down after rejections."""
    hmin = float(np.min(state.space.h))
    c = state.c_cfl if state.c_cfl is not None else 0.1 / state.space.n
    L = state.evaluation.L if L is None else L
    return state.dt_scale * c * hmin**2 / (1.0 + hmin**2 * L)


def _check_finite(state, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise BlowupError("non-finite field values", state)


def ym_step(state: FlowState, dt: float, energy_tol: float = 1e-12):
    """Advance one step; returns (new_state, StepReport).

    A step that raises the energy by more than ``energy_tol`` (relative) is
    rejected: the returned state equals the input with ``dt_scale`` halved.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    sp, alg, kind = state.space, state.alg, state.kind
    A0, H0 = state.field.A, state.field.higgs
    ev0 = state.evaluation

    def f(A, H):
        dA, dH, _ = flow_rhs(sp, alg, A, H, kind)
        return dA, dH

    def axpy(base, k, s):
        return None if base is None else base + s * k

    if state.integrator == "euler":
        A1 = A0 + dt * ev0.dA
        H1 = axpy(H0, ev0.dH, dt)
    else:
        k1 = (ev0.dA, ev0.dH)
        k2 = f(A0 + 0.5 * dt * k1[0], axpy(H0, k1[1], 0.5 * dt))
        k3 = f(A0 + 0.5 * dt * k2[0], axpy(H0, k2[1], 0.5 * dt))
        k4 = f(A0 + dt * k3[0], axpy(H0, k3[1], dt))
        A1 = A0 + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        H1 = None if H0 is None else H0 + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    _check_finite(state, A1, H1)
    new_field = state.field.with_fields(A1, H1)
    ev1 = evaluate(sp, alg, A1, H1, kind)
    hmin = float(np.min(sp.h))
    if not math.isfinite(ev1.L) or ev1.L > 10.0 / hmin**2:
        raise BlowupError(f"sup|F| = {ev1.L:.3e} exceeds 10/h^2", state)
    if ev1.E > ev0.E * (1.0 + energy_tol) + 1e-300:
        report = StepReport(dt, ev0.E, ev1.E, ev0.dissipation, ev1.dissipation, rejected=True)
        return replace(state, dt_scale=state.dt_scale * 0.5), report
    new_state = replace(state, t=state.t + dt, field=new_field, _eval=ev1)
    return new_state, StepReport(dt, ev0.E, ev1.E, ev0.dissipation, ev1.dissipation)


def k3_step(state: FlowState, dt: float):
    if state.kind != "k3":
        raise ValueError("k3_step needs a k3 flow state")
    return ym_step(state, dt)


def cy_step(state: FlowState, dt: float):
    if state.kind != "cy3":
        raise ValueError("cy_step needs a cy3 flow state")
    return ym_step(state, dt)


def g2m_step(state: FlowState, dt: float):
    if state.kind != "g2mono":
        raise ValueError("g2m_step needs a g2mono flow state")
    return ym_step(state, dt)


def advance(state: FlowState, dt: float | None = None, max_rejections: int = 30):
    """One accepted step (auto dt unless given); returns (state, report)."""
    for _ in range(max_rejections):
        step_dt = auto_dt(state) if dt is None else dt * state.dt_scale
        new, rep = ym_step(state, step_dt)
        if not rep.rejected:
            return new, rep
        state = new
    raise BlowupError("step rejected repeatedly", state)


def run(state: FlowState, steps: int, dt: float | None = None):
    """Yield (state, report) for each accepted step."""
    for _ in range(steps):
        state, rep = advance(state, dt)
        yield state, rep


# --------------------------------------------------------------------------
# verification operations


def energy_identity(reports) -> dict:
    """Compare E(t_end) - E(0) with -2 int D dt (trapezoid rule over steps)."""
    reports = [r for r in reports if not r.rejected]
    if not reports:
        return dict(delta_E=0.0, dissipation=0.0, residual=0.0, relative=0.0)
    dE = reports[-1].E_after - reports[0].E_before
    diss = sum(0.5 * r.dt * (r.D_before + r.D_after) for r in reports)
    res = dE + 2.0 * diss
    E0 = reports[0].E_before
    return dict(delta_E=dE, dissipation=diss, residual=res, relative=abs(res) / E0 if E0 > 0 else abs(res))


def proportionality_residual(space, alg, A, ctx=None):
    """(|D*F - 3 D*(pi_7 F)|, |D*F|) as L2 norms over the space (G2 lattices)."""
    if space.n != 7:
        raise ValueError("needs a 7-dimensional lattice")
    ctx = g2ops.default_context() if ctx is None else ctx
    F = lt.curvature(space, alg, A)
    dsF = lt.d_star(space, alg, A, F)
    ds7 = lt.d_star(space, alg, A, liealg.apply_projector(ctx.P7, F))
    r = dsF - 3.0 * ds7
    num = math.sqrt(space.integrate(np.sum(r * r, axis=(0, 1))))
    den = math.sqrt(space.integrate(np.sum(dsF * dsF, axis=(0, 1))))
    return num, den


def g2_weitzenbock_terms(space, alg, A, ctx=None):
    """Both sides of the G2 evolution identities, per site.

    Returns dict with lhs_a, rhs_a (ad-valued 1-forms) and lhs_b, rhs_b
    (ad-valued 2-forms):
      (d/dt + nabla*nabla) f   = [f x f] + 2 [F14 . f]
      (d/dt + nabla*nabla) F14 = [[F14, F14]] - 3 [f ^_14 f]
    where f = (F _| phi)/6 and dF/dt = -D(D*F).
    """
    ctx = g2ops.default_context() if ctx is None else ctx
    F = lt.curvature(space, alg, A)
    dF = -lt.hodge_laplacian_on_F(space, alg, A, F)
    f = g2ops.contract2_arr(F, ctx) / 6.0
    F14 = liealg.apply_projector(ctx.P14, F)
    df = g2ops.contract2_arr(dF, ctx) / 6.0
    dF14 = liealg.apply_projector(ctx.P14, dF)
    lhs_a = df + lt.connection_laplacian(space, alg, A, f)
    rhs_a = g2ops.lie_cross_arr(alg, f, f, ctx) + 2.0 * liealg.dot_action_arr(alg, 7, F14, f)
    lhs_b = dF14 + lt.connection_laplacian(space, alg, A, F14)
    rhs_b = liealg.double_bracket_arr(alg, 7, F14, F14) - 3.0 * g2ops.lie_wedge14_arr(alg, f, f, ctx)
    return dict(lhs_a=lhs_a, rhs_a=rhs_a, lhs_b=lhs_b, rhs_b=rhs_b)


def _l2(space, w):
    return math.sqrt(max(space.integrate(np.sum(w * w, axis=(0, 1))), 0.0))


def weitzenbock_residual(state_or_space, alg=None, A=None, geometry="G2", ctx=None) -> dict:
    """L2 norms of the Weitzenbock identity residuals.

    G2: residuals of the two evolution identities.  Kahler(k): residual of
    d/dt F^omega + nabla*nabla F^omega = 0.
    """
    if isinstance(state_or_space, FlowState):
        st = state_or_space
        space, alg, A = st.space, st.alg, st.field.A
        geometry = st.spec.label if st.spec is not None else geometry
    else:
        space = state_or_space
    if geometry == "G2":
        if space.n != 7:
            raise ValueError("G2 Weitzenbock check needs n = 7")
        t = g2_weitzenbock_terms(space, alg, A, ctx)
        ra = t["lhs_a"] - t["rhs_a"]
        rb = t["lhs_b"] - t["rhs_b"]
        return dict(
            a=_l2(space, ra), b=_l2(space, rb),
            a_scale=_l2(space, t["lhs_a"]), b_scale=_l2(space, t["lhs_b"]),
        )
    if geometry.startswith("Kahler"):
        spec = ext.CalibrationSpec.parse(geometry)
        w = ext.kahler_omega(spec.k).coeffs
        Pw = np.outer(w, w) / (w @ w)
        F = lt.curvature(space, alg, A)
        dF = -lt.hodge_laplacian_on_F(space, alg, A, F)
        Fw = liealg.apply_projector(Pw, F)
        r = liealg.apply_projector(Pw, dF) + lt.connection_laplacian(space, alg, A, Fw)
        return dict(omega=_l2(space, r), omega_scale=_l2(space, liealg.apply_projector(Pw, dF)))
    raise ValueError(f"no Weitzenbock check for geometry {geometry!r}")


def perp_norm(state: FlowState) -> float:
    """L2 norm of F^perp (the k-perp block of the geometry split)."""
    if state.split is None or not state.split.perp:
        raise ValueError("geometry has no k-perp component")
    return _l2(state.space, liealg.apply_projector(state.split.perp_projector, state.F))


def compatibility_drift(state: FlowState, steps: int, dt: float | None = None):
    """max_t ||F^perp(t)|| / ||F(0)|| over ``steps`` accepted steps.

    Returns (drift, final_state, per-step values).
    """
    F0 = _l2(state.space, state.F)
    vals = [perp_norm(state)]
    for state, _ in run(state, steps, dt):
        vals.append(perp_norm(state))
    denom = F0 if F0 > 0 else 1.0
    return max(vals) / denom, state, vals
