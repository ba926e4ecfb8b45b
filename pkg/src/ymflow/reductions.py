"""Dimensional reductions of Spin(7) curvature to Higgs-field data.

A connection A on a base X of dimension 4, 6 or 7 together with Higgs fields
Phi_i pulls back to an 8-dimensional connection on X x T^{8 - dim X} that is
constant along the fibre.  Its curvature is assembled here as an 8D 2-form,
and its 7-component is computed both with the generic eigen projector of the
Cayley form and with the closed forms specific to each case.

Array layout follows the lattice module: ``F`` is ``(m, C(d,2), *S)``, the
Higgs fields ``H`` are ``(p, m, *S)`` and their covariant derivatives ``DH``
are ``(p, m, d, *S)``.  Constant data simply uses ``S = (samples,)``.

Conventions fixed by numerical fit against the eigen projector:

* K3: the complex structures act on 1-form components as the matrices of
  the self-dual forms, and the gradient block carries a factor 1/4.
* G2 monopoles use Theta = phi ^ dtheta + psi, the orientation in which this
  code's phi yields the Spin(7) spectrum; the monitored quantity is then
  D Phi + *(F ^ psi).
* CY3 and SU(4): I = J^* on 1-forms (J^* dx = -dy) and the complex Hodge star
  is extended anti-linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import exterior as ext
from . import lattice as lt
from . import liealg

N8 = 8


@dataclass(frozen=True)
class ReductionCase:
    name: str
    base_dim: int
    n_higgs: int

    @property
    def fibre_axes(self) -> tuple[int, ...]:
        """0-based 8D axes of the fibre coordinates theta_i."""
        return tuple(range(self.base_dim, N8))


CASES = {
    "k3": ReductionCase("k3", 4, 4),
    "cy3": ReductionCase("cy3", 6, 2),
    "g2mono": ReductionCase("g2mono", 7, 1),
    "su4": ReductionCase("su4", 8, 0),
}


def get_case(case) -> ReductionCase:
    if isinstance(case, ReductionCase):
        return case
    try:
        return CASES[case]
    except KeyError:
        raise ValueError(f"unknown reduction case {case!r}; expected one of {sorted(CASES)}") from None


def _e8(f: ext.KForm) -> ext.KForm:
    return ext.embed(f, N8)


def _theta_1form(i: int) -> ext.KForm:
    """d theta on the 8D axis with 0-based index ``i``."""
    return ext.KForm.basis_vector(N8, i + 1)


def _k3_tau():
    th = [_theta_1form(4 + i) for i in range(4)]
    out = []
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        out.append(ext.wedge(th[0], th[i]) + ext.wedge(th[j], th[k]))
    return out


@lru_cache(maxsize=None)
def theta_form(case) -> ext.KForm:
    """Cayley 4-form on R^8 adapted to the product structure of ``case``."""
    c = get_case(case)
    if c.name == "k3":
        w = [_e8(x) for x in ext.quaternionic_omegas(1)]
        vol_x = ext.KForm.from_terms(N8, {"1234": 1.0})
        vol_t = ext.KForm.from_terms(N8, {"5678": 1.0})
        out = vol_x + vol_t
        for wi, ti in zip(w, _k3_tau()):
            out = out - ext.wedge(wi, ti)
        return out
    if c.name == "cy3":
        w = _e8(ext.kahler_omega(3))
        o1, o2 = (_e8(x) for x in ext.holomorphic_volume(3))
        t1, t2 = _theta_1form(6), _theta_1form(7)
        return (ext.wedge(ext.wedge(t1, t2), w) + ext.wedge(t1, o1) - ext.wedge(t2, o2)
                + ext.power(w, 2) * 0.5)
    if c.name == "g2mono":
        return ext.spin7_from_g2(flip=True)
    w = ext.kahler_omega(4)
    return ext.power(w, 2) * 0.5 + ext.holomorphic_volume(4)[0]


@lru_cache(maxsize=None)
def _split(name: str) -> ext.EigenSplit:
    sp = ext.eigen_split(ext.lpsi_matrix(theta_form(name)))
    if sp.spectrum() != {-1.0: 21, 3.0: 7}:
        raise RuntimeError(f"{name}: Theta does not have the Spin(7) spectrum")
    return sp


def pi7_projector(case) -> np.ndarray:
    """Orthogonal projector onto Lambda^2_7 (eigenvalue 3) for ``case``."""
    sp = _split(get_case(case).name)
    return sp.projectors[int(np.argmin(np.abs(np.asarray(sp.lambdas) - 3.0)))]


# --------------------------------------------------------------------------
# index bookkeeping and linear maps


@lru_cache(maxsize=None)
def _layout(name: str):
    """Positions in the 8D 2-form basis of base pairs, (a, theta_i) pairs and theta pairs."""
    c = CASES[name]
    d = c.base_dim
    idx = ext.index_map(N8, 2)
    base = np.array([idx[p] for p in ext.basis(d, 2)], dtype=np.intp)
    mixed = np.array([[idx[(a, t)] for a in range(d)] for t in c.fibre_axes], dtype=np.intp).reshape(-1, d)
    pairs = {}
    for i, ti in enumerate(c.fibre_axes):
        for j, tj in enumerate(c.fibre_axes):
            if i < j:
                pairs[(i, j)] = idx[(ti, tj)]
    return base, mixed, pairs


def _linear_map(fn, n: int, k: int) -> np.ndarray:
    """Matrix of a linear KForm map on the sorted k-form basis of R^n."""
    C = ext.dim(n, k)
    cols = [np.asarray(fn(ext.KForm(n, k, np.eye(C)[c])).coeffs) for c in range(C)]
    return np.array(cols).T


def _star_wedge(fixed: ext.KForm, k: int) -> np.ndarray:
    """Matrix of x -> *(x ^ fixed) on k-forms (complex if ``fixed`` is)."""
    return _linear_map(lambda x: ext.hodge_star(ext.wedge(x, fixed)), fixed.n, k)


def _wedge_with(fixed: ext.KForm, k: int) -> np.ndarray:
    return _linear_map(lambda x: ext.wedge(x, fixed), fixed.n, k)


def _star_matrix(n: int, k: int) -> np.ndarray:
    return _linear_map(ext.hodge_star, n, k)


def complex_type_data(k: int):
    """Operators of the standard complex structure on R^{2k}.

    Returns (I, Pb, P20, P02, P10): I = J^* on 1-forms, Pb the projector onto
    real (2,0)+(0,2) forms and the complex type projectors on 2- and 1-forms.
    J^* acts on 2-forms as a derivation with eigenvalue 2i on (2,0).
    """
    J = ext.complex_structure(k)
    n = 2 * k

    def jder(w):
        M = ext.two_form_matrix(w)
        return ext.matrix_two_form(J.T @ M + M @ J)

    D = _linear_map(jder, n, 2)
    Pb = -(D @ D) / 4.0
    P20 = 0.5 * (Pb - 0.5j * D @ Pb)
    P02 = 0.5 * (Pb + 0.5j * D @ Pb)
    P10 = 0.5 * (np.eye(n) - 1j * J.T)
    return J.T, Pb, P20, P02, P10


def _apply(M, w, axis=1):
    """Apply a matrix to the form axis of an array."""
    return np.moveaxis(np.tensordot(M, w, axes=([1], [axis])), 0, axis)


# --------------------------------------------------------------------------
# assembly and the two projections


def _check_shapes(c: ReductionCase, F, DH, H):
    F = np.asarray(F, dtype=float)
    if F.shape[1] != ext.dim(c.base_dim, 2):
        raise ValueError(f"{c.name}: F must have C({c.base_dim},2) form components")
    if c.n_higgs:
        DH = np.asarray(DH, dtype=float)
        H = np.asarray(H, dtype=float)
        if H.shape[0] != c.n_higgs or DH.shape[0] != c.n_higgs or DH.shape[2] != c.base_dim:
            raise ValueError(f"{c.name}: expected {c.n_higgs} Higgs fields on a {c.base_dim}-dimensional base")
    return F, DH, H


def assemble(case, alg, F, DH=None, H=None) -> np.ndarray:
    """8D curvature F + sum D Phi_i ^ dtheta_i + sum_{i<j} [Phi_i, Phi_j] dtheta_ij."""
    c = get_case(case)
    F, DH, H = _check_shapes(c, F, DH, H)
    if c.name == "su4":
        return F.copy()
    base, mixed, pairs = _layout(c.name)
    out = np.zeros((F.shape[0], ext.dim(N8, 2)) + F.shape[2:])
    out[:, base] = F
    for i in range(c.n_higgs):
        out[:, mixed[i]] = DH[i]
    for (i, j), p in pairs.items():
        out[:, p] = alg.bracket(H[i], H[j])
    return out


def pi7_eigen(case, F8) -> np.ndarray:
    return liealg.apply_projector(pi7_projector(case), F8)


def _vec8(f: ext.KForm) -> np.ndarray:
    return f.coeffs.reshape((1, -1))


def _outer(coef, form_vec):
    """coef (m, *S) times an 8D 2-form vector -> (m, 28, *S)."""
    coef = np.asarray(coef)
    return coef[:, None] * form_vec.reshape((1, -1) + (1,) * (coef.ndim - 1))


@lru_cache(maxsize=None)
def _k3_data():
    omegas = ext.quaternionic_omegas(1)
    W = [np.eye(4)] + [ext.two_form_matrix(w) for w in omegas]
    Winv = [np.linalg.inv(x) for x in W]
    targets = [((_e8(w) - t) * 0.5).coeffs for w, t in zip(omegas, _k3_tau())]
    return np.array([w.coeffs for w in omegas]), W, Winv, targets


def _k3_cross_brackets(alg, H):
    """[Phi_0, Phi_i] + [Phi_j, Phi_k] for (i, j, k) cyclic."""
    return [alg.bracket(H[0], H[i]) + alg.bracket(H[j], H[k]) for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2))]


def _k3_gradient_sum(DH):
    _, W, _, _ = _k3_data()
    return sum(_apply(W[j], DH[j]) for j in range(4))


@lru_cache(maxsize=None)
def _cy3_data():
    w = ext.kahler_omega(3)
    o1, o2 = ext.holomorphic_volume(3)
    om_bar = ext.KForm(6, 3, o1.coeffs - 1j * o2.coeffs)
    I, Pb, P20, P02, P10 = complex_type_data(3)
    return dict(
        w=w.coeffs, I=I, P20=P20, P10=P10,
        SO1=_star_wedge(o1, 2), SO2=_star_wedge(o2, 2),
        W2=_wedge_with(om_bar, 2), W1=_wedge_with(om_bar, 1),
        S5=_star_matrix(6, 5), S4=_star_matrix(6, 4),
        target=((_e8(w) + ext.wedge(_theta_1form(6), _theta_1form(7))) * 0.25).coeffs,
    )


@lru_cache(maxsize=None)
def _g2m_data():
    phi = ext.g2_phi()
    psi = ext.hodge_star(phi)
    return dict(
        AF=0.25 * (np.eye(21) + _star_wedge(phi, 2)),
        SD=_star_wedge(psi, 1), SF=_star_wedge(psi, 2),
    )


@lru_cache(maxsize=None)
def _su4_data():
    w = ext.kahler_omega(4)
    o1, o2 = ext.holomorphic_volume(4)
    om = ext.KForm(8, 4, o1.coeffs + 1j * o2.coeffs)
    I, Pb, P20, P02, P10 = complex_type_data(4)
    closed = np.outer(w.coeffs, w.coeffs) / 4.0 + 0.5 * (Pb + 0.5 * _star_wedge(o1, 2) @ Pb)
    return dict(w=w.coeffs, P02=P02, W=_wedge_with(om, 2), S6=_star_matrix(8, 6), closed=closed)


def pi7_closed_form(case, alg, F, DH=None, H=None) -> np.ndarray:
    """The 7-component of the assembled curvature from the reduced formulas."""
    c = get_case(case)
    F, DH, H = _check_shapes(c, F, DH, H)
    out = np.zeros((F.shape[0], ext.dim(N8, 2)) + F.shape[2:])
    if c.name == "su4":
        return liealg.apply_projector(_su4_data()["closed"], F)
    base, mixed, _ = _layout(c.name)
    if c.name == "k3":
        om, _, Winv, targets = _k3_data()
        f = _apply(om, F) / 2.0
        br = _k3_cross_brackets(alg, H)
        for i in range(3):
            out += _outer(f[:, i] - 0.5 * br[i], targets[i])
        G = _k3_gradient_sum(DH)
        for i in range(4):
            out[:, mixed[i]] += 0.25 * _apply(Winv[i], G)
        return out
    if c.name == "cy3":
        d = _cy3_data()
        lam = _apply(d["w"][None, :], F)[:, 0]
        out += _outer(lam + alg.bracket(H[0], H[1]), d["target"])
        D1, D2 = DH[0], DH[1]
        out[:, mixed[0]] += 0.25 * (D1 - _apply(d["I"], D2) + _apply(d["SO2"], F))
        out[:, mixed[1]] += 0.25 * (D2 + _apply(d["I"], D1) + _apply(d["SO1"], F))
        u = 0.5j * np.conj(_apply(d["S5"] @ d["W2"] @ d["P20"], F)) - (D1 - 1j * D2)
        out[:, base] += 0.25 * np.imag(np.conj(_apply(d["S4"] @ d["W1"], u)))
        return out
    d = _g2m_data()
    D = DH[0]
    out[:, base] += _apply(d["AF"], F) + 0.25 * _apply(d["SD"], D)
    out[:, mixed[0]] += 0.25 * (D + _apply(d["SF"], F))
    return out


def reduction_pi7_check(case, alg, F, DH=None, H=None) -> float:
    """Max pointwise discrepancy between the eigen projection and the closed form."""
    F8 = assemble(case, alg, F, DH, H)
    diff = pi7_eigen(case, F8) - pi7_closed_form(case, alg, F, DH, H)
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def random_constant_fiber(case, seed: int = 0, samples: int = 16, alg=None, scale: float = 1.0):
    """Random constant-fibre data (F, DH, H), each with a trailing sample axis.

    The entries are independent, which is more general than anything coming
    from an actual connection; the pointwise formulas do not care.
    """
    c = get_case(case)
    alg = liealg.su2() if alg is None else alg
    rng = np.random.default_rng(seed)
    m = alg.dim
    F = scale * rng.standard_normal((m, ext.dim(c.base_dim, 2), samples))
    DH = scale * rng.standard_normal((c.n_higgs, m, c.base_dim, samples))
    H = scale * rng.standard_normal((c.n_higgs, m, samples))
    return F, DH, H


# --------------------------------------------------------------------------
# monitored quantities of the reduced flows


def _norm(x):
    """Pointwise norm over the Lie and form axes (complex allowed)."""
    x = np.asarray(x)
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=(0, 1)))


def monitored_quantities(case, alg, F, DH=None, H=None) -> dict[str, np.ndarray]:
    """Pointwise norms of the quantities whose bound continues the reduced flow."""
    c = get_case(case)
    F, DH, H = _check_shapes(c, F, DH, H)
    out = {}
    if c.name == "k3":
        om = _k3_data()[0]
        f = _apply(om, F) / 2.0
        br = _k3_cross_brackets(alg, H)
        for i in range(3):
            out[f"f{i + 1}_bracket"] = np.sqrt(np.sum((f[:, i] - 0.5 * br[i]) ** 2, axis=0))
        out["twisted_gradient"] = _norm(_k3_gradient_sum(DH))
    elif c.name == "cy3":
        d = _cy3_data()
        lam = _apply(d["w"][None, :], F)[:, 0]
        out["lambda_F_bracket"] = np.sqrt(np.sum((lam + alg.bracket(H[0], H[1])) ** 2, axis=0))
        # *(F^{2,0} ^ conj Omega) with the anti-linear star, plus 2i d'Phi, Phi = Phi_1 - i Phi_2
        q = np.conj(_apply(d["S5"] @ d["W2"], np.conj(_apply(d["P20"], F))))
        q = q + 2j * _apply(d["P10"], DH[0] - 1j * DH[1])
        out["holomorphic_gradient"] = _norm(q)
    elif c.name == "g2mono":
        d = _g2m_data()
        out["monopole"] = _norm(DH[0] + _apply(d["SF"], F))
    else:
        d = _su4_data()
        lam = _apply(d["w"][None, :], F)[:, 0]
        out["lambda_F"] = np.sqrt(np.sum(lam**2, axis=0))
        F02 = _apply(d["P02"], F)
        q = np.conj(_apply(d["S6"] @ d["W"], F02)) / 4.0 + F02
        out["dt4"] = _norm(q)
    return out


def su4_linear_structure(tol: float = 1e-9) -> dict:
    """Rank and kernel of F -> (Lambda F, *(F^{0,2} ^ Omega/4) + F^{0,2}) on R^8.

    The vanishing of both quantities is equivalent to P_7 F = 0 exactly when
    the rank is 7 and Lambda^2_21 lies in the kernel.
    """
    d = _su4_data()
    q_map = d["S6"] @ np.conj(d["W"] @ d["P02"]) / 4.0 + d["P02"]
    M = np.vstack([d["w"][None, :], q_map.real, q_map.imag])
    P7 = pi7_projector("su4")
    return dict(
        rank=int(np.linalg.matrix_rank(M, tol)),
        kernel_residual=float(np.max(np.abs(M @ (np.eye(28) - P7)))),
    )


def su4_equivalence(samples: int = 100, seed: int = 0, alg=None, tol: float = 1e-9) -> dict:
    """Compare 'both monitored quantities vanish' with 'P_7 F = 0' sample by sample.

    Half of the samples are projected onto Lambda^2_21 so both outcomes occur.
    """
    alg = liealg.su2() if alg is None else alg
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((alg.dim, 28, samples))
    P7 = pi7_projector("su4")
    F[:, :, ::2] = liealg.apply_projector(np.eye(28) - P7, F[:, :, ::2])
    q = monitored_quantities("su4", alg, F)
    cor_zero = np.maximum(q["lambda_F"], q["dt4"]) <= tol
    p7_zero = _norm(liealg.apply_projector(P7, F)) <= tol
    return dict(samples=samples, agree=int(np.sum(cor_zero == p7_zero)), vanishing=int(np.sum(p7_zero)))


# --------------------------------------------------------------------------
# lattice helpers


def higgs_gradients(space, alg, A, H) -> np.ndarray:
    """(p, m, d, *S) array of D Phi_i."""
    return np.stack([lt.ext_d0(space, alg, A, H[i]) for i in range(H.shape[0])])


def field_quantities(case, space, alg, A, H) -> dict[str, float]:
    """Sup norms over the lattice of the monitored quantities."""
    c = get_case(case)
    F = lt.curvature(space, alg, A)
    DH = higgs_gradients(space, alg, A, H) if c.n_higgs else None
    return {k: float(space.sup(v)) for k, v in monitored_quantities(c, alg, F, DH, H).items()}


def higgs_sup(space, H) -> np.ndarray:
    """sup_x |Phi_i(x)| for each Higgs field."""
    return np.array([math.sqrt(space.sup(np.sum(H[i] ** 2, axis=0))) for i in range(H.shape[0])])


def k3_lift(space4: lt.PeriodicGrid, A, H, fibre_points: int = 4):
    """Lift (A, Phi_0..3) on T^4 to a fibre-constant connection on T^8."""
    shape8 = tuple(space4.shape) + (fibre_points,) * 4
    periods8 = tuple(space4.periods) + (1.0,) * 4
    grid8 = lt.PeriodicGrid(shape8, periods8)
    m = A.shape[0]
    expand = (Ellipsis,) + (None,) * 4
    A8 = np.zeros((m, 8) + shape8)
    A8[:, :4] = A[expand]
    for i in range(4):
        A8[:, 4 + i] = H[i][expand]
    return grid8, A8


def k3_end_to_end(shape: int = 4, seed: int = 0, alg=None, amplitude: float = 0.5) -> float:
    """Lattice curvature on T^8 = T^4 x T^4 versus the reduced closed form on T^4."""
    alg = liealg.su2() if alg is None else alg
    grid4 = lt.PeriodicGrid((shape,) * 4)
    f = lt.random_gauge_field(grid4, seed, k_max=1.0, amplitude=amplitude, n_higgs=4,
                              higgs_amplitude=amplitude, alg=alg)
    A, H = f.A, f.higgs
    grid8, A8 = k3_lift(grid4, A, H, shape)
    F8 = lt.curvature(grid8, alg, A8)
    lhs = pi7_eigen("k3", F8)
    F = lt.curvature(grid4, alg, A)
    DH = higgs_gradients(grid4, alg, A, H)
    rhs = pi7_closed_form("k3", alg, F, DH, H)
    rhs = rhs[(Ellipsis,) + (None,) * 4]
    return float(np.max(np.abs(lhs - rhs)))
