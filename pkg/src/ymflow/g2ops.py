"""G2 linear algebra on R^7: cross product, phi-contractions, pi_7 / pi_14."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import exterior as ext
from . import liealg

N7 = 7


def phi_tensor(phi: ext.KForm | None = None) -> np.ndarray:
    """Fully antisymmetric phi_ijk (7, 7, 7) from the sorted-basis coefficients."""
    phi = ext.g2_phi() if phi is None else phi
    T = np.zeros((N7, N7, N7))
    for c, (i, j, k) in zip(phi.coeffs, ext.basis(N7, 3)):
        for perm in ((i, j, k), (j, k, i), (k, i, j)):
            T[perm] = c
        for perm in ((j, i, k), (i, k, j), (k, j, i)):
            T[perm] = -c
    return T


def contraction_matrix(phi: ext.KForm | None = None) -> np.ndarray:
    """Matrix K (7 x 21) with (w _| phi)_k = sum_{i,j} w_ij phi_ijk = K @ w_sorted."""
    T = phi_tensor(phi)
    K = np.zeros((N7, ext.dim(N7, 2)))
    for p, (i, j) in enumerate(ext.basis(N7, 2)):
        K[:, p] = 2.0 * T[i, j, :]
    return K


def expansion_matrix(phi: ext.KForm | None = None) -> np.ndarray:
    """Matrix X (21 x 7) with a _| phi = X @ a (a 1-form, result a 2-form)."""
    T = phi_tensor(phi)
    X = np.zeros((ext.dim(N7, 2), N7))
    for p, (i, j) in enumerate(ext.basis(N7, 2)):
        # (a _| phi)_ij = a_k phi_kij
        X[p, :] = T[:, i, j]
    return X


@dataclass(frozen=True, eq=False)
class G2Context:
    """Cached G2 data for a given phi (the standard one by default)."""

    phi: ext.KForm = field(default_factory=ext.g2_phi)

    def __post_init__(self):
        if self.phi.n != N7 or self.phi.k != 3:
            raise ValueError("G2Context needs a 3-form on R^7")
        T = phi_tensor(self.phi)
        K = contraction_matrix(self.phi)
        X = expansion_matrix(self.phi)
        P7 = X @ K / 6.0
        object.__setattr__(self, "_T", T)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "P7", P7)
        object.__setattr__(self, "P14", np.eye(ext.dim(N7, 2)) - P7)

    @property
    def psi(self) -> ext.KForm:
        return ext.hodge_star(self.phi)

    @property
    def T(self) -> np.ndarray:
        return self._T


@lru_cache(maxsize=1)
def default_context() -> G2Context:
    return G2Context()


def _ctx(ctx):
    return default_context() if ctx is None else ctx


def cross(a, b, ctx: G2Context | None = None):
    """(a x b)_k = phi_ijk a_i b_j.  Accepts 1-form KForms or length-7 arrays."""
    if isinstance(a, ext.KForm) or isinstance(b, ext.KForm):
        if a.n != N7 or b.n != N7 or a.k != 1 or b.k != 1:
            raise ValueError("cross needs 1-forms on R^7")
        return ext.KForm(N7, 1, cross(a.coeffs, b.coeffs, ctx))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != N7 or b.shape[-1] != N7:
        raise ValueError("cross needs vectors in R^7")
    return np.einsum("ijk,...i,...j->...k", _ctx(ctx).T, a, b)


def contract2_phi(w, ctx: G2Context | None = None):
    """(w _| phi)_k = sum_{i,j} w_ij phi_ijk for a 2-form."""
    if isinstance(w, ext.KForm):
        if w.n != N7 or w.k != 2:
            raise ValueError("contract2_phi needs a 2-form on R^7")
        return ext.KForm(N7, 1, _ctx(ctx).K @ w.coeffs)
    return _ctx(ctx).K @ np.asarray(w)


def contract1_phi(a, ctx: G2Context | None = None):
    """a _| phi, a 1-form to a 2-form."""
    if isinstance(a, ext.KForm):
        if a.n != N7 or a.k != 1:
            raise ValueError("contract1_phi needs a 1-form on R^7")
        return ext.KForm(N7, 2, _ctx(ctx).X @ a.coeffs)
    return _ctx(ctx).X @ np.asarray(a)


def pi7(w: ext.KForm, ctx: G2Context | None = None) -> ext.KForm:
    """(1/6)(w _| phi) _| phi."""
    return contract1_phi(contract2_phi(w, ctx), ctx) / 6.0


def pi14(w: ext.KForm, ctx: G2Context | None = None) -> ext.KForm:
    return w - pi7(w, ctx)


def wedge14(a: ext.KForm, b: ext.KForm, ctx: G2Context | None = None) -> ext.KForm:
    """a ^ b - (1/3)(a x b) _| phi, which lies in Lambda^2_14."""
    return ext.wedge(a, b) - contract1_phi(cross(a, b, ctx), ctx) / 3.0


# --------------------------------------------------------------------------
# array-level versions used on lattices (Lie axis first, form axis second)


def contract2_arr(w, ctx: G2Context | None = None):
    """(m, 21, ...) -> (m, 7, ...)."""
    return liealg.apply_projector(_ctx(ctx).K, w)


def contract1_arr(a, ctx: G2Context | None = None):
    """(m, 7, ...) -> (m, 21, ...)."""
    return liealg.apply_projector(_ctx(ctx).X, a)


def lie_cross_arr(alg, f, g=None, ctx: G2Context | None = None):
    """[f x g]_k = phi_ijk [f_i, g_j] for ad-valued 1-forms (m, 7, ...)."""
    g = f if g is None else g
    T = _ctx(ctx).T
    out = np.zeros(np.broadcast_shapes(f.shape, g.shape))
    for i, j, k in zip(*np.nonzero(T)):
        out[:, k] += T[i, j, k] * alg.bracket(f[:, i], g[:, j])
    return out


def lie_wedge14_arr(alg, f, g=None, ctx: G2Context | None = None):
    """[f ^_14 g] = [f ^ g] - (1/3)[f x g] _| phi for ad-valued 1-forms."""
    g = f if g is None else g
    w = liealg.bracket_wedge_arr(alg, N7, 1, 1, f, g)
    return w - contract1_arr(lie_cross_arr(alg, f, g, ctx), ctx) / 3.0


# --------------------------------------------------------------------------
# identity suite


def product_identity_residuals(samples: int = 1000, seed: int = 0, ctx: G2Context | None = None) -> dict:
    """Max residuals over random samples of the four product identities.

    For alpha, beta in R^7 and gamma in Lambda^2_14 (real forms):
      equivariance:  (gamma . alpha) _| phi = [[gamma, alpha _| phi]]
      pi7:           pi_7 [[a_|phi, b_|phi]] = (a x b) _| phi
      pi14:          pi_14 [[a_|phi, b_|phi]] = -3 a ^_14 b
      full:          [[a_|phi, b_|phi]] = 2 (a x b) _| phi - 3 a ^ b
    """
    ctx = _ctx(ctx)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((samples, N7))
    B = rng.standard_normal((samples, N7))
    G = rng.standard_normal((samples, ext.dim(N7, 2))) @ ctx.P14.T
    pos, sgn = liealg._pair_positions(N7)
    iu = np.array(ext.basis(N7, 2)).T

    def mat(w):  # (S, 21) -> (S, 7, 7)
        return w[:, pos] * sgn

    def comm(x, y):  # bold bracket of real 2-forms = matrix commutator
        M = mat(x) @ mat(y) - mat(y) @ mat(x)
        return M[:, iu[0], iu[1]]

    a_phi = A @ ctx.X.T
    b_phi = B @ ctx.X.T
    axb_phi = cross(A, B, ctx) @ ctx.X.T
    ab = A[:, iu[0]] * B[:, iu[1]] - A[:, iu[1]] * B[:, iu[0]]
    ga = np.einsum("sjk,sk->sj", mat(G), A)
    br = comm(a_phi, b_phi)
    res = dict(
        equivariance=ga @ ctx.X.T - comm(G, a_phi),
        pi7=br @ ctx.P7.T - axb_phi,
        pi14=br @ ctx.P14.T + 3.0 * (ab - axb_phi / 3.0),
        full=br - (2.0 * axb_phi - 3.0 * ab),
    )
    na, nb, ng = (np.linalg.norm(x, axis=1) for x in (A, B, G))
    scale = np.maximum(1.0, np.maximum(na * nb, ng * na))
    return {k: float(np.max(np.max(np.abs(r), axis=1) / scale)) for k, r in res.items()}


def exact_bracket_instance(ctx: G2Context | None = None) -> float:
    """|[[e1 _| phi, e2 _| phi]] - (-3 e^12 + 2 e3 _| phi)|."""
    ctx = _ctx(ctx)
    e = [ext.KForm.basis_vector(N7, i) for i in (1, 2, 3)]
    lhs = liealg.double_bracket(contract1_phi(e[0], ctx), contract1_phi(e[1], ctx))
    rhs = -3.0 * ext.KForm.from_terms(N7, {"12": 1.0}) + 2.0 * contract1_phi(e[2], ctx)
    return float(np.max(np.abs((lhs - rhs).coeffs)))


def instanton_residual(F, psi: ext.KForm) -> float:
    """|F + *(F ^ Psi)| for a constant ad-valued (or real) 2-form."""
    L = ext.lpsi_matrix(psi)
    if isinstance(F, liealg.AdValuedForm):
        r = F.coeffs + F.coeffs @ L.T
    else:
        r = F.coeffs + L @ F.coeffs
    return float(np.sqrt(np.sum(r**2)))


g2_instanton_residual = instanton_residual
