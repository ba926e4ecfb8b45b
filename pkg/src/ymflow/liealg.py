"""Structure-group Lie algebra and Lie-algebra-valued forms.

Array layout: the Lie axis is always first.  An ad-valued k-form stores
coefficients of shape ``(m, C(n,k), ...)`` over the same sorted basis as
:class:`~ymflow.exterior.KForm`; any trailing axes (lattice sites) ride along.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import exterior as ext


class LieAlgebra:
    """Real Lie algebra given by structure constants on an orthonormal basis.

    ``c[a, b, c]`` is the coefficient of T_c in [T_a, T_b]; the inner product
    is the basis dot product.
    """

    def __init__(self, structure_constants, name: str = "custom"):
        c = np.asarray(structure_constants, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError("structure constants must be an (m, m, m) array")
        self.c = c
        self.c.setflags(write=False)
        self.name = name
        self._su2 = False

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def bracket(self, x, y):
        """[x, y] over the leading Lie axis; trailing axes broadcast."""
        x = np.asarray(x)
        y = np.asarray(y)
        if x.shape[0] != self.dim or y.shape[0] != self.dim:
            raise ValueError(f"Lie axis mismatch: expected {self.dim}, got {x.shape[0]} and {y.shape[0]}")
        if self._su2:
            return np.stack(
                (
                    x[1] * y[2] - x[2] * y[1],
                    x[2] * y[0] - x[0] * y[2],
                    x[0] * y[1] - x[1] * y[0],
                )
            )
        return np.einsum("abc,a...,b...->c...", self.c, x, y)

    def inner(self, x, y):
        """Pointwise <x, y>, summing the Lie axis."""
        return np.sum(np.asarray(x) * np.asarray(y), axis=0)

    def jacobi_residual(self) -> float:
        c = self.c
        # [[a,b],c] + [[b,c],a] + [[c,a],b] in terms of structure constants
        t = np.einsum("abd,dce->abce", c, c)
        jac = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
        return float(np.max(np.abs(jac)))

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.c + np.transpose(self.c, (1, 0, 2)))))

    def ad_invariance_residual(self) -> float:
        # <[a,b],c> + <b,[a,c]> = c_abc + c_acb
        return float(np.max(np.abs(self.c + np.transpose(self.c, (0, 2, 1)))))

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and np.array_equal(self.c, other.c)

    def __hash__(self):
        return hash((self.name, self.c.tobytes()))

    def __repr__(self):
        return f"LieAlgebra({self.name}, dim={self.dim})"


def _levi_civita3() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (a, b, c), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[a, b, c] = s
    return eps


@lru_cache(maxsize=1)
def su2() -> LieAlgebra:
    """su(2) with [T_a, T_b] = eps_abc T_c."""
    alg = LieAlgebra(_levi_civita3(), name="su2")
    alg._su2 = True
    return alg


def su2_matrices() -> np.ndarray:
    """2x2 representation T_a = -(i/2) sigma_a, so [T_a, T_b] = eps_abc T_c
    and <X, Y> = -2 tr(XY)."""
    s = np.array(
        [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
        dtype=complex,
    )
    return -0.5j * s


def su2_to_matrix(x):
    """Lie coefficients (3, ...) -> 2x2 complex matrices (..., 2, 2)."""
    return np.einsum("a...,aij->...ij", np.asarray(x), su2_matrices())


def su2_from_matrix(M):
    """Anti-Hermitian traceless part of (..., 2, 2) matrices -> (3, ...)."""
    M = np.asarray(M)
    X = 0.5 * (M - np.conj(np.swapaxes(M, -1, -2)))
    X = X - np.trace(X, axis1=-2, axis2=-1)[..., None, None] * np.eye(2) / 2
    return np.real(-2.0 * np.einsum("...ij,aji->a...", X, su2_matrices()))


# --------------------------------------------------------------------------
# ad-valued forms as arrays


def _lie_product(alg: LieAlgebra):
    """Product for ext.wedge_coeffs when the form axis is moved to front: (T, m, ...)."""

    def prod(x, y):
        return np.moveaxis(alg.bracket(np.moveaxis(x, 1, 0), np.moveaxis(y, 1, 0)), 0, 1)

    return prod


def bracket_wedge_arr(alg: LieAlgebra, n: int, ka: int, kb: int, a, b):
    """[a ^ b]: wedge on form parts, Lie bracket on coefficients."""
    return ext.wedge_coeffs(n, ka, kb, a, b, product=_lie_product(alg), axis=1)


def pairing_wedge_arr(n: int, ka: int, kb: int, a, b):
    """<a ^ b>: wedge on form parts, inner product on Lie parts (real form)."""
    # form axis to front -> (T, m, ...); contract the Lie axis
    def prod(x, y):
        return np.sum(x * y, axis=1)

    a = np.moveaxis(np.asarray(a), 1, 0)
    b = np.moveaxis(np.asarray(b), 1, 0)
    return ext.wedge_coeffs(n, ka, kb, a, b, product=prod, axis=0)


@lru_cache(maxsize=None)
def _pair_positions(n: int):
    """pos[i, j] is the basis index of e^{ij} (i != j) and sgn[i, j] its sign."""
    pos = np.zeros((n, n), dtype=np.intp)
    sgn = np.zeros((n, n))
    for p, (i, j) in enumerate(ext.basis(n, 2)):
        pos[i, j] = pos[j, i] = p
        sgn[i, j], sgn[j, i] = 1.0, -1.0
    return pos, sgn


@lru_cache(maxsize=None)
def double_bracket_table(n: int):
    """Terms (out, p, q, sign) with M_ij = sum_k g_ik w_kj and out = M - M^T
    on the sorted basis: out[o] += sign * g[p] o w[q]."""
    pos, sgn = _pair_positions(n)
    rows = []
    for o, (i, j) in enumerate(ext.basis(n, 2)):
        for k in range(n):
            if k != i and k != j:
                rows.append((o, pos[i, k], pos[k, j], sgn[i, k] * sgn[k, j]))
                rows.append((o, pos[j, k], pos[k, i], -sgn[j, k] * sgn[k, i]))
    a = np.array(rows)
    return a[:, 0].astype(np.intp), a[:, 1].astype(np.intp), a[:, 2].astype(np.intp), a[:, 3]


@lru_cache(maxsize=None)
def dot_table(n: int):
    """Terms (j, p, k, sign): [g . a]_j += sign * [g[p], a[k]] with g_jk = sign g[p]."""
    pos, sgn = _pair_positions(n)
    rows = [(j, pos[j, k], k, sgn[j, k]) for j in range(n) for k in range(n) if k != j]
    a = np.array(rows)
    return a[:, 0].astype(np.intp), a[:, 1].astype(np.intp), a[:, 2].astype(np.intp), a[:, 3]


def _accumulate(out_shape, table, g, w, product, dtype=float):
    o_idx, p_idx, q_idx, sg = table
    out = np.zeros(out_shape, dtype=dtype)
    for o, p, q, s in zip(o_idx, p_idx, q_idx, sg):
        term = product(g[:, p], w[:, q])
        if s > 0:
            out[:, o] += term
        else:
            out[:, o] -= term
    return out


def double_bracket_arr(alg: LieAlgebra | None, n: int, g, w, g_real=False, w_real=False):
    """Bold bracket on 2-forms.

    Real arguments have shape ``(C, ...)`` and ad-valued ones ``(m, C, ...)``.
    With two real inputs this is the matrix commutator.
    """
    g = np.asarray(g)
    w = np.asarray(w)
    C = ext.dim(n, 2)
    gg = g[None] if g_real else g
    ww = w[None] if w_real else w
    if g_real or w_real:
        prod = lambda x, y: x * y
    else:
        prod = alg.bracket
    m = max(gg.shape[0], ww.shape[0])
    trailing = np.broadcast_shapes(gg.shape[2:], ww.shape[2:])
    out = _accumulate((m, C) + trailing, double_bracket_table(n), gg, ww, prod)
    return out[0] if (g_real and w_real) else out


def dot_action_arr(alg: LieAlgebra, n: int, g, a):
    """[g . a]_j = [g_jk, a_k] for an ad-valued 2-form g and 1-form a."""
    g = np.asarray(g)
    a = np.asarray(a)
    trailing = np.broadcast_shapes(g.shape[2:], a.shape[2:])
    return _accumulate((g.shape[0], n) + trailing, dot_table(n), g, a, alg.bracket)


def to_matrix(w, n: int):
    """Dense antisymmetric matrices from 2-form coefficients.

    ``(C,)`` gives ``(n, n)``; ``(m, C, *S)`` gives ``(m, n, n, *S)``.
    """
    w = np.asarray(w)
    real = w.ndim == 1
    if real:
        w = w[None]
    pos, sgn = _pair_positions(n)
    M = w[:, pos] * sgn.reshape((1, n, n) + (1,) * (w.ndim - 2))
    return M[0] if real else M


def from_matrix(M, n: int):
    iu = np.array(ext.basis(n, 2)).T
    M = np.asarray(M)
    if M.ndim == 2:
        return M[iu[0], iu[1]]
    return M[:, iu[0], iu[1]]


def double_bracket_dense(alg: LieAlgebra | None, n: int, g, w):
    """Oracle for :func:`double_bracket_arr` through dense matrices (constant forms only)."""
    G = to_matrix(g, n)
    W = to_matrix(w, n)
    if G.ndim == 2 and W.ndim == 2:
        Mt = G @ W
        return from_matrix(Mt - Mt.T, n)
    if G.ndim == 2:
        Mt = np.einsum("ik,akj->aij", G, W)
    elif W.ndim == 2:
        Mt = np.einsum("aik,kj->aij", G, W)
    else:
        Mt = np.einsum("abc,aik,bkj->cij", alg.c, G, W)
    return from_matrix(Mt - np.transpose(Mt, (0, 2, 1)), n)


def dot_action_dense(alg: LieAlgebra, n: int, g, a):
    G = to_matrix(g, n)
    return np.einsum("abc,ajk,bk->cj", alg.c, G, np.asarray(a))


def norm_sq_arr(w):
    """Pointwise |w|^2: sum of squared sorted-basis coefficients (Lie and form axes)."""
    w = np.asarray(w)
    return np.sum(w * w, axis=(0, 1))


def apply_projector(P, w):
    """Apply a form-space matrix to the form axis (axis 1) of (m, C, ...)."""
    w = np.asarray(w)
    return np.moveaxis(np.tensordot(P, w, axes=([1], [1])), 0, 1)


# --------------------------------------------------------------------------
# constant ad-valued forms


@dataclass(frozen=True, eq=False)
class AdValuedForm:
    """Degree-k form on R^n with Lie-algebra coefficients, shape (m, C(n,k))."""

    n: int
    k: int
    coeffs: np.ndarray = field(repr=False)
    alg: LieAlgebra = field(default_factory=su2, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.alg.dim, ext.dim(self.n, self.k)):
            raise ValueError(
                f"coefficients of shape {c.shape}, expected {(self.alg.dim, ext.dim(self.n, self.k))}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n, k, alg=None):
        alg = alg or su2()
        return cls(n, k, np.zeros((alg.dim, ext.dim(n, k))), alg)

    @classmethod
    def tensor(cls, form: ext.KForm, lie, alg=None) -> "AdValuedForm":
        """form (x) lie for a real KForm and a Lie element (coefficients or basis index)."""
        alg = alg or su2()
        if np.isscalar(lie):
            v = np.zeros(alg.dim)
            v[int(lie)] = 1.0
        else:
            v = np.asarray(lie, dtype=float)
        return cls(form.n, form.k, np.outer(v, form.coeffs), alg)

    @classmethod
    def random(cls, n, k, rng, alg=None):
        alg = alg or su2()
        return cls(n, k, rng.standard_normal((alg.dim, ext.dim(n, k))), alg)

    def _new(self, c, k=None):
        return AdValuedForm(self.n, self.k if k is None else k, c, self.alg)

    def _check(self, other):
        if not isinstance(other, AdValuedForm):
            raise TypeError("expected an AdValuedForm")
        if other.alg != self.alg:
            raise ValueError("Lie algebra mismatch")
        if (other.n, other.k) != (self.n, self.k):
            raise ValueError("form mismatch")

    def __add__(self, other):
        self._check(other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._new(-self.coeffs)

    def __mul__(self, s):
        return self._new(self.coeffs * s)

    __rmul__ = __mul__

    def apply(self, P) -> "AdValuedForm":
        return self._new(self.coeffs @ np.asarray(P).T)

    def component(self, a: int) -> ext.KForm:
        return ext.KForm(self.n, self.k, self.coeffs[a])

    def norm_sq(self) -> float:
        return norm_sq_form(self)

    def allclose(self, other, atol=1e-12) -> bool:
        return np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=0)


def bracket(a, b, alg: LieAlgebra | None = None):
    """Lie bracket of two Lie elements (coefficient vectors)."""
    alg = alg or su2()
    return alg.bracket(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def norm_sq_form(w: AdValuedForm) -> float:
    return float(np.sum(w.coeffs**2))


def bracket_wedge(a: AdValuedForm, b: AdValuedForm) -> AdValuedForm:
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    if a.alg != b.alg:
        raise ValueError("Lie algebra mismatch")
    if a.k + b.k > a.n:
        raise ValueError("degree overflow")
    return AdValuedForm(a.n, a.k + b.k, bracket_wedge_arr(a.alg, a.n, a.k, b.k, a.coeffs, b.coeffs), a.alg)


def pairing_wedge(a: AdValuedForm, b: AdValuedForm) -> ext.KForm:
    """<a ^ b> as a real form."""
    if a.n != b.n or a.k + b.k > a.n:
        raise ValueError("incompatible degrees for the pairing")
    return ext.KForm(a.n, a.k + b.k, pairing_wedge_arr(a.n, a.k, b.k, a.coeffs, b.coeffs))


def double_bracket(g, w):
    """Bold bracket of two 2-forms; each may be a real KForm or an AdValuedForm."""
    for x in (g, w):
        if x.k != 2:
            raise ValueError("double_bracket needs 2-forms")
    if g.n != w.n:
        raise ValueError("dimension mismatch")
    alg = next((x.alg for x in (g, w) if isinstance(x, AdValuedForm)), None)
    out = double_bracket_arr(
        alg, g.n, g.coeffs, w.coeffs,
        g_real=isinstance(g, ext.KForm), w_real=isinstance(w, ext.KForm),
    )
    if alg is None:
        return ext.KForm(g.n, 2, out)
    return AdValuedForm(g.n, 2, out, alg)


def dot_action(g: AdValuedForm, a: AdValuedForm) -> AdValuedForm:
    if g.k != 2 or a.k != 1:
        raise ValueError("dot_action needs a 2-form and a 1-form")
    return AdValuedForm(g.n, 1, dot_action_arr(g.alg, g.n, g.coeffs, a.coeffs), g.alg)


def chern_weil_density(F: AdValuedForm, psi: ext.KForm) -> float:
    """Coefficient of dV in <F ^ F> ^ Psi."""
    top = ext.wedge(pairing_wedge(F, F), psi)
    return float(top.coeffs[0])
