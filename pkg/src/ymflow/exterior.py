"""Exterior algebra over R^n on the lexicographic sorted-index basis.

Forms are stored as coefficient vectors over ``e^{i1...ik}`` with
``i1 < ... < ik``.  Axis labels in the public helpers are 1-based to match
the usual ``e^{123}`` notation; the tables themselves are 0-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

CLUSTER_TOL = 1e-9


# --------------------------------------------------------------------------
# basis bookkeeping


@lru_cache(maxsize=None)
def basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Sorted 0-based multi-indices of degree k, lexicographic order."""
    if k < 0 or k > n:
        return ()
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def index_map(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: pos for pos, idx in enumerate(basis(n, k))}


def dim(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    # bubble count; sequences here are at most length 8
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def multi_index(labels: Iterable[int] | str, n: int | None = None) -> tuple[int, ...]:
    """Convert 1-based labels (``(1, 2, 3)`` or ``"123"``) to a 0-based index.

    Raises ``ValueError`` unless the labels are strictly increasing and in range.
    """
    if isinstance(labels, str):
        labels = [int(c) for c in labels]
    idx = tuple(int(i) - 1 for i in labels)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"multi-index {labels!r} is not strictly increasing")
    if idx and (idx[0] < 0 or (n is not None and idx[-1] >= n)):
        raise ValueError(f"multi-index {labels!r} out of range for n={n}")
    return idx


@lru_cache(maxsize=None)
def wedge_table(n: int, ka: int, kb: int):
    """Arrays ``(ia, ib, iout, sign)`` with e^{I_a} ^ e^{I_b} = sign e^{I_out}."""
    out = index_map(n, ka + kb)
    rows = []
    for ia, I in enumerate(basis(n, ka)):
        for ib, J in enumerate(basis(n, kb)):
            s = perm_sign(I + J)
            if s:
                rows.append((ia, ib, out[tuple(sorted(I + J))], s))
    if not rows:
        z = np.zeros(0, dtype=np.intp)
        return z, z, z, np.zeros(0)
    a = np.array(rows)
    return a[:, 0], a[:, 1], a[:, 2], a[:, 3].astype(float)


@lru_cache(maxsize=None)
def star_table(n: int, k: int):
    """``(target, sign)``: *e^I = sign * e^{target[I]}, orientation e^{1..n}."""
    out = index_map(n, n - k)
    target = np.empty(dim(n, k), dtype=np.intp)
    sign = np.empty(dim(n, k))
    for i, I in enumerate(basis(n, k)):
        J = tuple(j for j in range(n) if j not in I)
        target[i] = out[J]
        sign[i] = perm_sign(I + J)
    return target, sign


@lru_cache(maxsize=None)
def interior_table(n: int, k: int):
    """Per axis v: ``(src, dst, sign)`` with e_v _| e^{src} = sign e^{dst}."""
    out = index_map(n, k - 1)
    tables = []
    for v in range(n):
        src, dst, sgn = [], [], []
        for i, I in enumerate(basis(n, k)):
            if v in I:
                p = I.index(v)
                src.append(i)
                dst.append(out[I[:p] + I[p + 1:]])
                sgn.append((-1) ** p)
        tables.append((np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), np.array(sgn, dtype=float)))
    return tables


def wedge_coeffs(n, ka, kb, a, b, product=None, axis=0):
    """Wedge two coefficient arrays whose component axis is ``axis``.

    ``product(x, y)`` combines the non-form parts (default: multiplication);
    liealg passes the Lie bracket or the trace pairing here.
    """
    ia, ib, io, sg = wedge_table(n, ka, kb)
    a = np.moveaxis(np.asarray(a), axis, 0)
    b = np.moveaxis(np.asarray(b), axis, 0)
    if product is None:
        terms = a[ia] * b[ib]
    else:
        terms = product(a[ia], b[ib])
    terms = terms * sg.reshape((-1,) + (1,) * (terms.ndim - 1))
    out = np.zeros((dim(n, ka + kb),) + terms.shape[1:], dtype=terms.dtype)
    np.add.at(out, io, terms)
    return np.moveaxis(out, 0, axis)


def star_coeffs(n, k, a, axis=0):
    target, sign = star_table(n, k)
    a = np.moveaxis(np.asarray(a), axis, 0)
    out = np.zeros((dim(n, n - k),) + a.shape[1:], dtype=a.dtype)
    out[target] = a * sign.reshape((-1,) + (1,) * (a.ndim - 1))
    return np.moveaxis(out, 0, axis)


# --------------------------------------------------------------------------
# KForm


@dataclass(frozen=True, eq=False)
class KForm:
    """A degree-k alternating form on R^n (real or complex coefficients)."""

    n: int
    k: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if not np.iscomplexobj(c):
            c = c.astype(float)
        if c.shape != (dim(self.n, self.k),):
            raise ValueError(
                f"coefficient array of shape {c.shape} does not match C({self.n},{self.k})"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n: int, k: int) -> "KForm":
        return cls(n, k, np.zeros(dim(n, k)))

    @classmethod
    def from_terms(cls, n: int, terms: dict) -> "KForm":
        """Build from ``{"123": 1.0, (1, 4, 5): -1.0}`` (1-based labels)."""
        k = None
        c = None
        for labels, val in terms.items():
            idx = multi_index(labels, n)
            if k is None:
                k = len(idx)
                c = np.zeros(dim(n, k), dtype=complex if np.iscomplexobj(val) else float)
            elif len(idx) != k:
                raise ValueError("mixed degrees in from_terms")
            c[index_map(n, k)[idx]] += val
        if k is None:
            raise ValueError("from_terms needs at least one term")
        return cls(n, k, c)

    @classmethod
    def basis_vector(cls, n: int, i: int) -> "KForm":
        """The 1-form e^i (1-based)."""
        c = np.zeros(n)
        c[i - 1] = 1.0
        return cls(n, 1, c)

    def _check(self, other: "KForm"):
        if not isinstance(other, KForm):
            return NotImplemented
        if other.n != self.n or other.k != self.k:
            raise ValueError(f"form mismatch: ({self.n},{self.k}) vs ({other.n},{other.k})")

    def __add__(self, other):
        self._check(other)
        return KForm(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return KForm(self.n, self.k, self.coeffs - other.coeffs)

    def __neg__(self):
        return KForm(self.n, self.k, -self.coeffs)

    def __mul__(self, s):
        return KForm(self.n, self.k, self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return KForm(self.n, self.k, self.coeffs / s)

    def __xor__(self, other):
        return wedge(self, other)

    def conj(self) -> "KForm":
        return KForm(self.n, self.k, np.conj(self.coeffs))

    @property
    def real(self) -> "KForm":
        return KForm(self.n, self.k, np.real(self.coeffs))

    @property
    def imag(self) -> "KForm":
        return KForm(self.n, self.k, np.imag(self.coeffs))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def allclose(self, other: "KForm", atol=1e-12) -> bool:
        return self.n == other.n and self.k == other.k and np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=0)

    def terms(self, tol=0.0) -> dict[str, float]:
        """Nonzero coefficients keyed by 1-based label strings."""
        return {
            "".join(str(i + 1) for i in idx): c
            for idx, c in zip(basis(self.n, self.k), self.coeffs)
            if abs(c) > tol
        }

    def __call__(self, *vectors) -> float:
        """Evaluate on k vectors: a(v1, ..., vk) = sum_I a_I det(v[:, I])."""
        if len(vectors) != self.k:
            raise ValueError(f"need {self.k} vectors, got {len(vectors)}")
        if self.k == 0:
            return self.coeffs[0]
        V = np.asarray(vectors, dtype=float)  # (k, n)
        cols = np.array(basis(self.n, self.k))
        minors = np.linalg.det(V[:, cols].transpose(1, 0, 2)) if self.k > 1 else V[0, cols[:, 0]]
        return self.coeffs @ minors

    def __repr__(self):
        body = " + ".join(f"{c:g} e^{lab}" for lab, c in self.terms(1e-15).items()) or "0"
        return f"KForm(n={self.n}, k={self.k}: {body})"


def scalar_form(n: int, value=1.0) -> KForm:
    return KForm(n, 0, np.array([value]))


def wedge(a: KForm, b: KForm) -> KForm:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.k + b.k > a.n:
        raise ValueError(f"degree overflow: {a.k} + {b.k} > {a.n}")
    return KForm(a.n, a.k + b.k, wedge_coeffs(a.n, a.k, b.k, a.coeffs, b.coeffs))


def hodge_star(a: KForm) -> KForm:
    return KForm(a.n, a.n - a.k, star_coeffs(a.n, a.k, a.coeffs))


def interior(v, a: KForm) -> KForm:
    """Contraction v _| a.  ``v`` is a 1-based axis label or a vector in R^n."""
    if a.k == 0:
        return KForm(a.n, 0, np.zeros(1))
    if np.isscalar(v):
        vec = np.zeros(a.n)
        vec[int(v) - 1] = 1.0
    else:
        vec = np.asarray(v, dtype=float)
        if vec.shape != (a.n,):
            raise ValueError(f"vector of shape {vec.shape} for n={a.n}")
    out = np.zeros(dim(a.n, a.k - 1), dtype=a.coeffs.dtype)
    for axis, (src, dst, sgn) in enumerate(interior_table(a.n, a.k)):
        if vec[axis] != 0.0:
            np.add.at(out, dst, vec[axis] * sgn * a.coeffs[src])
    return KForm(a.n, a.k - 1, out)


def inner(a: KForm, b: KForm) -> float:
    a._check(b)
    return float(np.real(np.vdot(a.coeffs, b.coeffs)))


def power(a: KForm, p: int) -> KForm:
    out = scalar_form(a.n)
    for _ in range(p):
        out = wedge(out, a)
    return out


def two_form_matrix(w: KForm) -> np.ndarray:
    """Antisymmetric n x n matrix W with w = sum_{i<j} W_ij e^{ij}."""
    if w.k != 2:
        raise ValueError("expected a 2-form")
    M = np.zeros((w.n, w.n), dtype=w.coeffs.dtype)
    for c, (i, j) in zip(w.coeffs, basis(w.n, 2)):
        M[i, j] = c
        M[j, i] = -c
    return M


def matrix_two_form(M: np.ndarray) -> KForm:
    n = M.shape[0]
    iu = np.array(basis(n, 2)).T
    return KForm(n, 2, M[iu[0], iu[1]])


# --------------------------------------------------------------------------
# calibrations


FAMILIES = ("FourManifold", "Kahler", "QuatKahler", "G2", "Spin7")


@dataclass(frozen=True)
class CalibrationSpec:
    family: str
    k: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unsupported family {self.family!r}; choose from {FAMILIES}")
        if self.family in ("Kahler", "QuatKahler"):
            if self.k is None or self.k < (2 if self.family == "Kahler" else 1):
                raise ValueError(f"{self.family} needs an integer k (got {self.k})")

    @property
    def n(self) -> int:
        return {"FourManifold": 4, "G2": 7, "Spin7": 8}.get(
            self.family, 2 * (self.k or 0) if self.family == "Kahler" else 4 * (self.k or 0)
        )

    @property
    def degree(self) -> int:
        return self.n - 4

    @property
    def label(self) -> str:
        return f"{self.family}({self.k})" if self.k is not None else self.family

    @classmethod
    def parse(cls, text: str) -> "CalibrationSpec":
        """Parse ``"G2"``, ``"Kahler(3)"``, ``"QuatKahler(2)"``, ..."""
        text = text.strip()
        if "(" in text:
            fam, rest = text.split("(", 1)
            return cls(fam.strip(), int(rest.rstrip(")")))
        return cls(text)


def g2_phi() -> KForm:
    return KForm.from_terms(7, {"123": 1, "145": -1, "167": -1, "246": -1, "257": 1, "347": -1, "356": -1})


def kahler_omega(k: int) -> KForm:
    """omega = sum dx_i ^ dy_i on R^{2k} with coordinates (x1, y1, x2, y2, ...)."""
    return KForm.from_terms(2 * k, {(2 * i + 1, 2 * i + 2): 1.0 for i in range(k)})


def holomorphic_volume(k: int) -> tuple[KForm, KForm]:
    """(Re, Im) of Omega = (dx1 + i dy1) ^ ... ^ (dxk + i dyk)."""
    n = 2 * k
    out = scalar_form(n, 1.0 + 0j)
    for i in range(k):
        dz = np.zeros(n, dtype=complex)
        dz[2 * i] = 1.0
        dz[2 * i + 1] = 1j
        out = wedge(out, KForm(n, 1, dz))
    return out.real, out.imag


def complex_structure(k: int) -> np.ndarray:
    """J on R^{2k}: J d/dx_i = d/dy_i, J d/dy_i = -d/dx_i (matrix acting on vectors)."""
    J = np.zeros((2 * k, 2 * k))
    for i in range(k):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


def quaternionic_omegas(k: int) -> tuple[KForm, KForm, KForm]:
    """Self-dual triple on each H-block of R^{4k} (quaternion relations hold)."""
    n = 4 * k
    terms = [{}, {}, {}]
    for b in range(k):
        o = 4 * b
        p = lambda i, j: (o + i + 1, o + j + 1)
        terms[0][p(0, 1)] = 1.0
        terms[0][p(2, 3)] = 1.0
        terms[1][p(0, 2)] = 1.0
        terms[1][p(1, 3)] = -1.0
        terms[2][p(0, 3)] = 1.0
        terms[2][p(1, 2)] = 1.0
    return tuple(KForm.from_terms(n, t) for t in terms)


def kraines_form(k: int) -> KForm:
    w = quaternionic_omegas(k)
    return wedge(w[0], w[0]) + wedge(w[1], w[1]) + wedge(w[2], w[2])


def spin7_from_g2(flip: bool = False) -> KForm:
    """Theta = -phi ^ dtheta + psi on R^7 x R (theta is the 8th axis).

    ``flip`` reverses the circle orientation (theta -> -theta).
    """
    phi = g2_phi()
    psi = hodge_star(phi)
    embed = lambda f: KForm(8, f.k, _embed_coeffs(f, 8))
    dtheta = KForm.basis_vector(8, 8) * (-1.0 if flip else 1.0)
    return -wedge(embed(phi), dtheta) + embed(psi)


def _embed_coeffs(f: KForm, n: int) -> np.ndarray:
    """Coefficients of f pulled back along the projection R^n -> R^{f.n}."""
    out = np.zeros(dim(n, f.k), dtype=f.coeffs.dtype)
    target = index_map(n, f.k)
    for c, idx in zip(f.coeffs, basis(f.n, f.k)):
        out[target[idx]] = c
    return out


def embed(f: KForm, n: int, offset: int = 0) -> KForm:
    """Pull back a form on R^{f.n} to R^n through the coordinates offset+1..offset+f.n."""
    out = np.zeros(dim(n, f.k), dtype=f.coeffs.dtype)
    target = index_map(n, f.k)
    for c, idx in zip(f.coeffs, basis(f.n, f.k)):
        out[target[tuple(i + offset for i in idx)]] = c
    return KForm(n, f.k, out)


def build_calibration(spec: CalibrationSpec) -> KForm:
    fam = spec.family
    if fam == "FourManifold":
        return scalar_form(4)
    if fam == "Kahler":
        return power(kahler_omega(spec.k), spec.k - 2) / math.factorial(spec.k - 2)
    if fam == "QuatKahler":
        return power(kraines_form(spec.k), spec.k - 1) / math.factorial(2 * spec.k - 1)
    if fam == "G2":
        return g2_phi()
    if fam == "Spin7":
        for flip in (False, True):
            theta = spin7_from_g2(flip)
            if has_signature(theta, {-1.0: 21, 3.0: 7}):
                return theta
        raise RuntimeError("no orientation of -phi^dtheta + psi has the Spin(7) spectrum")
    raise ValueError(f"unsupported family {fam!r}")


# --------------------------------------------------------------------------
# the operator *( . ^ Psi) on 2-forms and its eigen-splitting


@lru_cache(maxsize=64)
def _lpsi_cached(n: int, k: int, coeff_bytes: bytes) -> np.ndarray:
    psi = KForm(n, k, np.frombuffer(coeff_bytes))
    N = dim(n, 2)
    L = np.zeros((N, N))
    for j in range(N):
        e = np.zeros(N)
        e[j] = 1.0
        L[:, j] = hodge_star(wedge(KForm(n, 2, e), psi)).coeffs
    return L


def lpsi_matrix(psi: KForm) -> np.ndarray:
    """Matrix of w -> *(w ^ Psi) on Lambda^2 in the sorted basis."""
    if psi.k != psi.n - 4:
        raise ValueError(f"Psi must have degree n-4 = {psi.n - 4}, got {psi.k}")
    return _lpsi_cached(psi.n, psi.k, np.ascontiguousarray(psi.coeffs, dtype=float).tobytes()).copy()


@dataclass(frozen=True, eq=False)
class EigenSplit:
    """Eigenvalues of *( . ^ Psi) with orthogonal projectors, lambda_0 = -1 first.

    ``perp`` lists the components making up k-perp (the part a compatible
    connection's curvature must avoid); empty when k = so(n).
    """

    lambdas: tuple[float, ...]
    projectors: tuple[np.ndarray, ...] = field(repr=False)
    multiplicities: tuple[int, ...]
    perp: tuple[int, ...] = ()
    names: tuple[str, ...] = ()

    def __len__(self):
        return len(self.lambdas)

    def kappas(self, beta: int | None = None) -> np.ndarray:
        """kappa_alpha = (lambda_beta - lambda_alpha) / lambda_beta.

        Default beta is the largest positive eigenvalue.
        """
        if beta is None:
            beta = int(np.argmax(self.lambdas))
        lb = self.lambdas[beta]
        if lb == 0:
            raise ValueError("kappa needs a nonzero eigenvalue lambda_beta")
        return np.array([(lb - la) / lb for la in self.lambdas])

    def kappa_total(self, beta: int | None = None) -> float:
        return float(np.sum(np.abs(self.kappas(beta))))

    @property
    def plus(self) -> np.ndarray:
        """Projector onto F^+ = sum over alpha >= 1 of F^alpha."""
        return sum(self.projectors[1:], np.zeros_like(self.projectors[0]))

    def complement(self, beta: int = 0) -> np.ndarray:
        """Projector onto sum over alpha != beta of F^alpha."""
        return np.eye(self.projectors[0].shape[0]) - self.projectors[beta]

    @property
    def perp_projector(self) -> np.ndarray:
        P = np.zeros_like(self.projectors[0])
        for a in self.perp:
            P = P + self.projectors[a]
        return P

    def spectrum(self) -> dict[float, int]:
        out: dict[float, int] = {}
        for lam, m in zip(self.lambdas, self.multiplicities):
            key = round(lam, 9)
            out[key] = out.get(key, 0) + m
        return out


def _cluster(vals: np.ndarray, tol: float):
    groups = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[groups[-1][0]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eigen_split(L: np.ndarray, tol: float = CLUSTER_TOL) -> EigenSplit:
    L = np.asarray(L, dtype=float)
    if not np.allclose(L, L.T, atol=1e-12):
        raise ValueError("eigen_split needs a symmetric matrix")
    vals, vecs = np.linalg.eigh(L)
    groups = _cluster(vals, tol)
    comps = []
    for g in groups:
        V = vecs[:, g]
        comps.append((float(np.mean(vals[g])), V @ V.T, len(g)))
    minus = [c for c in comps if abs(c[0] + 1.0) <= tol]
    if not minus:
        raise ValueError("no eigenvalue -1: the calibration construction is broken")
    rest = sorted((c for c in comps if abs(c[0] + 1.0) > tol), key=lambda c: -c[0])
    ordered = minus + rest
    return EigenSplit(
        lambdas=tuple(c[0] for c in ordered),
        projectors=tuple(c[1] for c in ordered),
        multiplicities=tuple(c[2] for c in ordered),
    )


def has_signature(psi: KForm, expected: dict[float, int], tol: float = 1e-9) -> bool:
    try:
        split = eigen_split(lpsi_matrix(psi))
    except ValueError:
        return False
    got = split.spectrum()
    if len(got) != len(expected):
        return False
    return all(
        any(abs(lam - e) <= tol and m == em for lam, m in got.items()) for e, em in expected.items()
    )


def two_form_pullback_operator(M: np.ndarray) -> np.ndarray:
    """Matrix of w -> w(M ., M .) on Lambda^2 (sorted basis)."""
    n = M.shape[0]
    B = basis(n, 2)
    N = len(B)
    out = np.zeros((N, N))
    for j, (a, b) in enumerate(B):
        E = np.zeros((n, n))
        E[a, b], E[b, a] = 1.0, -1.0
        out[:, j] = matrix_two_form(M.T @ E @ M).coeffs
    return out


def _range_projector(P: np.ndarray, tol=1e-9) -> np.ndarray:
    vals, vecs = np.linalg.eigh((P + P.T) / 2)
    V = vecs[:, vals > 0.5]
    return V @ V.T


def geometry_split(spec: CalibrationSpec) -> EigenSplit:
    """Eigen-splitting refined by the subalgebra k (the compatibility condition).

    Kahler: components su(k), <omega>, u(k)-perp (eigenvalues -1, k-1, 1).  For
    k = 2 the last two share the eigenvalue 1, so the split uses the complex
    structure rather than the spectrum alone.  QuatKahler: the 1/3 eigenspace
    is k-perp.  Four-manifold, G2 and Spin(7) have k = so(n).
    """
    psi = build_calibration(spec)
    base = eigen_split(lpsi_matrix(psi))
    if spec.family == "Kahler":
        k = spec.k
        n = 2 * k
        Jop = two_form_pullback_operator(complex_structure(k))
        P11 = _range_projector((np.eye(len(Jop)) + Jop) / 2)  # J-invariant = u(k)
        w = kahler_omega(k).coeffs
        Pw = np.outer(w, w) / (w @ w)
        P0 = P11 - Pw
        Pperp = np.eye(len(Jop)) - P11
        return EigenSplit(
            lambdas=(-1.0, float(k - 1), 1.0),
            projectors=(P0, Pw, Pperp),
            multiplicities=((k + 1) * (k - 1), 1, k * (k - 1)),
            perp=(2,),
            names=("su(k)", "omega", "u(k)-perp"),
        )
    if spec.family == "QuatKahler":
        third = [i for i, lam in enumerate(base.lambdas) if abs(lam - 1.0 / 3.0) < 1e-9]
        names = tuple(
            "sp(k)" if abs(lam + 1.0) < 1e-9 else ("k-perp" if i in third else "sp(1)")
            for i, lam in enumerate(base.lambdas)
        )
        return EigenSplit(base.lambdas, base.projectors, base.multiplicities, tuple(third), names)
    return base


def project(omega, split: EigenSplit, alpha: int):
    """Apply P_alpha to a 2-form (KForm) or to any array whose form axis is the last
    axis for KForm-like input, or axis ``-1`` of an AdValuedForm's coeffs."""
    if not 0 <= alpha < len(split):
        raise IndexError(f"component {alpha} out of range (have {len(split)})")
    P = split.projectors[alpha]
    if isinstance(omega, KForm):
        if omega.k != 2:
            raise ValueError("project needs a 2-form")
        return KForm(omega.n, 2, P @ omega.coeffs)
    # ad-valued forms implement their own projection through the same matrices
    return omega.apply(P)


# --------------------------------------------------------------------------
# comass sampling


def random_frames(n: int, p: int, samples: int, seed: int) -> np.ndarray:
    """``samples`` orthonormal p-frames in R^n: Gram-Schmidt (QR) of Gaussian
    vectors from numpy's PCG64 generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((samples, n, p))
    Q, R = np.linalg.qr(G)
    # fix signs so the frame is the Gram-Schmidt output of the Gaussian columns
    d = np.sign(np.diagonal(R, axis1=1, axis2=2))
    d[d == 0] = 1.0
    return np.transpose(Q * d[:, None, :], (0, 2, 1))  # (samples, p, n)


def evaluate_on_frames(psi: KForm, frames: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(psi.coeffs)
    cols = np.array(basis(psi.n, psi.k))[nz].reshape(len(nz), psi.k)
    sub = frames[:, :, cols]  # (S, p, C', p), only the terms present in psi
    minors = np.linalg.det(np.transpose(sub, (0, 2, 1, 3)))
    return minors @ psi.coeffs[nz]


def comass_check(psi: KForm, samples: int = 10_000, seed: int = 0) -> float:
    """Largest value of Psi over ``samples`` random orthonormal frames."""
    if psi.k == 0:
        return float(psi.coeffs[0])
    return float(np.max(evaluate_on_frames(psi, random_frames(psi.n, psi.k, samples, seed))))
