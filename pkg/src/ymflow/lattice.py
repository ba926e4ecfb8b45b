"""Periodic central-difference discretization on flat tori.

Fields keep the Lie axis first, then a form axis, then the site axes:
``A`` has shape ``(m, n, *sites)`` and ``F`` has shape ``(m, C(n,2), *sites)``.
Operators only touch sites through ``space.shift`` / ``space.d``, so the same
code runs on a full :class:`PeriodicGrid` and on a :class:`SitePatch`, which
holds small neighbourhoods of sampled sites of a grid too large to store.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import exterior as ext
from . import liealg


# --------------------------------------------------------------------------
# spaces


class PeriodicGrid:
    """Uniform periodic grid on T^n = prod [0, L_i)."""

    def __init__(self, shape, periods=None):
        shape = tuple(int(s) for s in shape)
        if any(s < 4 for s in shape):
            raise ValueError(f"every axis needs at least 4 sites, got {shape}")
        self.n = len(shape)
        self.shape = shape
        self.periods = np.ones(self.n) if periods is None else np.asarray(periods, dtype=float)
        if self.periods.shape != (self.n,) or np.any(self.periods <= 0):
            raise ValueError("periods must be positive, one per axis")
        self.h = self.periods / np.array(shape)

    site_shape = property(lambda self: self.shape)
    volume = property(lambda self: float(np.prod(self.periods)))
    cell = property(lambda self: float(np.prod(self.h)))

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.shape))

    def _ax(self, f, axis):
        return f.ndim - self.n + axis

    def shift(self, f, axis, s=1):
        """g(x) = f(x + s h e_axis)."""
        return np.roll(f, -s, axis=self._ax(f, axis))

    def d(self, f, axis):
        """Central difference along ``axis``."""
        ax = self._ax(f, axis)
        f = np.moveaxis(f, ax, 0)
        out = np.empty_like(f)
        np.subtract(f[2:], f[:-2], out=out[1:-1])
        np.subtract(f[1], f[-1], out=out[0])
        np.subtract(f[0], f[-2], out=out[-1])
        out *= 1.0 / (2.0 * self.h[axis])
        return np.moveaxis(out, 0, ax)

    def positions(self) -> np.ndarray:
        """Physical coordinates, shape (n, *shape)."""
        axes = [np.arange(N) * h for N, h in zip(self.shape, self.h)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def integrate(self, density) -> float:
        """Riemann sum with weight prod(h) over the trailing site axes."""
        density = np.asarray(density)
        return float(np.sum(density) * self.cell)

    def sup(self, density) -> float:
        return float(np.max(density))

    def mean(self, density) -> float:
        return float(np.mean(density))

    def restrict(self, f):
        """Values at all sites (identity on a full grid)."""
        return f

    def __repr__(self):
        return f"PeriodicGrid(shape={self.shape}, periods={tuple(self.periods)})"


def l1_ball(n: int, radius: int) -> np.ndarray:
    """Integer offsets with |o|_1 <= radius, the origin first."""
    pts = [o for o in itertools.product(range(-radius, radius + 1), repeat=n) if sum(map(abs, o)) <= radius]
    pts.sort(key=lambda o: (sum(map(abs, o)), o))
    return np.array(pts, dtype=np.int64)


class SitePatch:
    """Sampled neighbourhoods of a periodic grid.

    Each of the M centers carries the l1-ball of offsets of the given radius
    plus one dummy column (index P) holding NaN.  Shifts are table lookups on
    the last axis; a shift leaving the ball lands on the dummy column, so any
    value that depends on data outside the ball becomes NaN instead of silently
    wrong.  A stencil of total reach r is exact at offsets with |o|_1 <= radius - r.
    """

    def __init__(self, grid: PeriodicGrid, centers, radius: int = 3):
        self.grid = grid
        self.n = grid.n
        self.h = grid.h
        self.periods = grid.periods
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.int64))
        if self.centers.shape[1] != self.n:
            raise ValueError("centers must be (M, n) site indices")
        self.radius = int(radius)
        self.offsets = l1_ball(self.n, self.radius)
        P = len(self.offsets)
        lookup = {tuple(o): i for i, o in enumerate(self.offsets)}
        self._tables = {}
        for axis in range(self.n):
            for s in (-2, -1, 1, 2):
                tab = np.full(P + 1, P, dtype=np.intp)
                for i, o in enumerate(self.offsets):
                    q = list(o)
                    q[axis] += s
                    tab[i] = lookup.get(tuple(q), P)
                self._tables[axis, s] = tab

    @property
    def site_shape(self):
        return (len(self.centers), len(self.offsets) + 1)

    volume = property(lambda self: self.grid.volume)
    cell = property(lambda self: self.grid.cell)

    def shift(self, f, axis, s=1):
        return np.take(f, self._tables[axis, s], axis=-1)

    def d(self, f, axis):
        return (self.shift(f, axis, 1) - self.shift(f, axis, -1)) / (2.0 * self.h[axis])

    def site_indices(self) -> np.ndarray:
        """Grid indices (M, P, n) of every patch point (periodically wrapped)."""
        idx = self.centers[:, None, :] + self.offsets[None, :, :]
        return np.mod(idx, np.array(self.grid.shape))

    def positions(self) -> np.ndarray:
        """Physical coordinates (n, M, P+1); the dummy column repeats the center."""
        idx = self.site_indices()
        pos = np.concatenate([idx, idx[:, :1]], axis=1) * self.h
        return np.moveaxis(pos, -1, 0)

    def mask_dummy(self, f):
        f = np.array(f, dtype=float, copy=True)
        f[..., -1] = np.nan
        return f

    def restrict(self, f):
        """Values at the centers, shape (..., M)."""
        return f[..., 0]

    def integrate(self, density) -> float:
        """Monte-Carlo style estimate: mean over centers times the volume."""
        return float(np.mean(self.restrict(np.asarray(density))) * self.volume)

    def sup(self, density) -> float:
        return float(np.max(self.restrict(np.asarray(density))))

    def mean(self, density) -> float:
        return float(np.mean(self.restrict(np.asarray(density))))

    def __repr__(self):
        return f"SitePatch({self.grid!r}, M={len(self.centers)}, radius={self.radius})"


def shared_sample_centers(coarse: PeriodicGrid, count: int, seed: int) -> np.ndarray:
    """Distinct random site indices of ``coarse`` (sorted, deterministic)."""
    rng = np.random.default_rng(seed)
    flat = rng.choice(coarse.num_sites, size=min(count, coarse.num_sites), replace=False)
    flat.sort()
    return np.stack(np.unravel_index(flat, coarse.shape), axis=1)


# --------------------------------------------------------------------------
# smooth random data


def band_modes(n: int, k_max: float) -> np.ndarray:
    """Integer wavevectors with |k|_2 <= k_max, one of each +-k pair, k=0 first."""
    r = int(math.floor(k_max))
    modes = []
    for k in itertools.product(range(-r, r + 1), repeat=n):
        if sum(c * c for c in k) > k_max**2 + 1e-12:
            continue
        nz = [c for c in k if c != 0]
        if nz and nz[0] < 0:
            continue
        modes.append(k)
    modes.sort(key=lambda k: (sum(c * c for c in k), tuple(-c for c in k)))
    return np.array(modes, dtype=float).reshape(len(modes), n)


@dataclass(frozen=True)
class BandLimitedField:
    """f(x) = sum_k a_k cos(2 pi k.x/L) + b_k sin(2 pi k.x/L) with values of shape ``value_shape``.

    The same coefficients give the same continuum field at any resolution.
    """

    n: int
    periods: np.ndarray
    modes: np.ndarray
    cos_coef: np.ndarray  # (K, *value_shape)
    sin_coef: np.ndarray

    @classmethod
    def random(cls, n, value_shape, seed, k_max=2.0, amplitude=1.0, periods=None, structure="generic"):
        """Gaussian coefficients rescaled so that sum_k |(a_k, b_k)| = amplitude.

        The norm is taken over the Lie axis (axis 0 of ``value_shape``) and
        maximized over the remaining axes, so each component's pointwise Lie
        norm is bounded by ``amplitude``.

        ``structure="rank1"`` gives every mode the form Re(v (x) u e^{ik.x})
        with a single complex Lie vector u, so brackets of a mode with itself
        produce no second harmonic.
        """
        periods = np.ones(n) if periods is None else np.asarray(periods, dtype=float)
        modes = band_modes(n, k_max)
        rng = np.random.default_rng(seed)
        shape = (len(modes),) + tuple(value_shape)
        if structure == "generic":
            a = rng.standard_normal(shape)
            b = rng.standard_normal(shape)
        elif structure == "rank1":
            m, rest = value_shape[0], tuple(value_shape[1:])
            u = rng.standard_normal((len(modes), m)) + 1j * rng.standard_normal((len(modes), m))
            v = rng.standard_normal((len(modes),) + rest) + 1j * rng.standard_normal((len(modes),) + rest)
            u[0] = u[0].real
            v[0] = v[0].real
            c = np.einsum("ka,k...->ka...", u, v)
            a, b = c.real, -c.imag
        else:
            raise ValueError(f"unknown structure {structure!r}")
        b[0] = 0.0  # k = 0 has no sine part
        bound = np.sum(np.sqrt(np.sum(a**2 + b**2, axis=1)), axis=0)
        scale = amplitude / np.max(bound) if np.max(bound) > 0 else 0.0
        return cls(n, periods, modes, a * scale, b * scale)

    @property
    def sup_bound(self) -> float:
        c = np.sqrt(np.sum(self.cos_coef**2 + self.sin_coef**2, axis=1))
        return float(np.max(np.sum(c, axis=0)))

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        """Evaluate at positions (n, *S) -> (*value_shape, *S)."""
        S = positions.shape[1:]
        vshape = self.cos_coef.shape[1:]
        out = np.zeros(vshape + S)
        flat_out = out.reshape((-1,) + S)
        ca = self.cos_coef.reshape(len(self.modes), -1)
        sa = self.sin_coef.reshape(len(self.modes), -1)
        scaled = positions * (2.0 * np.pi / self.periods).reshape((-1,) + (1,) * len(S))
        for k, a, b in zip(self.modes, ca, sa):
            phase = np.tensordot(k, scaled, axes=(0, 0))
            c = np.cos(phase)
            flat_out += a.reshape((-1,) + (1,) * len(S)) * c
            if np.any(b):
                s = np.sin(phase)
                flat_out += b.reshape((-1,) + (1,) * len(S)) * s
        return out

    def derivative(self, axis: int) -> "BandLimitedField":
        """Exact partial derivative along ``axis``."""
        w = 2.0 * np.pi * self.modes[:, axis] / self.periods[axis]
        w = w.reshape((-1,) + (1,) * (self.cos_coef.ndim - 1))
        return BandLimitedField(self.n, self.periods, self.modes, w * self.sin_coef, -w * self.cos_coef)


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class GaugeField:
    """Connection coefficients A (m, n, *sites) and optional Higgs fields (p, m, *sites)."""

    space: object
    A: np.ndarray
    higgs: np.ndarray | None = None
    alg: liealg.LieAlgebra = field(default_factory=liealg.su2)

    def __post_init__(self):
        n = self.space.n
        want = (self.alg.dim, n) + tuple(self.space.site_shape)
        if self.A.shape != want:
            raise ValueError(f"A has shape {self.A.shape}, expected {want}")
        if self.higgs is not None:
            if self.higgs.ndim != len(want) or self.higgs.shape[1:] != (self.alg.dim,) + tuple(self.space.site_shape):
                raise ValueError(f"Higgs fields have shape {self.higgs.shape}")

    @property
    def n(self) -> int:
        return self.space.n

    def with_fields(self, A, higgs=None) -> "GaugeField":
        return replace(self, A=A, higgs=higgs if higgs is not None else self.higgs)

    @classmethod
    def zero(cls, space, n_higgs=0, alg=None):
        alg = alg or liealg.su2()
        S = tuple(space.site_shape)
        A = np.zeros((alg.dim, space.n) + S)
        H = np.zeros((n_higgs, alg.dim) + S) if n_higgs else None
        return cls(space, A, H, alg)

    @classmethod
    def from_functions(cls, space, A_fn, higgs_fn=None, alg=None):
        """Sample callables f(positions) -> arrays on the space's sites."""
        alg = alg or liealg.su2()
        pos = space.positions()
        A = np.asarray(A_fn(pos), dtype=float)
        H = None if higgs_fn is None else np.asarray(higgs_fn(pos), dtype=float)
        if isinstance(space, SitePatch):
            A = space.mask_dummy(A)
            H = None if H is None else space.mask_dummy(H)
        return cls(space, A, H, alg)


def random_gauge_field(space, seed: int, k_max: float = 2.0, amplitude: float = 0.5, n_higgs: int = 0,
                       higgs_amplitude: float | None = None, alg=None, structure="generic") -> GaugeField:
    """Band-limited random connection (and Higgs fields) evaluated on ``space``."""
    alg = alg or liealg.su2()
    n = space.n
    Af = BandLimitedField.random(n, (alg.dim, n), seed, k_max, amplitude, space.periods, structure)
    Hf = None
    if n_higgs:
        amp = amplitude if higgs_amplitude is None else higgs_amplitude
        Hf = BandLimitedField.random(n, (alg.dim, n_higgs), seed + 7919, k_max, amp, space.periods, structure)
    higgs_fn = None if Hf is None else (lambda p: np.moveaxis(Hf(p), 1, 0))
    return GaugeField.from_functions(space, Af, higgs_fn, alg)


def kahler_slice_field(space, seed: int, k_max: float = 1.0, amplitude: float = 0.5, alg=None,
                       plane: int = 0) -> GaugeField:
    """Connection with only A_{x_j}, A_{y_j} nonzero, depending only on (x_j, y_j).

    Its curvature is a multiple of dx_j ^ dy_j, which is of type (1,1) for the
    standard complex structure; the flow keeps this form exactly.
    """
    alg = alg or liealg.su2()
    n = space.n
    if n % 2 or not 0 <= plane < n // 2:
        raise ValueError("plane must index a complex coordinate pair of an even-dimensional torus")
    ax = (2 * plane, 2 * plane + 1)
    periods = np.asarray(space.periods, dtype=float)
    f2 = BandLimitedField.random(2, (alg.dim, 2), seed, k_max, amplitude, periods[list(ax)])

    def A_fn(pos):
        S = pos.shape[1:]
        out = np.zeros((alg.dim, n) + S)
        out[:, list(ax)] = f2(pos[list(ax)])
        return out

    return GaugeField.from_functions(space, A_fn, None, alg)


def abelian_mode_field(space, c: float = 1.0, lie: int = 0, comp: int = 0, axis: int = 1,
                       n_higgs: int = 0, alg=None) -> GaugeField:
    """A_comp = c T_lie sin(2 pi x_axis / L_axis), all else zero."""
    alg = alg or liealg.su2()
    L = float(np.asarray(space.periods)[axis])

    def A_fn(pos):
        out = np.zeros((alg.dim, space.n) + pos.shape[1:])
        out[lie, comp] = c * np.sin(2.0 * np.pi * pos[axis] / L)
        return out

    higgs_fn = None
    if n_higgs:
        higgs_fn = lambda pos: np.zeros((n_higgs, alg.dim) + pos.shape[1:])
    return GaugeField.from_functions(space, A_fn, higgs_fn, alg)


# --------------------------------------------------------------------------
# covariant stencils


def cov_d(space, alg, A, w, k):
    """nabla_k w = d_k w + [A_k, w] for ad-valued w with Lie axis first."""
    Ak = A[:, k]
    if w.ndim > Ak.ndim:
        Ak = Ak.reshape(Ak.shape[:1] + (1,) * (w.ndim - Ak.ndim) + Ak.shape[1:])
    return space.d(w, k) + alg.bracket(Ak, w)


def curvature(space, alg, A):
    """F_ij = d_i A_j - d_j A_i + [A_i, A_j] on the sorted basis."""
    n = space.n
    pairs = ext.basis(n, 2)
    F = np.empty((A.shape[0], len(pairs)) + A.shape[2:])
    for p, (i, j) in enumerate(pairs):
        F[:, p] = space.d(A[:, j], i) - space.d(A[:, i], j) + alg.bracket(A[:, i], A[:, j])
    return F


def d_star(space, alg, A, F):
    """(D*F)_j = -sum_i (d_i F_ij + [A_i, F_ij])."""
    n = space.n
    pos, sgn = liealg._pair_positions(n)
    out = np.zeros((A.shape[0], n) + A.shape[2:])
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            Fij = F[:, pos[i, j]] * sgn[i, j]
            out[:, j] -= space.d(Fij, i) + alg.bracket(A[:, i], Fij)
    return out


def d_star_1form(space, alg, A, a):
    """D*a = -sum_i nabla_i a_i."""
    return -sum(cov_d(space, alg, A, a[:, i], i) for i in range(space.n))


def ext_d0(space, alg, A, phi):
    """D phi as an ad-valued 1-form (m, n, ...)."""
    return np.stack([cov_d(space, alg, A, phi, i) for i in range(space.n)], axis=1)


def ext_d1(space, alg, A, a):
    """(D a)_ij = nabla_i a_j - nabla_j a_i."""
    pairs = ext.basis(space.n, 2)
    out = np.empty((a.shape[0], len(pairs)) + a.shape[2:])
    for p, (i, j) in enumerate(pairs):
        out[:, p] = cov_d(space, alg, A, a[:, j], i) - cov_d(space, alg, A, a[:, i], j)
    return out


def ext_d2(space, alg, A, F):
    """(D F)_ijk = nabla_i F_jk - nabla_j F_ik + nabla_k F_ij (Bianchi residual for F = F_A)."""
    idx2 = ext.index_map(space.n, 2)
    triples = ext.basis(space.n, 3)
    out = np.empty((F.shape[0], len(triples)) + F.shape[2:])
    for p, (i, j, k) in enumerate(triples):
        out[:, p] = (
            cov_d(space, alg, A, F[:, idx2[j, k]], i)
            - cov_d(space, alg, A, F[:, idx2[i, k]], j)
            + cov_d(space, alg, A, F[:, idx2[i, j]], k)
        )
    return out


def connection_laplacian(space, alg, A, w):
    """nabla* nabla w = -sum_k nabla_k nabla_k w, componentwise on the form axis."""
    out = np.zeros_like(w)
    for k in range(space.n):
        out -= cov_d(space, alg, A, cov_d(space, alg, A, w, k), k)
    return out


def hodge_laplacian_on_F(space, alg, A, F=None):
    """D (D* F), which equals -dF/dt along the flow."""
    F = curvature(space, alg, A) if F is None else F
    return ext_d1(space, alg, A, d_star(space, alg, A, F))


def higgs_laplacian(space, alg, A, phi):
    """D* D phi = -sum_i nabla_i nabla_i phi."""
    return connection_laplacian(space, alg, A, phi)


# --------------------------------------------------------------------------
# pointwise quantities


def pointwise_norm_sq(w):
    """|w|^2 per site (sum over Lie and form axes)."""
    return np.sum(w * w, axis=(0, 1))


def project_field(P, w):
    return liealg.apply_projector(P, w)


def stress_energy(space, F, F_alpha=None):
    """S_ij = sum_k <Fa_ik, F_jk> - 1/4 delta_ij sum_km <Fa_km, Fa_km>.

    With ``F_alpha`` given this is the component tensor S~^alpha (first slot and
    trace term use F^alpha); otherwise the full stress-energy tensor.
    Returns (n, n, *sites).
    """
    n = space.n
    Fa = F if F_alpha is None else F_alpha
    MF = liealg.to_matrix(F, n)
    Ma = MF if F_alpha is None else liealg.to_matrix(Fa, n)
    S = np.einsum("aik...,ajk...->ij...", Ma, MF)
    tr = 0.5 * np.sum(Fa * Fa, axis=(0, 1))  # 1/4 sum_km = 1/2 sum_{k<m}
    for i in range(n):
        S[i, i] -= tr
    return S


def stress_components(space, F, split):
    return [stress_energy(space, F, project_field(P, F)) for P in split.projectors]


def divergence(space, S, first_index=True):
    """sum_i d_i S_ij (first_index) or sum_k d_k S_jk -> (n, *sites)."""
    n = space.n
    if first_index:
        return sum(space.d(S[i], i) for i in range(n))
    return sum(space.d(S[:, k], k) for k in range(n))


def divergence_residual(space, F, split, beta=None):
    """d_i S_ij - sum_alpha kappa_alpha d_k S~^alpha_kj, per site (n, *sites)."""
    kap = split.kappas(beta)
    lhs = divergence(space, stress_energy(space, F))
    rhs = sum(k * divergence(space, S) for k, S in zip(kap, stress_components(space, F, split)) if k != 0)
    return lhs - rhs, lhs


# --------------------------------------------------------------------------
# gauge transformations (su(2) in the 2x2 representation)


def su2_exp(x):
    """exp of Lie coefficients (3, ...) -> SU(2) matrices (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    theta = 0.5 * np.sqrt(np.sum(x * x, axis=0))
    X = liealg.su2_to_matrix(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(theta > 1e-12, np.sin(theta) / np.where(theta > 0, theta, 1.0), 1.0)
    return np.cos(theta)[..., None, None] * np.eye(2) + sinc[..., None, None] * X


def gauge_transform(space, A, g):
    """A' = g A g^-1 - (d g) g^-1 with g an SU(2)-valued site field (*sites, 2, 2).

    The derivative uses the same central stencil as every other operator, so
    F transforms by conjugation up to O(h^2).
    """
    n = space.n
    ginv = np.conj(np.swapaxes(g, -1, -2))
    out = np.empty_like(A)
    for i in range(n):
        Ai = liealg.su2_to_matrix(A[:, i])
        dg = np.moveaxis(space.d(np.moveaxis(g, (-2, -1), (0, 1)), i), (0, 1), (-2, -1))
        out[:, i] = liealg.su2_from_matrix(g @ Ai @ ginv - dg @ ginv)
    return out


def adjoint_action(g, w):
    """g w g^-1 on Lie coefficients w (3, ...) with g (..., 2, 2)."""
    ginv = np.conj(np.swapaxes(g, -1, -2))
    return liealg.su2_from_matrix(g @ liealg.su2_to_matrix(w) @ ginv)


# --------------------------------------------------------------------------
# energies


@dataclass
class EnergyRecord:
    E: float
    E_alpha: list
    L: float  # sup |F|
    K: float  # sup |F^+|


def energies(space, F, split=None, beta: int = 0) -> EnergyRecord:
    """E = 1/2 int |F|^2, per-component ||F^alpha||^2, sup |F| and sup |F^+|.

    F^+ is everything except the component ``beta``.
    """
    dens = pointwise_norm_sq(F)
    E = 0.5 * space.integrate(dens)
    L = math.sqrt(max(space.sup(dens), 0.0))
    if split is None:
        return EnergyRecord(E, [], L, 0.0)
    E_alpha = []
    for P in split.projectors:
        E_alpha.append(space.integrate(pointwise_norm_sq(project_field(P, F))))
    Fp = project_field(split.complement(beta), F)
    K = math.sqrt(max(space.sup(pointwise_norm_sq(Fp)), 0.0))
    return EnergyRecord(E, E_alpha, L, K)


def chern_weil(space, F, psi: ext.KForm) -> float:
    """Riemann sum of the top form <F ^ F> ^ Psi."""
    L = ext.lpsi_matrix(psi)
    # <F ^ F> ^ Psi = <F, *(F ^ Psi)> dV, pointwise
    LF = liealg.apply_projector(L, F)
    return space.integrate(np.sum(F * LF, axis=(0, 1)))


def chern_weil_direct(space, F, psi: ext.KForm) -> float:
    """Same integral assembled through the wedge tables (oracle for chern_weil)."""
    n = space.n
    ff = liealg.pairing_wedge_arr(n, 2, 2, F, F)
    top = ext.wedge_coeffs(n, 4, psi.k, ff, psi.coeffs.reshape((-1,) + (1,) * (ff.ndim - 1)))
    return space.integrate(top[0])
