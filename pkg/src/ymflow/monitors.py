"""Observables along a flow: weighted energy, energy/curvature records,
monotonicity and blowup diagnostics, singular-set candidates, instanton
residuals and the reduction cross-checks.

Thresholds used here (eps0 in particular) are diagnostic choices, not
constants with a proven value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exterior as ext
from . import lattice as lt
from . import liealg
from . import reductions
from .reductions import reduction_pi7_check  # noqa: F401  (public re-export)

DEFAULT_EPS0 = 0.05


# --------------------------------------------------------------------------
# cutoff and distances


def smoothstep_profile(r):
    """1 on [0, 1/2], quintic smoothstep down to 0 on [1/2, 1], 0 beyond."""
    r = np.asarray(r, dtype=float)
    u = np.clip(2.0 * r - 1.0, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


@dataclass(frozen=True)
class CutoffSpec:
    """phi(d(x1, y) / rho1) around ``center`` with radius ``radius``."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cutoff radius must be positive")

    def validate(self, space):
        if len(self.center) != space.n:
            raise ValueError(f"cutoff center has {len(self.center)} coordinates, space has {space.n}")
        half = 0.5 * float(np.min(space.periods))
        if self.radius > half + 1e-12:
            raise ValueError(f"cutoff radius {self.radius} exceeds half the minimal period ({half})")

    def weights(self, space) -> np.ndarray:
        self.validate(space)
        return smoothstep_profile(periodic_distance(space, self.center) / self.radius)


def _nearest_image(delta, periods):
    p = np.asarray(periods, dtype=float).reshape((-1,) + (1,) * (delta.ndim - 1))
    delta = np.mod(delta, p)
    return np.minimum(delta, p - delta)


def periodic_distance(space, x) -> np.ndarray:
    """Nearest-image distance from ``x`` to every site of ``space``."""
    pos = space.positions()
    x = np.asarray(x, dtype=float).reshape((-1,) + (1,) * (pos.ndim - 1))
    d = _nearest_image(pos - x, space.periods)
    return np.sqrt(np.sum(d * d, axis=0))


def _density(F=None, density=None):
    if density is not None:
        return np.asarray(density, dtype=float)
    return lt.pointwise_norm_sq(F)


def _prefactor(n: int, R: float) -> float:
    return R ** (4 - n) / (4.0 * math.pi) ** (n / 2.0)


def weighted_energy(space, F=None, R: float = 0.25, x=None, cutoff: CutoffSpec | None = None,
                    density=None) -> float:
    """R^{4-n} (4 pi)^{-n/2} int |F|^2 exp(-(d(x,y)/2R)^2) phi(y) dV.

    Distances use the nearest periodic image; this is accurate when
    R <= period / 8 or when the cutoff keeps the support inside half a period.
    Pass either the curvature ``F`` or a precomputed ``density`` = |F|^2.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    x = np.zeros(space.n) if x is None else x
    dens = _density(F, density)
    d = periodic_distance(space, x)
    w = np.exp(-(d / (2.0 * R)) ** 2)
    if cutoff is not None:
        w = w * cutoff.weights(space)
    return _prefactor(space.n, R) * space.integrate(dens * w)


def weighted_energy_field(grid: lt.PeriodicGrid, density, R: float, cutoff_radius: float | None = None) -> np.ndarray:
    """Weighted energy at every site, with the cutoff centered at that site.

    Evaluated as a periodic convolution via FFT; equals the site-by-site
    Riemann sum up to rounding.
    """
    if not isinstance(grid, lt.PeriodicGrid):
        raise TypeError("weighted_energy_field needs a full PeriodicGrid")
    origin = np.zeros(grid.n)
    d = periodic_distance(grid, origin)
    k = np.exp(-(d / (2.0 * R)) ** 2)
    if cutoff_radius is not None:
        CutoffSpec(tuple(origin), cutoff_radius).validate(grid)
        k = k * smoothstep_profile(d / cutoff_radius)
    conv = np.fft.irfftn(np.fft.rfftn(density) * np.conj(np.fft.rfftn(k)), s=density.shape,
                          axes=tuple(range(density.ndim)))
    return _prefactor(grid.n, R) * float(np.prod(grid.h)) * conv


def weighted_energy_radial_oracle(n: int, R: float, rho: float, value: float = 1.0) -> float:
    """Independent quadrature of the weighted energy for constant |F|^2 = value.

    Valid when the cutoff support (radius rho) fits inside the torus; the
    integral is then radial: area(S^{n-1}) int r^{n-1} e^{-r^2/4R^2} phi(r/rho) dr.
    """
    from scipy.integrate import quad

    sphere = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    f = lambda r: r ** (n - 1) * math.exp(-(r / (2.0 * R)) ** 2) * float(smoothstep_profile(r / rho))
    inner, _ = quad(f, 0.0, 0.5 * rho, epsabs=0, epsrel=1e-13)
    outer, _ = quad(f, 0.5 * rho, rho, epsabs=0, epsrel=1e-13)
    return _prefactor(n, R) * value * sphere * (inner + outer)


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Probe:
    x: tuple
    R: float

    @property
    def column(self) -> str:
        coords = "_".join(f"{c:g}" for c in self.x)
        return f"phi_R{self.R:g}_x{coords}"


@dataclass
class MonitorRecord:
    t: float
    dt: float
    E: float
    E_alpha: tuple
    K: float
    L: float
    int_K_dt: float
    energy_identity_residual: float
    phi: dict = field(default_factory=dict)

    @staticmethod
    def header(n_alpha: int, probes=()) -> list[str]:
        cols = ["t", "dt", "E"] + [f"E_alpha_{a}" for a in range(n_alpha)]
        cols += ["K", "L", "int_K_dt", "energy_identity_residual"]
        return cols + [p.column for p in probes]

    def row(self, probes=()) -> list[str]:
        vals = [self.t, self.dt, self.E, *self.E_alpha, self.K, self.L, self.int_K_dt, self.energy_identity_residual]
        vals += [self.phi[p.column] for p in probes]
        return [repr(float(v)) for v in vals]


class RunMonitor:
    """Accumulates MonitorRecords from successive flow states.

    ``int_K_dt`` and the energy-identity residual use the trapezoid rule over
    the recorded steps; call :meth:`observe` after every accepted step so the
    time integrals are not undersampled.
    """

    def __init__(self, space, split: ext.EigenSplit | None, beta: int = 0, probes=(), cutoff: CutoffSpec | None = None):
        self.space = space
        self.split = split
        self.beta = beta
        self.probes = tuple(probes)
        self.cutoff = cutoff
        self.records: list[MonitorRecord] = []
        self._E0 = None
        self._diss = 0.0
        self._last = None  # (t, K, D)

    def n_alpha(self) -> int:
        return 0 if self.split is None else len(self.split)

    def observe(self, state, dt: float = 0.0) -> MonitorRecord:
        ev = state.evaluation
        F = ev.F
        rec = lt.energies(self.space, F, self.split, self.beta)
        E = ev.E
        K = rec.K if self.split is not None else rec.L
        t = state.t
        if self._last is None:
            self._E0 = E
            int_K = 0.0
        else:
            t0, K0, D0 = self._last
            int_K = self.records[-1].int_K_dt + 0.5 * (t - t0) * (K0 + K)
            self._diss += 0.5 * (t - t0) * (D0 + ev.dissipation)
        resid = E - self._E0 + 2.0 * self._diss
        resid = abs(resid) / self._E0 if self._E0 else abs(resid)
        dens = lt.pointwise_norm_sq(F)
        phi = {p.column: weighted_energy(self.space, R=p.R, x=p.x, cutoff=self.cutoff, density=dens) for p in self.probes}
        E_alpha = tuple(rec.E_alpha) if self.split is not None else ()
        out = MonitorRecord(t, dt, E, E_alpha, K, rec.L, int_K, resid, phi)
        self.records.append(out)
        self._last = (t, K, ev.dissipation)
        return out

    def header(self) -> list[str]:
        return MonitorRecord.header(self.n_alpha(), self.probes)

    def rows(self):
        return [r.row(self.probes) for r in self.records]


# --------------------------------------------------------------------------
# Hamilton-type monotonicity with v = 1


def hamilton_check(times, E, D, T: float) -> dict:
    """Worst violation of (T-t2)^2 E(t2) + 2 int_{t1}^{t2} (T-s)^2 D ds <= (T-t1)^2 E(t1).

    Here dE/dt = -2 D.  All pairs t1 < t2 of the samples are checked; the
    relative violation divides by (T - t1)^2 E(t1).
    """
    t = np.asarray(times, dtype=float)
    E = np.asarray(E, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.any(t >= T):
        raise ValueError("virtual horizon T must exceed all sample times")
    w = (T - t) ** 2
    g = w * D
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (g[1:] + g[:-1]))])
    Q = w * E + 2.0 * cum
    diff = Q[None, :] - Q[:, None]  # Q(t_j) - Q(t_i)
    upper = np.triu(np.ones_like(diff, dtype=bool), 1)
    if not upper.any():
        return dict(worst=0.0, worst_relative=0.0, pairs=0)
    scale = (w * E)[:, None] * np.ones_like(diff)
    rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), np.where(diff > 0, np.inf, 0.0))
    worst = float(np.max(diff[upper]))
    worst_rel = float(np.max(rel[upper]))
    return dict(worst=max(worst, 0.0), worst_relative=max(worst_rel, 0.0), pairs=int(upper.sum()))


def hamilton_check_reports(reports, T: float, t0: float = 0.0) -> dict:
    """:func:`hamilton_check` on a list of flow StepReports."""
    reports = [r for r in reports if not r.rejected]
    if not reports:
        return dict(worst=0.0, worst_relative=0.0, pairs=0)
    t = [t0]
    E = [reports[0].E_before]
    D = [reports[0].D_before]
    for r in reports:
        t.append(t[-1] + r.dt)
        E.append(r.E_after)
        D.append(r.D_after)
    return hamilton_check(t, E, D, T)


# --------------------------------------------------------------------------
# monotonicity trace


@dataclass(frozen=True)
class MonotonicityProbe:
    x: tuple
    R1: float
    R2: float
    t1: float
    t2: float

    def __post_init__(self):
        if not (0 < self.R2 <= self.R1 <= 1.0):
            raise ValueError("need 0 < R2 <= R1 <= 1")
        if not self.t2 > self.t1:
            raise ValueError("need t2 > t1")
        if self.gamma > 1.0 + 1e-12:
            raise ValueError(f"gamma = {self.gamma:.4g} exceeds 1")

    @property
    def gamma(self) -> float:
        return math.sqrt((self.R1**2 - self.R2**2) / (self.t2 - self.t1))

    def radius(self, t):
        return np.sqrt(np.maximum(self.R1**2 - self.gamma**2 * (np.asarray(t) - self.t1), 0.0))


def monotonicity_trace(space, history, probe: MonotonicityProbe, cutoff: CutoffSpec | None = None,
                       K=None, kappa: float = 1.0) -> dict:
    """Phi(R(t), t) along a run.

    ``history`` is a sequence of (t, density) pairs covering [t1, t2]; ``K``
    optionally gives sup|F^+| at the same times for the companion integral
    kappa (1 - gamma) int K sqrt(Phi) dt.
    """
    ts, vals = [], []
    Ks = [] if K is not None else None
    for i, (t, dens) in enumerate(history):
        if probe.t1 - 1e-12 <= t <= probe.t2 + 1e-12:
            R = float(probe.radius(t))
            ts.append(t)
            vals.append(weighted_energy(space, R=R, x=probe.x, cutoff=cutoff, density=dens))
            if Ks is not None:
                Ks.append(K[i])
    if len(ts) < 2:
        raise ValueError("history does not cover [t1, t2]")
    ts = np.array(ts)
    vals = np.array(vals)
    inc = float(vals[-1] - vals[0])
    out = dict(t=ts, phi=vals, increment=inc,
               relative_increment=inc / vals[0] if vals[0] > 0 else (0.0 if inc <= 0 else math.inf),
               gamma=probe.gamma, covered=(float(ts[0]), float(ts[-1])))
    if Ks is not None:
        g = np.array(Ks) * np.sqrt(np.maximum(vals, 0.0))
        out["companion"] = float(kappa * (1.0 - probe.gamma) * np.sum(0.5 * np.diff(ts) * (g[1:] + g[:-1])))
    return out


# --------------------------------------------------------------------------
# blowup report and singular candidates


def blowup_report(records, aborted: bool = False, reason: str | None = None, kappa: float = 1.0) -> dict:
    """Summary of a run: int K dt, max L and the log-growth of L."""
    if not records:
        return dict(aborted=aborted, reason=reason, records=0)
    last = records[-1]
    L0, L1 = records[0].L, last.L
    if L0 > 0 and L1 > 0:
        log_growth = math.log(L1) - math.log(L0)
    else:
        log_growth = 0.0 if L0 == L1 else (math.inf if L1 > L0 else -math.inf)
    bound = max(1.0, kappa * last.int_K_dt)
    return dict(
        aborted=aborted, reason=reason, records=len(records),
        t_end=last.t, int_K_dt=last.int_K_dt, max_L=max(r.L for r in records),
        log_L_growth=log_growth, growth_bound=bound, growth_ratio=log_growth / bound,
        last_finite=dict(t=last.t, E=last.E, L=last.L, K=last.K),
    )


def singular_candidates(grid: lt.PeriodicGrid, history, R: float, eps0: float = DEFAULT_EPS0,
                        cutoff_radius: float | None = None) -> list[tuple[int, ...]]:
    """Sites where Phi(R, x, t - R^2) >= eps0 at the latest sampled time t.

    ``history`` holds (t, density) pairs; the snapshot closest to t - R^2 is
    used.  Diagnostic only: eps0 has no proven value.
    """
    if not history:
        return []
    times = np.array([t for t, _ in history])
    target = times[-1] - R**2
    i = int(np.argmin(np.abs(times - target)))
    phi = weighted_energy_field(grid, history[i][1], R, cutoff_radius)
    return [tuple(int(v) for v in idx) for idx in np.argwhere(phi >= eps0)]


# --------------------------------------------------------------------------
# instanton residuals


def instanton_residual_field(F, psi: ext.KForm) -> np.ndarray:
    """Pointwise |F + *(Psi ^ F)| for an ad-valued 2-form field (m, C, *S)."""
    L = ext.lpsi_matrix(psi)
    r = np.asarray(F) + liealg.apply_projector(L, F)
    return np.sqrt(np.sum(r * r, axis=(0, 1)))


def calibrated_coordinate_plane(psi: ext.KForm) -> tuple[int, ...]:
    """0-based axes of a coordinate (n-4)-plane on which Psi equals 1."""
    if psi.k == 0:
        return ()
    for c, idx in zip(psi.coeffs, ext.basis(psi.n, psi.k)):
        if abs(c - 1.0) < 1e-12:
            return idx
    raise ValueError("no calibrated coordinate plane among the basis terms")


def asd_basis_orthogonal(psi: ext.KForm) -> list[ext.KForm]:
    """Anti-self-dual 2-forms on the orthogonal complement of a calibrated plane.

    The complement carries the orientation for which e_U ^ e_{U-perp} is the
    volume form.
    """
    U = calibrated_coordinate_plane(psi)
    W = [i for i in range(psi.n) if i not in U]
    sigma = ext.perm_sign(tuple(U) + tuple(W))
    # ASD on R^4 for the standard orientation; SD if the orientation flips
    local = ({"12": 1, "34": -sigma}, {"13": 1, "24": sigma}, {"14": 1, "23": -sigma})
    out = []
    for terms in local:
        f = ext.KForm.from_terms(4, {k: float(v) for k, v in terms.items()})
        coeffs = np.zeros(ext.dim(psi.n, 2))
        idx = ext.index_map(psi.n, 2)
        for c, (i, j) in zip(f.coeffs, ext.basis(4, 2)):
            coeffs[idx[(W[i], W[j])]] += c
        out.append(ext.KForm(psi.n, 2, coeffs))
    return out


def product_instanton_residual(psi: ext.KForm, samples: int = 20, seed: int = 0, alg=None) -> float:
    """Max of |F + *(Psi ^ F)| over random constant ASD-on-U-perp data."""
    alg = liealg.su2() if alg is None else alg
    rng = np.random.default_rng(seed)
    basis = np.array([w.coeffs for w in asd_basis_orthogonal(psi)])  # (3, C)
    coef = rng.standard_normal((alg.dim, 3, samples))
    F = np.einsum("bc,mbs->mcs", basis, coef)
    return float(np.max(instanton_residual_field(F, psi)))


# --------------------------------------------------------------------------
# reductions


def reduction_report(case, seed: int = 0, samples: int = 32, alg=None) -> dict:
    """pi_7 cross-check on random constant-fibre data plus case-specific extras."""
    alg = liealg.su2() if alg is None else alg
    F, DH, H = reductions.random_constant_fiber(case, seed, samples, alg)
    out = dict(case=reductions.get_case(case).name, pi7_residual=reduction_pi7_check(case, alg, F, DH, H))
    if out["case"] == "su4":
        out.update(reductions.su4_linear_structure())
        out["equivalence"] = reductions.su4_equivalence(100, seed, alg)
    return out
