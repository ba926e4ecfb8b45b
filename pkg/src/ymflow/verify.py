"""Algebraic identity suite run by ``ymflow algebra-verify``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import exterior as ext
from . import g2ops
from . import liealg

FAMILY_SPECS = {
    "FourManifold": ("FourManifold",),
    "Kahler": tuple(f"Kahler({k})" for k in range(2, 6)),
    "QuatKahler": ("QuatKahler(2)", "QuatKahler(3)"),
    "G2": ("G2",),
    "Spin7": ("Spin7",),
}

SPECTRUM_TOL = 1e-10
COMASS_TOL = 1e-9
CHERN_WEIL_TOL = 1e-10
PRODUCT_TOL = 1e-12


@dataclass
class CheckResult:
    family: str
    label: str
    check: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def expected_spectrum(spec: ext.CalibrationSpec) -> dict[float, int]:
    """Eigenvalues of w -> *(w ^ Psi) on 2-forms with multiplicities."""
    k = spec.k
    if spec.family == "FourManifold":
        return {-1.0: 3, 1.0: 3}
    if spec.family == "Kahler":
        if k == 2:
            return {-1.0: 3, 1.0: 3}
        return {-1.0: k * k - 1, float(k - 1): 1, 1.0: k * (k - 1)}
    if spec.family == "QuatKahler":
        n = 4 * k
        rest = n * (n - 1) // 2 - k * (2 * k + 1) - 3
        return {-1.0: k * (2 * k + 1), (2 * k + 1) / 3.0: 3, 1.0 / 3.0: rest}
    if spec.family == "G2":
        return {-1.0: 14, 2.0: 7}
    if spec.family == "Spin7":
        return {-1.0: 21, 3.0: 7}
    raise ValueError(spec.family)


def spectrum_error(spec: ext.CalibrationSpec) -> float:
    """Max eigenvalue error; infinite if multiplicities or the ordering differ."""
    split = ext.eigen_split(ext.lpsi_matrix(ext.build_calibration(spec)))
    want = expected_spectrum(spec)
    if len(split.lambdas) != len(want) or abs(split.lambdas[0] + 1.0) > SPECTRUM_TOL:
        return float("inf")
    err = 0.0
    for lam, mult in zip(split.lambdas, split.multiplicities):
        match = [e for e in want if abs(e - lam) < 1e-6 and want[e] == mult]
        if not match:
            return float("inf")
        err = max(err, abs(match[0] - lam))
    return err


def chern_weil_pointwise(psi: ext.KForm, samples: int = 100, seed: int = 0, alg=None) -> float:
    """Max |<F ^ F> ^ Psi - sum_a lambda_a |F^a|^2 dV| over random ad-valued F."""
    alg = liealg.su2() if alg is None else alg
    n = psi.n
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((alg.dim, ext.dim(n, 2), samples))
    FF = liealg.pairing_wedge_arr(n, 2, 2, F, F)  # (C(n,4), samples)
    top = ext.wedge_coeffs(n, 4, n - 4, FF, psi.coeffs.reshape((-1, 1)), axis=0)[0]
    split = ext.eigen_split(ext.lpsi_matrix(psi))
    rhs = sum(lam * np.sum(liealg.apply_projector(P, F) ** 2, axis=(0, 1))
              for lam, P in zip(split.lambdas, split.projectors))
    scale = np.maximum(1.0, np.sum(F * F, axis=(0, 1)))
    return float(np.max(np.abs(top - rhs) / scale))


def algebra_suite(families=None, comass_samples: int = 10_000, seed: int = 0) -> list[CheckResult]:
    """Run spectra, comass and Chern-Weil checks per family, plus the G2 product identities."""
    families = list(FAMILY_SPECS) if not families else list(families)
    out: list[CheckResult] = []
    alg = liealg.su2()
    out.append(CheckResult("lie", "su(2)", "jacobi", alg.jacobi_residual(), 1e-14))
    out.append(CheckResult("lie", "su(2)", "ad_invariance", alg.ad_invariance_residual(), 1e-14))
    for fam in families:
        if fam not in FAMILY_SPECS:
            raise ValueError(f"unknown family {fam!r}; choose from {sorted(FAMILY_SPECS)}")
        for label in FAMILY_SPECS[fam]:
            spec = ext.CalibrationSpec.parse(label)
            psi = ext.build_calibration(spec)
            out.append(CheckResult(fam, label, "spectrum", spectrum_error(spec), SPECTRUM_TOL))
            if psi.k > 0:
                comass = ext.comass_check(psi, comass_samples, seed)
                out.append(CheckResult(fam, label, "comass", comass - 1.0, COMASS_TOL))
            out.append(CheckResult(fam, label, "chern_weil", chern_weil_pointwise(psi, 100, seed), CHERN_WEIL_TOL))
        if fam == "G2":
            ctx = g2ops.G2Context(ext.g2_phi())
            res = g2ops.product_identity_residuals(1000, seed, ctx)
            for key, val in res.items():
                out.append(CheckResult(fam, "G2", f"product_{key}", val, PRODUCT_TOL))
            out.append(CheckResult(fam, "G2", "product_exact_instance", g2ops.exact_bracket_instance(ctx), PRODUCT_TOL))
    return out
