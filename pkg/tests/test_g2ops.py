import numpy as np
import pytest

from ymflow import exterior as ext
from ymflow import g2ops, liealg
from ymflow.liealg import AdValuedForm

KF = ext.KForm.from_terms


def e(i):
    return ext.KForm.basis_vector(7, i)


def test_cross_examples(rng):
    assert g2ops.cross(e(1), e(2)).allclose(e(3))
    a = rng.standard_normal(7)
    assert np.allclose(g2ops.cross(a, a), 0.0)


def test_wedge_contraction_is_twice_cross(rng):
    for _ in range(100):
        a, b = rng.standard_normal((2, 7))
        ab = ext.wedge(ext.KForm(7, 1, a), ext.KForm(7, 1, b))
        assert np.allclose(g2ops.contract2_phi(ab.coeffs), 2 * g2ops.cross(a, b), atol=1e-12)


def test_contract2_examples(rng):
    phi = ext.g2_phi()
    assert g2ops.contract2_phi(ext.interior(e(1).coeffs, phi)).allclose(6 * e(1))
    assert g2ops.contract2_phi(KF(7, {"12": 1})).allclose(2 * e(3))
    ctx = g2ops.default_context()
    w14 = ext.KForm(7, 2, ctx.P14 @ rng.standard_normal(21))
    assert g2ops.contract2_phi(w14).allclose(ext.KForm.zero(7, 1), atol=1e-13)


def test_wedge14_examples(rng):
    want = KF(7, {"12": 1}) - KF(7, {"12": 1, "47": -1, "56": -1}) / 3.0
    assert g2ops.wedge14(e(1), e(2)).allclose(want, atol=1e-14)
    a = ext.KForm(7, 1, rng.standard_normal(7))
    assert g2ops.wedge14(a, a).allclose(ext.KForm.zero(7, 2))
    for _ in range(100):
        a, b = (ext.KForm(7, 1, v) for v in rng.standard_normal((2, 7)))
        assert g2ops.pi7(g2ops.wedge14(a, b)).allclose(ext.KForm.zero(7, 2), atol=1e-13)


def test_projectors_match_eigen_split():
    ctx = g2ops.default_context()
    split = ext.eigen_split(ext.lpsi_matrix(ext.g2_phi()))
    assert np.allclose(ctx.P7, split.projectors[1], atol=1e-13)
    assert np.allclose(ctx.P14, split.projectors[0], atol=1e-13)


def test_product_identities():
    res = g2ops.product_identity_residuals(1000, 0)
    assert set(res) == {"equivariance", "pi7", "pi14", "full"}
    assert max(res.values()) <= 1e-12
    assert g2ops.exact_bracket_instance() <= 1e-12


def test_equal_arguments_give_zero_bracket(rng):
    a = ext.KForm(7, 1, rng.standard_normal(7))
    aphi = g2ops.contract1_phi(a)
    assert liealg.double_bracket(aphi, aphi).allclose(ext.KForm.zero(7, 2), atol=1e-13)


def test_corrupted_phi_breaks_the_exact_instance():
    c = np.array(ext.g2_phi().coeffs)
    c[np.flatnonzero(c)[0]] = 0.5
    ctx = g2ops.G2Context(ext.KForm(7, 3, c))
    assert g2ops.exact_bracket_instance(ctx) > 1e-3


def test_instanton_residual_examples(rng):
    ctx = g2ops.default_context()
    phi = ext.g2_phi()
    F14 = AdValuedForm(7, 2, rng.standard_normal((3, 21)) @ ctx.P14.T)
    assert g2ops.g2_instanton_residual(F14, phi) < 1e-12
    F7 = AdValuedForm(7, 2, rng.standard_normal((3, 21)) @ ctx.P7.T)
    norm = np.sqrt(liealg.norm_sq_form(F7))
    assert g2ops.g2_instanton_residual(F7, phi) == pytest.approx(3 * norm, rel=1e-12)


def test_spin7_self_dual_block_is_not_an_instanton():
    theta = ext.build_calibration(ext.CalibrationSpec("Spin7"))
    # a single coordinate 2-form has a nonzero Lambda^2_7 part
    F = AdValuedForm.tensor(KF(8, {"12": 1}), 0)
    assert g2ops.instanton_residual(F, theta) > 1.0
