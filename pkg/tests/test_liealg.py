import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymflow import exterior as ext
from ymflow import liealg
from ymflow.liealg import AdValuedForm

KF = ext.KForm.from_terms


def T(i):
    v = np.zeros(3)
    v[i] = 1.0
    return v


def test_su2_bracket_examples(alg):
    assert np.allclose(liealg.bracket(T(0), T(1)), T(2))
    assert np.allclose(liealg.bracket(T(0) + T(1), T(1)), T(2))
    a = np.random.default_rng(0).standard_normal(3)
    assert np.allclose(liealg.bracket(a, a), 0)


def test_su2_structure_residuals(alg):
    assert alg.jacobi_residual() < 1e-14
    assert alg.antisymmetry_residual() < 1e-14
    assert alg.ad_invariance_residual() < 1e-14


def test_su2_matrix_round_trip(rng):
    x, y = rng.standard_normal((2, 3))
    X, Y = liealg.su2_to_matrix(x), liealg.su2_to_matrix(y)
    assert np.allclose(liealg.su2_from_matrix(X @ Y - Y @ X), liealg.bracket(x, y))


def test_norm_sq_form_examples():
    assert liealg.norm_sq_form(AdValuedForm.tensor(KF(4, {"12": 1}), 0)) == 1.0
    assert liealg.norm_sq_form(AdValuedForm.tensor(ext.g2_phi(), 0)) == pytest.approx(7.0)
    assert liealg.norm_sq_form(AdValuedForm.zero(7, 2)) == 0.0


def test_double_bracket_examples():
    out = liealg.double_bracket(KF(4, {"12": 1}), KF(4, {"23": 1}))
    assert out.allclose(KF(4, {"13": 1}))
    w = ext.KForm(5, 2, np.random.default_rng(1).standard_normal(10))
    assert liealg.double_bracket(w, w).allclose(ext.KForm.zero(5, 2), atol=1e-14)
    a = AdValuedForm.tensor(KF(4, {"12": 1}), 0)
    b = AdValuedForm.tensor(KF(4, {"12": 1}), 1)
    assert liealg.double_bracket(a, b).allclose(AdValuedForm.zero(4, 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 8))
def test_double_bracket_matches_dense_oracle(seed, n):
    rng = np.random.default_rng(seed)
    alg = liealg.su2()
    g = rng.standard_normal((3, ext.dim(n, 2)))
    w = rng.standard_normal((3, ext.dim(n, 2)))
    fast = liealg.double_bracket_arr(alg, n, g, w)
    dense = liealg.double_bracket_dense(alg, n, g, w)
    assert np.allclose(fast, dense, atol=1e-12)
    a = rng.standard_normal((3, n))
    assert np.allclose(liealg.dot_action_arr(alg, n, g, a), liealg.dot_action_dense(alg, n, g, a), atol=1e-12)


def test_dot_action_examples():
    g = AdValuedForm.tensor(KF(4, {"12": 1}), 0)
    a = AdValuedForm.tensor(ext.KForm.basis_vector(4, 2), 1)
    assert liealg.dot_action(g, a).allclose(AdValuedForm.tensor(ext.KForm.basis_vector(4, 1), 2))
    same = AdValuedForm.tensor(ext.KForm.basis_vector(4, 2), 0)
    assert liealg.dot_action(g, same).allclose(AdValuedForm.zero(4, 1))
    assert liealg.dot_action(g, AdValuedForm.zero(4, 1)).allclose(AdValuedForm.zero(4, 1))


def test_bracket_wedge_examples():
    a = AdValuedForm.tensor(ext.KForm.basis_vector(4, 1), 0)
    b = AdValuedForm.tensor(ext.KForm.basis_vector(4, 2), 1)
    assert liealg.bracket_wedge(a, b).allclose(AdValuedForm.tensor(KF(4, {"12": 1}), 2))
    F = AdValuedForm.tensor(KF(4, {"12": 1}), 0)
    assert liealg.pairing_wedge(F, F).allclose(ext.KForm.zero(4, 4))


def test_chern_weil_density_g2(rng):
    phi = ext.g2_phi()
    split = ext.eigen_split(ext.lpsi_matrix(phi))
    for _ in range(100):
        F = AdValuedForm.random(7, 2, rng)
        rhs = sum(lam * liealg.norm_sq_form(F.apply(P)) for lam, P in zip(split.lambdas, split.projectors))
        assert liealg.chern_weil_density(F, phi) == pytest.approx(rhs, abs=1e-10)


def test_apply_projector_shapes(rng):
    P = np.eye(6)
    w = rng.standard_normal((3, 6, 4, 5))
    assert np.array_equal(liealg.apply_projector(P, w), w)


def test_advalued_shape_validation():
    with pytest.raises(ValueError):
        AdValuedForm(4, 2, np.zeros((3, 5)))
