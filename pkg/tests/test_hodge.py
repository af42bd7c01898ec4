import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipk

from kzcocycle.cyclic_cover import parse_spec
from kzcocycle.hodge_analytic import (
    HodgeError,
    b_real,
    h_real,
    hodge_star_ops,
    holomorphic_basis,
    kontsevich_check,
    laplacian_rhs,
    phi_k,
    real_rank,
    second_fundamental_form,
    symmetry_zero_pattern,
    takagi,
    teichmueller_point,
)
from kzcocycle.hodge_quadrature import PlaneEngine, QuadratureError, modular_lambda
from kzcocycle.verification import random_symmetric_contraction, random_unitary

M6 = parse_spec("M6(1,1,1,3)")
M8 = parse_spec("M8(1,1,3,3)")

taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.8, 3.0))


def test_lambda_at_i():
    assert modular_lambda(1j) == pytest.approx(0.5, abs=1e-14)


@given(taus)
def test_lambda_modular_relations(tau):
    lam = modular_lambda(tau)
    assert abs(modular_lambda(tau + 2) - lam) < 1e-10
    assert abs(modular_lambda(-1 / tau) - (1 - lam)) < 1e-9


@pytest.mark.parametrize("t", [0.6, 0.9, 1.0, 1.7, 2.5])
def test_lambda_against_elliptic_integrals(t):
    # on the imaginary axis tau = i K(1 - lambda) / K(lambda), parameter m = lambda
    lam = modular_lambda(1j * t)
    assert abs(lam.imag) < 1e-14
    assert ellipk(1 - lam.real) / ellipk(lam.real) == pytest.approx(t, rel=1e-12)


def test_lower_half_plane_rejected():
    with pytest.raises(HodgeError):
        teichmueller_point(M6, -1j)


def test_m6_basis_and_form():
    config = teichmueller_point(M6, 1j)
    assert [f.describe() for f in holomorphic_basis(M6, config)] == [
        "dz/w^3", "dz/w^4", "dz/w^5", "(z-z1) dz/w^5"]
    sff = second_fundamental_form(M6, config)
    assert sff.rank == 1
    assert sff.Lambda == pytest.approx([1, 0, 0, 0], abs=1e-8)
    assert sff.quadrature_error < 1e-8


def test_torus_and_plane_engines_agree():
    config = teichmueller_point(M8, 1j)
    a = second_fundamental_form(M8, config, engine="torus")
    b = second_fundamental_form(M8, config, engine="plane")
    assert np.allclose(a.Lambda, b.Lambda, atol=1e-8)
    assert np.allclose(a.singular_values, b.singular_values, atol=1e-8)
    assert a.Lambda[:3] == pytest.approx([1.0, 0.587052, 0.587052], abs=1e-6)
    mask, bound = symmetry_zero_pattern(a.eigenvalues, a.eigenvalues[0])
    assert np.abs(a.B[mask]).max() < 1e-8
    assert a.rank <= bound


def test_clustered_points_rejected():
    with pytest.raises(QuadratureError):
        PlaneEngine([0.0, 1e-4, 1.0, 2.0 + 1j])


def test_kontsevich_identity_m6():
    rep = kontsevich_check(M6, samples=3, seed=1)
    assert np.abs(rep.traces - 1.0).max() < 1e-5
    assert rep.block_mean("d=2") == pytest.approx(1.0, abs=1e-5)


matrices = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 10))


@given(matrices)
def test_phi_two_formulas_and_bound(args):
    seed, g = args
    rng = np.random.default_rng(seed)
    B = random_symmetric_contraction(rng, g)
    H = B @ B.conj().T
    k = int(rng.integers(1, g + 1))
    sub = sorted(rng.choice(g, size=k, replace=False).tolist())
    a, b = phi_k(B, H, k, sub, random_unitary(rng, g))
    assert abs(a - b) < 1e-10
    assert -1e-12 <= a <= min(2 * k, g) + 1e-12


@given(matrices)
def test_takagi_factorization(args):
    seed, g = args
    B = random_symmetric_contraction(np.random.default_rng(seed), g)
    s, u = takagi(B)
    assert np.allclose(u @ np.diag(s) @ u.T, B, atol=1e-8)
    assert np.allclose(u.conj().T @ u, np.eye(g), atol=1e-8)


@given(matrices)
def test_real_frame_forms(args):
    seed, g = args
    rng = np.random.default_rng(seed)
    B = random_symmetric_contraction(rng, g)
    H = B @ B.conj().T
    ops = hodge_star_ops(g)
    assert np.array_equal(ops.star @ ops.star, -np.eye(2 * g, dtype=np.int64))
    c = rng.standard_normal(2 * g)
    assert laplacian_rhs(B, H, c) >= -1e-12
    hr = h_real(H)
    assert np.allclose(hr, hr.conj().T)
    assert real_rank(b_real(B)) <= 2 * g


def test_star_respects_intersection():
    ops = hodge_star_ops(3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        c1, c2 = rng.integers(-9, 10, size=6), rng.integers(-9, 10, size=6)
        assert int(c1 @ c2) == int(c1 @ ops.symplectic @ (ops.star @ c2))


def test_zero_pattern_bound():
    ev = [np.exp(-2j * math.pi * k / 6) for k in (3, 4, 5, 5)]
    mask, bound = symmetry_zero_pattern(ev, ev[0])
    assert bound == 1
    assert mask.sum() == 15
