import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from kzcocycle import intlinalg
from kzcocycle.flat_surface import (
    GENERATORS,
    Permutation,
    SurfaceError,
    apply_generator,
    automorphism_matrix,
    boundary_matrices,
    build_origami,
    canonical_form,
    canonical_id,
    check_symplectic,
    find_automorphisms,
    homology_model,
    induced_cocycle_matrix,
    l_shape,
    relabel,
    torus,
)


@st.composite
def origamis(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    h = draw(st.permutations(range(n)))
    v = draw(st.permutations(range(n)))
    try:
        return build_origami(h, v)
    except SurfaceError:
        assume(False)


def test_permutation_algebra():
    p = Permutation.from_cycles(5, [(0, 1, 2), (3, 4)])
    assert p.order() == 6
    assert (p * p.inverse()).is_identity()
    assert sorted(len(c) for c in p.cycles()) == [2, 3]
    with pytest.raises(SurfaceError):
        Permutation((0, 0, 1))


def test_l_shape_and_torus():
    o = l_shape()
    assert (o.n, o.genus, o.profile.zero_orders) == (3, 2, (2,))
    assert o.profile.stratum() == "H(2)"
    t = torus()
    assert t.genus == 1 and t.profile.zero_orders == ()


def test_disconnected_rejected():
    with pytest.raises(SurfaceError):
        build_origami([1, 0, 2], [1, 0, 2])


def test_homology_against_smith_normal_form():
    """Tree-cotree homology agrees with the Smith normal form of the boundaries."""
    for o in (l_shape(), build_origami([1, 2, 3, 0], [1, 0, 3, 2]), build_origami([1, 2, 0, 4, 3], [3, 4, 2, 0, 1])):
        d1, d2 = boundary_matrices(o)
        assert not np.any(d1 @ d2)
        dd1, _, _ = intlinalg.smith_normal_form(d1.tolist())
        dd2, _, _ = intlinalg.smith_normal_form(d2.tolist())
        r1, r2 = intlinalg.rank_of_snf(dd1), intlinalg.rank_of_snf(dd2)
        # torsion-free H_1 of rank 2g
        assert all(dd2[i][i] == 1 for i in range(r2))
        assert 2 * o.n - r1 - r2 == 2 * o.genus
        m = homology_model(o)
        assert m.rank == 2 * o.genus
        assert not np.any(d1 @ m.cycle_basis)
        # basis and boundaries together span a saturated lattice of rank dim ker d1
        both = np.concatenate([d2, m.cycle_basis], axis=1)
        dd, _, _ = intlinalg.smith_normal_form(both.tolist())
        rk = intlinalg.rank_of_snf(dd)
        assert rk == r2 + 2 * o.genus
        assert all(dd[i][i] == 1 for i in range(rk))


@given(origamis())
def test_intersection_form_is_unimodular_and_alternating(o):
    m = homology_model(o)
    j = m.intersection
    assert np.array_equal(j, -j.T)
    if m.rank:
        assert abs(intlinalg.determinant(j.tolist())) == 1
    # totals of horizontal and vertical core curves meet once per square
    assert m.tautological[:, 0] @ j @ m.tautological[:, 1] == o.n


@given(origamis(), st.sampled_from(GENERATORS))
def test_generator_matrices_symplectic(o, g):
    src = homology_model(o)
    cm = induced_cocycle_matrix(o, g, src, canonical=True)
    dst = homology_model(canonical_form(apply_generator(o, g)))
    assert check_symplectic(np.asarray(cm.m), src.intersection, dst.intersection)


@given(origamis(max_n=6), st.randoms(use_true_random=False))
def test_canonical_form_is_relabeling_invariant(o, rnd):
    sigma = list(range(o.n))
    rnd.shuffle(sigma)
    assert canonical_id(relabel(o, sigma)) == canonical_id(o)


def test_generator_relations_on_orbit_level():
    """S^4 = 1 and (T S)^3 acts like S^2 on the square-tiled surface."""
    o = l_shape()
    x = o
    for _ in range(4):
        x = apply_generator(x, "S")
    assert canonical_id(x) == canonical_id(o)
    y = apply_generator(apply_generator(o, "T"), "Tinv")
    assert canonical_id(y) == canonical_id(o)


def test_hyperelliptic_involution_of_l_shape():
    o = l_shape()
    rots = [p for p in find_automorphisms(o, sign=-1)]
    assert rots, "the L-shape has a half-turn symmetry"
    m = automorphism_matrix(o, rots[0], sign=-1).m
    assert np.array_equal(np.asarray(m), -np.eye(4, dtype=np.int64))
