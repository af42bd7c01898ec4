import numpy as np
import pytest

from kzcocycle.flat_surface import l_shape, torus
from kzcocycle.hodge_analytic import second_fundamental_form, z_configuration
from kzcocycle.locus_z import (
    Z_BLOCK_DIMS,
    ZError,
    find_z_member,
    hyperelliptic_involution,
    refine,
    triple_cover_candidates,
)


@pytest.fixture(scope="module")
def member():
    return find_z_member()


def test_refinement():
    fine = refine(l_shape(), 2)
    assert fine.n == 12
    assert fine.genus == 2


def test_weierstrass_points():
    marked = hyperelliptic_involution(l_shape())
    assert len(marked.weierstrass) == 6
    assert marked.involution.order() == 2
    for _, x, y in marked.half_integer_points():
        assert x in (0.0, 0.5) and y in (0.0, 0.5)


def test_base_must_be_genus_two_single_zero():
    with pytest.raises(ZError):
        hyperelliptic_involution(torus())


def test_candidates_are_cyclic_triple_covers():
    cands = triple_cover_candidates(hyperelliptic_involution(l_shape()))
    assert cands
    for c in cands[:10]:
        o, d = c.origami, c.z3_deck
        assert o.n == 36
        assert d.order() == 3
        assert d * o.h == o.h * d and d * o.v == o.v * d


def test_member_shape(member):
    cand, val = member
    o = cand.origami
    assert val.accepted
    assert (o.n, o.genus) == (36, 10)
    assert tuple(sorted(o.profile.zero_orders, reverse=True)) == (8, 2, 2, 2, 2, 2)
    assert val.diagnostics["block_dims"] == {f"d={d}": k for d, k in sorted(Z_BLOCK_DIMS.items())}
    t = val.symmetry
    assert t.order() == 6
    assert t * t in (cand.z3_deck, cand.z3_deck * cand.z3_deck)
    assert np.array_equal(np.linalg.matrix_power(val.symmetry_matrix, 6), np.eye(20, dtype=np.int64))


def test_member_deterministic(member):
    again, _ = find_z_member()
    assert again.index == member[0].index
    assert again.origami.to_json() == member[0].origami.to_json()


def test_z_second_fundamental_form():
    sff = second_fundamental_form(None, z_configuration())
    assert sff.genus == 10
    for k in (2, 3, 4, 5):
        assert sff.frame_k.count(k) == k - 1
    assert sff.rank == 4
    for i, ki in enumerate(sff.frame_k):
        for j, kj in enumerate(sff.frame_k):
            if ki + kj != 6:
                assert abs(sff.B[i, j]) < 1e-8
