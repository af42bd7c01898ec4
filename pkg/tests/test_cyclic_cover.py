import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kzcocycle.cyclic_cover import (
    SpecError,
    build_cover,
    genus_by_formula,
    orientable_specs,
    parse_spec,
    validate_spec,
)
from kzcocycle.flat_surface import automorphism_matrix, homology_model
from kzcocycle.hodge_analytic import holomorphic_basis, teichmueller_point
from kzcocycle.spectral_decomp import (
    block_dimension_formula,
    block_projector,
    character_projector,
    divisors,
    eigenspace_dims,
    partition_and_predictions,
    real_primary_decomposition,
)

ALL_SPECS = [s for N in (4, 6, 8, 10, 12) for s in orientable_specs(N)]


def test_spec_parsing_and_validation():
    s = parse_spec(" M6 ( 1, 1,1 ,3 )")
    assert (s.N, s.a) == (6, (1, 1, 1, 3))
    assert str(s) == "M6(1,1,1,3)"
    with pytest.raises(SpecError, match="not 0 mod 4"):
        parse_spec("M4(1,1,1,2)")
    with pytest.raises(SpecError, match="gcd"):
        validate_spec(4, (2, 2, 2, 2))
    with pytest.raises(SpecError):
        parse_spec("M6(1,1,1)")
    with pytest.raises(SpecError, match="quadratic"):
        build_cover(parse_spec("M3(1,1,2,2)"))


def test_enumeration_size():
    assert [len(orientable_specs(N)) for N in (4, 6, 8, 10, 12)] == [3, 4, 9, 13, 19]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_cover_genus_and_fibres(spec):
    cover = build_cover(spec)
    o = cover.origami
    assert o.n == 2 * spec.N
    assert o.genus == genus_by_formula(spec)
    for a, fib in zip(spec.a, cover.branch_fibers):
        assert len(fib) == math.gcd(spec.N, a)
    # cone angle over z_i is 2 pi N / (2 gcd), i.e. zero order N/(2 gcd) - 1 repeated gcd times
    expected = sorted((spec.N // (2 * math.gcd(spec.N, a)) - 1 for a in spec.a
                       for _ in range(math.gcd(spec.N, a))), reverse=True)
    assert list(o.profile.zero_orders) == [x for x in expected if x > 0]


def test_m6_1113_shape():
    cover = build_cover(parse_spec("M6(1,1,1,3)"))
    o = cover.origami
    assert (o.n, o.genus, o.profile.zero_orders) == (12, 4, (2, 2, 2))
    data = partition_and_predictions(cover.spec)
    assert data.i1 == (3,)
    assert data.predicted_positive_count == 1
    assert data.predicted_spectrum(4) == [1, 0, 0, 0]


def test_m8_1133_predictions():
    data = partition_and_predictions(parse_spec("M8(1,1,3,3)"))
    assert data.predicted_spectrum(7) == [1, Fraction(1, 2), Fraction(1, 2), 0, 0, 0, 0]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_eigenspace_dims_match_explicit_basis(spec):
    """t(k) counts against the explicit monomial basis with exact valuations."""
    dims = eigenspace_dims(spec).dims_holo
    basis = holomorphic_basis(spec, teichmueller_point(spec, 1j))
    # dz/w^j has deck eigenvalue zeta^-j, so the zeta^k eigenspace uses j = N - k
    counts = [sum(1 for f in basis if f.k == spec.N - k) for k in range(1, spec.N)]
    assert tuple(counts) == dims


@pytest.mark.parametrize("spec", [s for s in ALL_SPECS if s.N <= 8], ids=str)
def test_deck_blocks(spec):
    cover = build_cover(spec)
    model = homology_model(cover.origami)
    d = np.asarray(automorphism_matrix(cover.origami, cover.deck, model, sign=-1).m)
    # the deck is a half-translation: it negates the tautological plane
    assert np.array_equal(d @ model.tautological, -model.tautological)
    blocks = real_primary_decomposition(d, spec.N, refine=False)
    got = {b.divisor: b.dimension for b in blocks}
    for dv in divisors(spec.N):
        assert got.get(dv, 0) == block_dimension_formula(spec, dv)
    # exact rational idempotents against character sums
    for dv in divisors(spec.N):
        ks = [k for k in range(spec.N) if spec.N // math.gcd(spec.N, k) == dv]
        p_exact = block_projector(d, spec.N, dv)
        p_char = character_projector(d, spec.N, ks)
        assert np.allclose(p_exact, p_char, atol=1e-10)
        assert np.allclose(p_exact @ p_exact, p_exact, atol=1e-10)


@given(st.sampled_from(ALL_SPECS))
def test_genus_is_sum_of_eigenspace_dims(spec):
    assert sum(eigenspace_dims(spec).dims_holo) == genus_by_formula(spec)
