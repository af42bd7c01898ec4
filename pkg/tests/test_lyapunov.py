import csv
import math

import numpy as np
import pytest

from kzcocycle.cyclic_cover import build_cover, orientable_specs, parse_spec
from kzcocycle.flat_surface import l_shape, torus
from kzcocycle.lyapunov_engine import (
    BlockSpec,
    GeodesicWord,
    StepTable,
    build_automaton,
    count_positive,
    eigen_block_specs,
    gauss_probability,
    merge_reports,
    oseledets_subspace_check,
    rational_block_specs,
    run_oseledets,
    sample_word,
)
from kzcocycle.spectral_decomp import partition_and_predictions


def cover_automaton(text, deck=False):
    cover = build_cover(parse_spec(text))
    return build_automaton(cover.origami, deck=cover.deck if deck else None)


@pytest.fixture(scope="module")
def m8():
    return cover_automaton("M8(1,1,3,3)", deck=True)


def test_gauss_law_closed_form():
    assert gauss_probability(1) == pytest.approx(math.log2(4 / 3))
    assert sum(gauss_probability(n) for n in range(1, 10**5)) == pytest.approx(1.0, abs=2e-5)


@pytest.mark.parametrize("process", ["gauss-map", "iid"])
def test_digit_frequencies(process):
    w = sample_word(5, 10**6, process)
    assert w.digits.min() >= 1
    assert abs(np.mean(w.digits == 1) - 0.415) < 0.002
    for n in (2, 3, 5):
        assert abs(np.mean(w.digits == n) - gauss_probability(n)) < 0.002


def test_word_determinism():
    a, b = sample_word(9, 5000), sample_word(9, 5000)
    assert np.array_equal(a.digits, b.digits)
    assert not np.array_equal(a.digits, sample_word(10, 5000).digits)


def test_orbit_sizes():
    assert build_automaton(torus()).size == 1
    assert build_automaton(l_shape()).size == 3
    aut = cover_automaton("M4(1,1,1,1)")
    assert all(o.genus == 3 for o in aut.states)


def test_cusp_shortcut_matches_exact_products():
    aut = build_automaton(l_shape())
    table = StepTable(aut)
    for s in range(aut.size):
        for sign in (1, -1):
            for k in (1, 7, 16, 17, 40, 333):
                m, t = table.step(s, sign, k)
                e, te = table.exact_step(s, sign, k)
                assert t == te
                assert np.array_equal(np.asarray(m), e.astype(float))


def test_torus_and_l_shape_values():
    rep = run_oseledets(build_automaton(torus()), sample_word(0, 2 * 10**4))
    assert rep.exponents == pytest.approx([1.0, -1.0], abs=1e-3)
    rep = run_oseledets(build_automaton(l_shape()), sample_word(1, 2 * 10**5))
    assert rep.nonnegative()[1] == pytest.approx(1 / 3, abs=0.01)


def test_m6_blocks():
    aut = cover_automaton("M6(1,1,1,3)", deck=True)
    rep = run_oseledets(aut, sample_word(2, 10**5), blocks=rational_block_specs(6))
    assert rep.blocks["d=2"]["exponents"] == pytest.approx([1.0, -1.0], abs=0.01)
    assert np.max(np.abs(rep.blocks["d=6"]["exponents"])) < 0.01


def test_m8_w2_block(m8):
    rep = run_oseledets(m8, sample_word(3, 10**5), blocks=eigen_block_specs(8), full=False)
    assert rep.blocks["W2"]["exponents"] == pytest.approx([0.5, 0.5, -0.5, -0.5], abs=0.02)


def test_full_spectrum_is_union_of_blocks(m8):
    rep = run_oseledets(m8, sample_word(4, 10**5), blocks=eigen_block_specs(8))
    union = sorted(x for b in rep.blocks.values() for x in b["exponents"])[::-1]
    full = np.array(rep.exponents)
    err = np.array(rep.stderr)
    assert len(union) == len(full)
    assert np.all(np.abs(np.array(union) - full) <= 3 * err + 1e-3)


def test_qr_interval_invariance():
    aut = build_automaton(l_shape())
    word = sample_word(6, 10**5)
    reps = [run_oseledets(aut, word, qr_interval=q) for q in (4, 8, 16)]
    base = np.array(reps[0].exponents)
    for r in reps[1:]:
        assert np.all(np.abs(np.array(r.exponents) - base) <= 3 * np.array(r.stderr) + 1e-9)


def test_symmetry_of_spectrum(m8):
    rep = run_oseledets(m8, sample_word(8, 10**5))
    ex, se = np.array(rep.exponents), np.array(rep.stderr)
    assert np.all(np.abs(ex + ex[::-1]) <= 3 * (se + se[::-1]) + 1e-9)


@pytest.mark.parametrize("spec", [s for N in (4, 6, 8) for s in orientable_specs(N)], ids=str)
def test_i0_block_has_zero_top_exponent(spec):
    data = partition_and_predictions(spec)
    if not data.i0:
        pytest.skip("no I0 part")
    ks = tuple(sorted({k % spec.N for k in data.i0} | {(-k) % spec.N for k in data.i0}))
    cover = build_cover(spec)
    aut = build_automaton(cover.origami, deck=cover.deck)
    if not any(data.dim(k) for k in ks):
        pytest.skip("I0 part is zero-dimensional")
    rep = run_oseledets(aut, sample_word(0, 5 * 10**4), blocks=[BlockSpec("I0", ks)], full=False)
    ex = rep.blocks["I0"]["exponents"]
    if ex:
        assert abs(ex[0]) < 0.01


def test_deck_units_and_block_invariance(m8):
    # the S edges act on the deck group by D -> D^3, exchanging W1 and W3
    assert sorted(set(m8.units.values())) == [1, 3]
    table = StepTable(m8)
    for s in range(m8.size):
        for sign in (1, -1):
            for k in (1, 5, 40):
                m, t = table.exact_step(s, sign, k)
                u = table.unit(s, sign, k)
                assert np.array_equal(m @ np.linalg.matrix_power(m8.deck[s], u), m8.deck[t] @ m)


def test_exponent_count_small_spec():
    rep = run_oseledets(cover_automaton("M8(1,1,3,3)"), sample_word(0, 10**5))
    assert count_positive(rep.nonnegative()) == partition_and_predictions(parse_spec("M8(1,1,3,3)")).predicted_positive_count


def test_report_determinism_and_merge(tmp_path):
    aut = build_automaton(l_shape())
    a = run_oseledets(aut, sample_word(3, 2 * 10**4), trace_path=str(tmp_path / "t.csv"))
    b = run_oseledets(aut, sample_word(3, 2 * 10**4))
    assert a.to_json() == b.to_json()
    m = merge_reports([a, run_oseledets(aut, sample_word(4, 2 * 10**4))])
    assert m.steps == 4 * 10**4
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "block_label", "lambda_index", "running_estimate"]
    assert len(rows) > 10


def test_interval_reduction_reported():
    aut = build_automaton(l_shape())
    digits = np.array([1, 2] * 5000 + [10**6, 10**6] * 10, dtype=np.int64)
    rep = run_oseledets(aut, GeodesicWord(digits, 0), qr_interval=64)
    assert rep.interval_reductions > 0
    assert all(math.isfinite(x) for x in rep.exponents)


def test_oseledets_pairings(m8):
    chk = oseledets_subspace_check(m8, sample_word(12, 10**5))
    assert chk.conclusive
    assert chk.max_cross_pairing < 1e-3
    assert chk.dual_pairing > 1e-2
    t = oseledets_subspace_check(build_automaton(torus()), sample_word(1, 2 * 10**4))
    assert t.dual_pairing > 1e-2
