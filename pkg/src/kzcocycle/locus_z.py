"""Square-tiled members of the genus-10 locus Z in H(8, 2^5).

A member is a Z/3 cover of a genus-two origami, totally branched over the six
fixed points of the hyperelliptic involution. Refining every base square into
four puts those points at vertices; the cover is then described by a Z/3
labelling of the refined edges whose monodromy around each vertex is 1 at the
six fixed points and 0 elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import intlinalg
from .flat_surface import (
    Origami,
    Permutation,
    SurfaceError,
    automorphism_matrix,
    build_origami,
    find_automorphisms,
    homology_model,
)
from .spectral_decomp import real_primary_decomposition

Z_PROFILE = (8, 2, 2, 2, 2, 2)
Z_BLOCK_DIMS = {6: 8, 3: 8, 2: 4}
Z_PREDICTED = {
    "total": [1.0, 4 / 9, 4 / 9, 1 / 3, 0, 0, 0, 0, 0, 0],
    "W3": [1.0, 1 / 3],
    "W2": [4 / 9, 4 / 9, 0.0, 0.0],
    "W1": [0.0] * 4,
}


class ZError(ValueError):
    pass


def refine(o: Origami, k: int = 2) -> Origami:
    """Cut every square into k x k; square (i, x, y) gets index k^2 i + k y + x."""
    h, v = o.h.images, o.v.images
    n = o.n
    kk = k * k
    hh = [0] * (n * kk)
    vv = [0] * (n * kk)
    for i in range(n):
        for y in range(k):
            for x in range(k):
                idx = kk * i + k * y + x
                hh[idx] = kk * i + k * y + x + 1 if x + 1 < k else kk * h[i] + k * y
                vv[idx] = kk * i + k * (y + 1) + x if y + 1 < k else kk * v[i] + x
    return build_origami(Permutation(tuple(hh)), Permutation(tuple(vv)))


def vertex_image(o: Origami, p: Permutation, sign: int) -> list[int]:
    """Action of a (half-)translation on vertices, via bottom-left corners."""
    vert = o.vertex_of
    h, v = o.h.images, o.v.images
    nv = max(vert) + 1
    img = [-1] * nv
    for i in range(o.n):
        # a half-turn sends the bottom-left corner of i to the top-right of p(i)
        j = p(i) if sign == 1 else h[v[p(i)]]
        img[vert[i]] = vert[j]
    return img


@dataclass
class MarkedH2Origami:
    base: Origami
    refined: Origami
    involution: Permutation
    weierstrass: tuple[int, ...]  # vertex ids of the refined origami

    def half_integer_points(self) -> list[tuple[int, float, float]]:
        """Fixed points as (base square, x, y) with x, y in {0, 1/2}."""
        out = []
        vert = self.refined.vertex_of
        for w in self.weierstrass:
            i = vert.index(w)
            base, rest = divmod(i, 4)
            y, x = divmod(rest, 2)
            out.append((base, x / 2, y / 2))
        return out


def hyperelliptic_involution(base: Origami) -> MarkedH2Origami:
    if base.profile.zero_orders != (2,):
        raise ZError(f"base must lie in H(2); got profile {base.profile.zero_orders}")
    fine = refine(base, 2)
    found = []
    for p in find_automorphisms(fine, sign=-1):
        if not (p * p).is_identity():
            continue
        img = vertex_image(fine, p, -1)
        fixed = tuple(w for w, x in enumerate(img) if x == w)
        if len(fixed) == 6:
            found.append((p, fixed))
    if len(found) != 1:
        raise ZError(f"not hyperelliptic-compatible: {len(found)} involutions with 6 fixed points")
    p, fixed = found[0]
    return MarkedH2Origami(base, fine, p, fixed)


# --------------------------------------------------------------------------
# Z/3 covers


def lift(o: Origami, cocycle, p: int = 3) -> tuple[list[int], list[int]]:
    """Lifted h, v on p sheets; square (i, s) has index s n + i.

    Moving right from (i, s) crosses the left edge l_h(i) of h(i), moving up
    crosses the bottom edge b_v(i) of v(i); the sheet shifts by the label.
    """
    n = o.n
    h, v = o.h.images, o.v.images
    hh = [0] * (p * n)
    vv = [0] * (p * n)
    for s in range(p):
        for i in range(n):
            hh[s * n + i] = ((s + cocycle[n + h[i]]) % p) * n + h[i]
            vv[s * n + i] = ((s + cocycle[v[i]]) % p) * n + v[i]
    return hh, vv


def monodromy_matrix(o: Origami, p: int = 3) -> list[list[int]]:
    """Linear map (edge labels) -> (sheet shift around each vertex) over F_p."""
    n = o.n
    h, v = o.h.images, o.v.images
    hinv, vinv = o.h_inv.images, o.v_inv.images
    cycles = o.corner_map.cycles()
    vert = o.vertex_of
    rows = [[0] * (2 * n) for _ in range(max(vert) + 1)]
    for cyc in cycles:
        row = rows[vert[cyc[0]]]
        i = cyc[0]
        for _ in range(len(cyc)):
            # corner map c = v h v^-1 h^-1, applied right to left
            row[n + i] -= 1  # h^-1 crosses l_i backwards
            i = hinv[i]
            row[i] -= 1  # v^-1 crosses b_i backwards
            i = vinv[i]
            i = h[i]
            row[n + i] += 1
            i = v[i]
            row[i] += 1
        if i != cyc[0]:
            raise SurfaceError("corner cycle did not close")
    return [[x % p for x in row] for row in rows]


def coboundaries(o: Origami, p: int = 3) -> list[list[int]]:
    """Edge labels of the form f(target) - f(source) for f on squares."""
    n = o.n
    hinv, vinv = o.h_inv.images, o.v_inv.images
    out = []
    for j in range(n):
        c = [0] * (2 * n)
        for i in range(n):
            # l_i joins h^-1(i) to i; b_i joins v^-1(i) to i
            c[n + i] = ((i == j) - (hinv[i] == j)) % p
            c[i] = ((i == j) - (vinv[i] == j)) % p
        out.append(c)
    return out


def _complement(span: list[list[int]], space: list[list[int]], p: int) -> list[list[int]]:
    """Vectors of ``space`` extending a basis of ``span``."""
    basis = []
    _, piv = intlinalg.rref_mod_p(span, p) if span else ([], [])
    rank = len(piv)
    for vec in space:
        trial = span + basis + [vec]
        _, piv = intlinalg.rref_mod_p(trial, p)
        if len(piv) > rank:
            basis.append(vec)
            rank = len(piv)
    return basis


@dataclass
class ZCandidate:
    origami: Origami
    z3_deck: Permutation
    cocycle: tuple[int, ...]
    marked: MarkedH2Origami = field(repr=False, default=None)
    index: int = 0

    def to_json(self) -> dict:
        data = self.origami.to_json()
        data["z3_deck"] = list(self.z3_deck.images)
        data["cocycle"] = list(self.cocycle)
        return data


def cover_classes(marked: MarkedH2Origami, p: int = 3):
    """A particular solution and representatives of the solution space
    modulo coboundaries."""
    fine = marked.refined
    a = monodromy_matrix(fine, p)
    target = [1 if w in marked.weierstrass else 0 for w in range(len(a))]
    c0 = intlinalg.solve_mod_p(a, target, p)
    if c0 is None:
        raise ZError("monodromy system has no solution (construction bug)")
    ker = intlinalg.kernel_mod_p(a, p, 2 * fine.n)
    cob = [c for c in coboundaries(fine, p) if any(c)]
    quotient = _complement(cob, ker, p)
    return c0, quotient


def triple_cover_candidates(marked: MarkedH2Origami, p: int = 3) -> list[ZCandidate]:
    fine = marked.refined
    c0, quotient = cover_classes(marked, p)
    out = []
    k = len(quotient)
    for idx in range(p**k):
        coeffs = [(idx // p**j) % p for j in range(k)]
        c = list(c0)
        for x, q in zip(coeffs, quotient):
            if x:
                c = [(ci + x * qi) % p for ci, qi in zip(c, q)]
        hh, vv = lift(fine, c, p)
        try:
            o = build_origami(Permutation(tuple(hh)), Permutation(tuple(vv)))
        except SurfaceError:
            continue  # disconnected
        n = fine.n
        deck = Permutation(tuple(((i // n + 1) % p) * n + i % n for i in range(p * n)))
        out.append(ZCandidate(o, deck, tuple(c), marked, idx))
    return out


@dataclass
class ZValidation:
    accepted: bool
    diagnostics: dict
    symmetry: Permutation | None = None
    symmetry_matrix: np.ndarray | None = None


def validate_z_member(c: ZCandidate) -> ZValidation:
    o = c.origami
    diag: dict = {"genus": o.genus, "profile": list(o.profile.zero_orders)}
    if tuple(sorted(o.profile.zero_orders, reverse=True)) != Z_PROFILE:
        diag["reason"] = "wrong stratum"
        return ZValidation(False, diag)
    d3 = c.z3_deck
    d3sq = d3 * d3
    model = homology_model(o)
    chosen = None
    for t in find_automorphisms(o, sign=-1):
        if t.order() != 6:
            continue
        t2 = t * t
        if t2 != d3 and t2 != d3sq:
            continue
        m = np.asarray(automorphism_matrix(o, t, model, sign=-1).m)
        if not np.array_equal(np.linalg.matrix_power(m, 6), np.eye(len(m), dtype=np.int64)):
            continue
        chosen = (t, m)
        break
    if chosen is None:
        diag["reason"] = "no Z/6 symmetry"
        return ZValidation(False, diag)
    t, m = chosen
    blocks = real_primary_decomposition(m, 6, refine=False)
    dims = {b.divisor: b.dimension for b in blocks}
    diag["block_dims"] = {f"d={d}": k for d, k in sorted(dims.items())}
    taut = model.tautological
    diag["omega_eigenvalue"] = -1 if np.array_equal(m @ taut, -taut) else None
    if dims != Z_BLOCK_DIMS:
        diag["reason"] = "eigenspace dimensions do not match"
        return ZValidation(False, diag, t, m)
    if diag["omega_eigenvalue"] != -1:
        diag["reason"] = "omega is not anti-invariant"
        return ZValidation(False, diag, t, m)
    diag["reason"] = "accepted"
    return ZValidation(True, diag, t, m)


def find_z_member(base: Origami | None = None) -> tuple[ZCandidate, ZValidation]:
    """First accepted candidate (in enumeration order) over ``base``."""
    from .flat_surface import l_shape

    marked = hyperelliptic_involution(base or l_shape())
    for cand in triple_cover_candidates(marked):
        val = validate_z_member(cand)
        if val.accepted:
            return cand, val
    raise ZError("no candidate passed validation")


def z_spectrum(c: ZCandidate, steps: int, seed: int = 0, qr_interval: int = 8, validation: ZValidation | None = None):
    from .lyapunov_engine import build_automaton, eigen_block_specs, run_oseledets, sample_word

    val = validation or validate_z_member(c)
    if not val.accepted:
        raise ZError(f"candidate rejected: {val.diagnostics.get('reason')}")
    aut = build_automaton(c.origami, deck=val.symmetry, deck_sign=-1)
    blocks = [b for b in eigen_block_specs(6) if b.label != "W0"]
    return run_oseledets(aut, sample_word(seed, steps), qr_interval=qr_interval, blocks=blocks)
