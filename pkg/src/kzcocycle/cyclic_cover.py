"""Square-tiled cyclic covers M_N(a1, a2, a3, a4) of the pillowcase.

The pillowcase is two unit squares, front F and back K, glued along their
boundary. Its corners z1..z4 sit at the bottom-left, bottom-right, top-right
and top-left of F. The cover has squares (s, b) with sheet s in Z/N and
b in {F, K}; crossing a pillowcase edge from F to K raises the sheet by the
edge label, crossing back lowers it. The labels are chosen so that a small
loop around z_i shifts the sheet by a_i.

With N even and all a_i odd the flat structure of the pillowcase lifts to a
translation structure: sheets of opposite parity carry opposite orientations
of the square, so the sheet shift s -> s + 1 is a rotation by pi.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce

from .flat_surface import Origami, Permutation, SurfaceError, build_origami

SPEC_RE = re.compile(r"^\s*M\s*(\d+)\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class CyclicCoverSpec:
    N: int
    a: tuple[int, int, int, int]

    @property
    def orientable(self) -> bool:
        return self.N % 2 == 0 and all(x % 2 == 1 for x in self.a)

    def __str__(self) -> str:
        return f"M{self.N}({','.join(map(str, self.a))})"

    def ramification(self) -> tuple[int, ...]:
        return tuple(self.N // math.gcd(self.N, x) for x in self.a)


def validate_spec(N: int, a) -> CyclicCoverSpec:
    a = tuple(int(x) for x in a)
    problems = []
    if N < 1:
        problems.append(f"N={N} must be positive")
    if len(a) != 4:
        problems.append(f"need four exponents, got {len(a)}")
    else:
        for i, x in enumerate(a, 1):
            if not 0 < x <= N:
                problems.append(f"a{i}={x} is not in (0, N]")
        if N >= 1 and reduce(math.gcd, a, N) != 1:
            problems.append(f"gcd(N, a1..a4)={reduce(math.gcd, a, N)} is not 1")
        if N >= 1 and sum(a) % N:
            problems.append(f"sum a_i = {sum(a)} is not 0 mod {N}")
    if problems:
        raise SpecError("; ".join(problems))
    return CyclicCoverSpec(int(N), a)


def parse_spec(text: str) -> CyclicCoverSpec:
    m = SPEC_RE.match(text)
    if not m:
        raise SpecError(f"cannot parse cover spec {text!r}; expected M<N>(a1,a2,a3,a4)")
    vals = [int(x) for x in m.groups()]
    return validate_spec(vals[0], vals[1:])


@dataclass
class CoverResult:
    spec: CyclicCoverSpec
    origami: Origami
    deck: Permutation
    branch_fibers: tuple[tuple[tuple[int, ...], ...], ...]

    def to_json(self) -> dict:
        data = self.origami.to_json()
        data["deck"] = list(self.deck.images)
        data["spec"] = str(self.spec)
        return data


def square_index(s: int, b: int) -> int:
    return 2 * s + b


# chart edges of each face: (right, top, left, bottom)
_CHART = {0: ("R", "T", "L", "B"), 1: ("R", "B", "L", "T")}
# corner z_i at the bottom-left of a square, by face and orientation sign
_BL_CORNER = {(0, 1): 0, (0, -1): 2, (1, 1): 3, (1, -1): 1}


def edge_labels(spec: CyclicCoverSpec) -> dict[str, int]:
    a1, a2, a3, a4 = spec.a
    N = spec.N
    return {"B": 0, "R": a2 % N, "T": (a2 + a3) % N, "L": (a2 + a3 + a4) % N}


def build_cover(spec: CyclicCoverSpec) -> CoverResult:
    if not spec.orientable:
        raise SpecError(f"{spec}: quadratic, not Abelian (needs N even and every a_i odd)")
    N = spec.N
    lab = edge_labels(spec)
    n = 2 * N
    h = [0] * n
    v = [0] * n

    def cross(s: int, b: int, e: str) -> int:
        if b == 0:
            return square_index((s + lab[e]) % N, 1)
        return square_index((s - lab[e]) % N, 0)

    for s in range(N):
        sign = 1 if s % 2 == 0 else -1
        for b in (0, 1):
            right, top, left, bottom = _CHART[b]
            i = square_index(s, b)
            h[i] = cross(s, b, right if sign == 1 else left)
            v[i] = cross(s, b, top if sign == 1 else bottom)
    o = build_origami(Permutation(tuple(h)), Permutation(tuple(v)))
    deck = Permutation(tuple(square_index((i // 2 + 1) % N, i % 2) for i in range(n)))

    corner_of = [_BL_CORNER[(i % 2, 1 if (i // 2) % 2 == 0 else -1)] for i in range(n)]
    fibers: list[list[tuple[int, ...]]] = [[] for _ in range(4)]
    for cyc in o.corner_map.cycles():
        zs = {corner_of[i] for i in cyc}
        if len(zs) != 1:
            raise SurfaceError("corner cycle covers two different branch points")
        fibers[zs.pop()].append(tuple(sorted(cyc)))
    result = CoverResult(spec, o, deck, tuple(tuple(f) for f in fibers))
    _check_cover(result)
    return result


def _check_cover(res: CoverResult) -> None:
    o, p = res.origami, res.deck
    h, v = o.h.images, o.v.images
    hinv, vinv = o.h_inv.images, o.v_inv.images
    d = p.images
    # rotation by pi: right neighbours go to left neighbours
    if any(d[h[i]] != hinv[d[i]] or d[v[i]] != vinv[d[i]] for i in range(o.n)):
        raise SurfaceError("sheet shift is not a half-translation")
    for i, fib in enumerate(res.branch_fibers):
        if len(fib) != math.gcd(res.spec.N, res.spec.a[i]):
            raise SurfaceError(f"wrong number of points over z{i + 1}")
    if o.genus != genus_by_formula(res.spec):
        raise SurfaceError("genus disagrees with Riemann-Hurwitz")


def genus_by_formula(spec: CyclicCoverSpec) -> int:
    twice = 2 + 2 * spec.N - sum(math.gcd(spec.N, x) for x in spec.a)
    return twice // 2


def orientable_specs(N: int, unordered: bool = True) -> list[CyclicCoverSpec]:
    """All valid orientable specs of degree N (exponents sorted if unordered)."""
    out = []
    odd = range(1, N, 2)
    seen = set()
    for a1 in odd:
        for a2 in odd:
            for a3 in odd:
                a4 = (-(a1 + a2 + a3)) % N
                if a4 == 0 or a4 % 2 == 0:
                    continue
                a = (a1, a2, a3, a4)
                key = tuple(sorted(a)) if unordered else a
                if key in seen:
                    continue
                try:
                    spec = validate_spec(N, key)
                except SpecError:
                    continue
                seen.add(key)
                out.append(spec)
    return out
