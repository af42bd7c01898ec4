"""Square-tiled surfaces: permutations, topology, integer homology, cocycles.

An origami on ``n`` squares is a pair of permutations: ``h[i]`` is the square
to the right of square ``i`` and ``v[i]`` the square on top of it. Edges of the
cell complex are the bottom edge ``b_i`` (index ``i``, pointing right) and the
left edge ``l_i`` (index ``n + i``, pointing up) of every square.

Homology is carried on integer cycles. A tree/cotree decomposition gives an
integral basis ``C`` of H_1 together with integral coordinates ``P`` (one
cocycle per basis class, ``P @ C = I``). The intersection form comes from the
cubical cup product of those cocycles.
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import intlinalg

GENERATORS = ("T", "Tinv", "S")

SL2_MATRICES = {
    "T": np.array([[1, 1], [0, 1]], dtype=np.int64),
    "Tinv": np.array([[1, -1], [0, 1]], dtype=np.int64),
    "S": np.array([[0, -1], [1, 0]], dtype=np.int64),
}


class SurfaceError(ValueError):
    """Invalid combinatorial input."""


class CocycleError(RuntimeError):
    """An induced matrix failed its exact consistency checks."""


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        object.__setattr__(self, "images", imgs)
        if sorted(imgs) != list(range(len(imgs))):
            raise SurfaceError("not a permutation of 0..n-1")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        img = list(range(n))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a] = b
        return cls(tuple(img))

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # (self * other)(i) = self(other(i))
        if len(self) != len(other):
            raise SurfaceError("size mismatch")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * len(self)
        out = []
        for s in range(len(self)):
            if seen[s]:
                continue
            cyc = []
            i = s
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i]
            out.append(tuple(cyc))
        return out

    def order(self) -> int:
        return int(np.lcm.reduce([len(c) for c in self.cycles()] or [1]))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))


@dataclass(frozen=True)
class SingularityProfile:
    zero_orders: tuple[int, ...]
    genus: int

    def stratum(self) -> str:
        if not self.zero_orders:
            return "H(0)"
        counts: dict[int, int] = {}
        for d in self.zero_orders:
            counts[d] = counts.get(d, 0) + 1
        parts = [f"{d}^{m}" if m > 1 else f"{d}" for d, m in sorted(counts.items(), reverse=True)]
        return "H(" + ",".join(parts) + ")"


@dataclass(frozen=True, eq=True)
class Origami:
    n: int
    h: Permutation
    v: Permutation

    @cached_property
    def h_inv(self) -> Permutation:
        return self.h.inverse()

    @cached_property
    def v_inv(self) -> Permutation:
        return self.v.inverse()

    @cached_property
    def corner_map(self) -> Permutation:
        """Square whose bottom-left corner comes next when turning
        counterclockwise around the bottom-left corner of square i."""
        return self.v * self.h * self.v_inv * self.h_inv

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        """Vertex label of the bottom-left corner of each square."""
        lab = [0] * self.n
        for k, cyc in enumerate(self.corner_map.cycles()):
            for i in cyc:
                lab[i] = k
        return tuple(lab)

    @cached_property
    def profile(self) -> SingularityProfile:
        return singularity_profile(self)

    @property
    def genus(self) -> int:
        return self.profile.genus

    def to_json(self) -> dict:
        return {"n": self.n, "h": list(self.h.images), "v": list(self.v.images)}

    @classmethod
    def from_json(cls, data: dict) -> "Origami":
        return build_origami(Permutation(tuple(data["h"])), Permutation(tuple(data["v"])))

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.h.images, self.v.images)


def _is_transitive(n: int, perms: Sequence[Sequence[int]]) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for p in perms:
            j = p[i]
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


def build_origami(h: Permutation | Sequence[int], v: Permutation | Sequence[int]) -> Origami:
    h = h if isinstance(h, Permutation) else Permutation(tuple(h))
    v = v if isinstance(v, Permutation) else Permutation(tuple(v))
    if len(h) != len(v):
        raise SurfaceError("size mismatch between h and v")
    n = len(h)
    if n < 1:
        raise SurfaceError("an origami needs at least one square")
    if not _is_transitive(n, [h.images, v.images]):
        raise SurfaceError("disconnected surface")
    o = Origami(n, h, v)
    _ = o.profile
    return o


def singularity_profile(o: Origami) -> SingularityProfile:
    """Zero orders from cycles of the corner map; a cycle of length L is a
    cone point of angle 2*pi*L, i.e. a zero of order L - 1."""
    orders = sorted((len(c) - 1 for c in o.corner_map.cycles() if len(c) > 1), reverse=True)
    total = sum(orders)
    if total % 2:
        raise SurfaceError("corner cycles do not form a valid stratum")
    return SingularityProfile(tuple(orders), 1 + total // 2)


# --------------------------------------------------------------------------
# SL(2, Z) action and canonical labels


def apply_generator(o: Origami, g: str) -> Origami:
    """Image of ``o`` under T (horizontal shear), its inverse, or S (rotation
    by a quarter turn). Square labels are kept: square i of the result is the
    image of square i (for T, the new square sharing its bottom edge)."""
    if g == "T":
        return Origami(o.n, o.h, o.v * o.h_inv)
    if g == "Tinv":
        return Origami(o.n, o.h, o.v * o.h)
    if g == "S":
        return Origami(o.n, o.v_inv, o.h)
    raise SurfaceError(f"unknown generator {g!r}")


def _bfs_labeling(o: Origami, start: int) -> list[int]:
    lab = [-1] * o.n
    lab[start] = 0
    nxt = 1
    queue = deque([start])
    h, v = o.h.images, o.v.images
    while queue:
        x = queue.popleft()
        for y in (h[x], v[x]):
            if lab[y] < 0:
                lab[y] = nxt
                nxt += 1
                queue.append(y)
    return lab


def _relabel(o: Origami, sigma: Sequence[int]) -> Origami:
    n = o.n
    h2 = [0] * n
    v2 = [0] * n
    h, v = o.h.images, o.v.images
    for i in range(n):
        h2[sigma[i]] = sigma[h[i]]
        v2[sigma[i]] = sigma[v[i]]
    return Origami(n, Permutation(tuple(h2)), Permutation(tuple(v2)))


def relabel(o: Origami, sigma: Sequence[int]) -> Origami:
    """Origami with square i renamed sigma[i]."""
    return _relabel(o, sigma)


def canonical_relabeling(o: Origami) -> tuple[Origami, tuple[int, ...]]:
    best = None
    for s in range(o.n):
        sigma = _bfs_labeling(o, s)
        cand = _relabel(o, sigma)
        key = cand.key()
        if best is None or key < best[0]:
            best = (key, cand, tuple(sigma))
    return best[1], best[2]


def canonical_form(o: Origami) -> Origami:
    return canonical_relabeling(o)[0]


def canonical_id(o: Origami) -> str:
    c = canonical_form(o)
    payload = json.dumps([list(c.h.images), list(c.v.images)], separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:20]


# --------------------------------------------------------------------------
# homology


def boundary_matrices(o: Origami) -> tuple[np.ndarray, np.ndarray]:
    """(d1, d2): d1 is vertices x edges, d2 is edges x squares."""
    n = o.n
    vert = o.vertex_of
    nv = max(vert) + 1
    d1 = np.zeros((nv, 2 * n), dtype=np.int64)
    d2 = np.zeros((2 * n, n), dtype=np.int64)
    h, v = o.h.images, o.v.images
    for i in range(n):
        d1[vert[h[i]], i] += 1
        d1[vert[i], i] -= 1
        d1[vert[v[i]], n + i] += 1
        d1[vert[i], n + i] -= 1
        d2[i, i] += 1
        d2[n + h[i], i] += 1
        d2[v[i], i] -= 1
        d2[n + i, i] -= 1
    return d1, d2


def cup_form(o: Origami, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Cubical cup product of edge cochains evaluated on the fundamental class.

    ``alpha``, ``beta`` have shape (k, 2n); returns the k x k matrix
    sum_i alpha(b_i) beta(right_i) - alpha(l_i) beta(top_i).
    """
    n = o.n
    h = np.asarray(o.h.images)
    v = np.asarray(o.v.images)
    bottom = alpha[:, :n]
    left = alpha[:, n:]
    right_b = beta[:, n + h]
    top_b = beta[:, v]
    return bottom @ right_b.T - left @ top_b.T


@dataclass
class HomologyModel:
    origami: Origami
    cycle_basis: np.ndarray  # (2n, 2g) integer cycles
    coords: np.ndarray  # (2g, 2n) integer cocycles, coords @ cycle_basis = I
    intersection: np.ndarray  # (2g, 2g)
    tautological: np.ndarray = field(repr=False, default=None)  # (2g, 2) coords of total h/v cycles

    @property
    def rank(self) -> int:
        return self.cycle_basis.shape[1]

    @property
    def genus(self) -> int:
        return self.rank // 2

    @cached_property
    def intersection_inv(self) -> np.ndarray:
        return np.array(intlinalg.integer_inverse(intlinalg.as_rows(self.intersection)), dtype=np.int64)

    def classes_of(self, chains: np.ndarray) -> np.ndarray:
        return self.coords @ chains


def homology_model(o: Origami) -> HomologyModel:
    n = o.n
    nedge = 2 * n
    vert = o.vertex_of
    nv = max(vert) + 1
    h, v = o.h.images, o.v.images
    hinv, vinv = o.h_inv.images, o.v_inv.images
    ends = [(vert[i], vert[h[i]]) for i in range(n)] + [(vert[i], vert[v[i]]) for i in range(n)]

    # spanning tree of the 1-skeleton
    adj: list[list[int]] = [[] for _ in range(nv)]
    for e, (a, b) in enumerate(ends):
        adj[a].append(e)
        adj[b].append(e)
    parent_edge = [-1] * nv
    seen = [False] * nv
    seen[vert[0]] = True
    order = [vert[0]]
    queue = deque([vert[0]])
    in_tree = [False] * nedge
    while queue:
        x = queue.popleft()
        for e in adj[x]:
            a, b = ends[e]
            y = b if a == x else a
            if not seen[y]:
                seen[y] = True
                parent_edge[y] = e
                in_tree[e] = True
                order.append(y)
                queue.append(y)

    # spanning tree of the dual graph on the remaining edges
    def squares_of(e: int) -> tuple[int, int]:
        return (e, vinv[e]) if e < n else (e - n, hinv[e - n])

    sq_adj: list[list[int]] = [[] for _ in range(n)]
    for e in range(nedge):
        if not in_tree[e]:
            a, b = squares_of(e)
            sq_adj[a].append(e)
            sq_adj[b].append(e)
    sq_parent = [-1] * n
    sq_seen = [False] * n
    sq_seen[0] = True
    sq_order = [0]
    queue = deque([0])
    in_cotree = [False] * nedge
    while queue:
        x = queue.popleft()
        for e in sq_adj[x]:
            a, b = squares_of(e)
            y = b if a == x else a
            if not sq_seen[y]:
                sq_seen[y] = True
                sq_parent[y] = e
                in_cotree[e] = True
                sq_order.append(y)
                queue.append(y)
    gens = [e for e in range(nedge) if not in_tree[e] and not in_cotree[e]]
    r = len(gens)
    if r != 2 * o.genus:
        raise CocycleError("tree/cotree count disagrees with the genus")

    # fundamental cycles
    def path_to_root(x: int) -> dict[int, int]:
        chain: dict[int, int] = {}
        while parent_edge[x] >= 0:
            e = parent_edge[x]
            a, b = ends[e]
            # walking from x towards the root along e
            chain[e] = chain.get(e, 0) + (-1 if b == x else 1)
            x = a if b == x else b
        return chain

    basis = np.zeros((nedge, r), dtype=np.int64)
    for k, e in enumerate(gens):
        a, b = ends[e]
        basis[e, k] += 1
        for f, c in path_to_root(b).items():
            basis[f, k] += c
        for f, c in path_to_root(a).items():
            basis[f, k] -= c

    # coordinates: push cycles off the cotree by subtracting square boundaries
    _, d2 = boundary_matrices(o)
    z = np.eye(nedge, dtype=np.int64)
    for s in sq_order[1:]:
        e = sq_parent[s]
        coef = d2[e, s]
        bd = d2[:, s] * coef  # coef is +-1
        z -= np.outer(bd, z[e])
    coords = z[gens]

    if np.any(coords @ d2) or not np.array_equal(coords @ basis, np.eye(r, dtype=np.int64)):
        raise CocycleError("homology coordinates are inconsistent")

    w = cup_form(o, coords, coords)
    jt = np.array(intlinalg.integer_inverse(intlinalg.as_rows(w)), dtype=np.int64)
    jmat = jt.T
    htot = np.zeros(nedge, dtype=np.int64)
    htot[:n] = 1
    vtot = np.zeros(nedge, dtype=np.int64)
    vtot[n:] = 1
    taut = np.stack([coords @ htot, coords @ vtot], axis=1)
    pairing = taut[:, 0] @ jmat @ taut[:, 1]
    if pairing == -n:
        jmat = -jmat
    elif pairing != n:
        raise CocycleError("horizontal and vertical totals do not meet once per square")
    return HomologyModel(o, basis, coords, jmat, taut)


# --------------------------------------------------------------------------
# induced maps on homology


def generator_chain_map(o: Origami, g: str) -> np.ndarray:
    """Edge chain map C_1(o) -> C_1(apply_generator(o, g)) (same square labels)."""
    n = o.n
    f = np.zeros((2 * n, 2 * n), dtype=np.int64)
    h, hinv, vinv = o.h.images, o.h_inv.images, o.v_inv.images
    for i in range(n):
        if g == "T":
            f[i, i] = 1
            f[i, n + i] = 1
            f[n + h[i], n + i] = 1
        elif g == "Tinv":
            f[i, i] = 1
            f[hinv[i], n + i] = -1
            f[n + hinv[i], n + i] = 1
        elif g == "S":
            # new right neighbour is the old bottom one: h' = v^-1
            f[n + vinv[i], i] = 1
            f[i, n + i] = -1
        else:
            raise SurfaceError(f"unknown generator {g!r}")
    return f


def relabel_chain_map(n: int, sigma: Sequence[int]) -> np.ndarray:
    p = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for i, s in enumerate(sigma):
        p[s, i] = 1
        p[n + s, n + i] = 1
    return p


@dataclass
class CocycleMatrix:
    m: np.ndarray
    source: str
    target: str
    generator_label: str


def check_symplectic(m: np.ndarray, j_src: np.ndarray, j_dst: np.ndarray) -> bool:
    return bool(np.array_equal(m.T @ j_dst @ m, j_src))


def induced_matrix(src: HomologyModel, dst: HomologyModel, chain_map: np.ndarray, label: str) -> np.ndarray:
    m = dst.coords @ chain_map @ src.cycle_basis
    if not check_symplectic(m, src.intersection, dst.intersection):
        raise CocycleError(f"induced matrix for {label} is not symplectic")
    return m


def induced_cocycle_matrix(
    o: Origami,
    g: str,
    src: HomologyModel | None = None,
    dst: HomologyModel | None = None,
    canonical: bool = False,
) -> CocycleMatrix:
    """Exact action of g on H_1, from the homology of ``o`` to that of its image.

    With ``canonical=True`` the image is relabeled to canonical form and
    ``dst`` (if given) must be a model of that canonical origami.
    """
    src = src or homology_model(o)
    img = apply_generator(o, g)
    chain = generator_chain_map(o, g)
    if canonical:
        img, sigma = canonical_relabeling(img)
        chain = relabel_chain_map(o.n, sigma) @ chain
    dst = dst or homology_model(img)
    m = induced_matrix(src, dst, chain, g)
    block = tautological_block(m, src, dst)
    if not np.array_equal(block, SL2_MATRICES[g]):
        raise CocycleError(f"tautological block of {g} is {block.tolist()}")
    return CocycleMatrix(m, canonical_id(o), canonical_id(img), g)


def tautological_block(m: np.ndarray, src: HomologyModel, dst: HomologyModel) -> np.ndarray:
    """2x2 matrix A with m @ taut_src = taut_dst @ A (exact)."""
    image = m @ src.tautological
    sol, *_ = np.linalg.lstsq(dst.tautological.astype(float), image.astype(float), rcond=None)
    a = np.rint(sol).astype(np.int64)
    if not np.array_equal(dst.tautological @ a, image):
        raise CocycleError("tautological plane is not preserved")
    return a


def automorphism_chain_map(o: Origami, p: Permutation, sign: int | None = None) -> tuple[np.ndarray, int]:
    """Chain map of a translation (sign +1) or half-translation (sign -1)
    automorphism given by its action on squares.

    When h and v are involutions the square permutation alone does not say
    which of the two it is, so callers that know should pass ``sign``.
    """
    n = o.n
    h, v = o.h.images, o.v.images
    pi = p.images
    is_translation = all(pi[h[i]] == h[pi[i]] and pi[v[i]] == v[pi[i]] for i in range(n))
    is_rotation = all(h[pi[h[i]]] == pi[i] and v[pi[v[i]]] == pi[i] for i in range(n))
    if sign is None:
        sign = 1 if is_translation else -1 if is_rotation else 0
    if (sign == 1 and not is_translation) or (sign == -1 and not is_rotation) or sign not in (1, -1):
        raise SurfaceError("not an automorphism")
    f = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for i in range(n):
        if sign == 1:
            f[pi[i], i] = 1
            f[n + pi[i], n + i] = 1
        else:
            # rotation by pi: bottom edge -> reversed top edge, left -> reversed right
            f[v[pi[i]], i] = -1
            f[n + h[pi[i]], n + i] = -1
    return f, sign


def automorphism_matrix(
    o: Origami, p: Permutation, model: HomologyModel | None = None, sign: int | None = None
) -> CocycleMatrix:
    model = model or homology_model(o)
    f, sign = automorphism_chain_map(o, p, sign)
    m = induced_matrix(model, model, f, "aut")
    cid = canonical_id(o)
    return CocycleMatrix(m, cid, cid, "translation" if sign == 1 else "half-translation")


def matrix_order(m: np.ndarray, limit: int = 1000) -> int:
    eye = np.eye(m.shape[0], dtype=np.int64)
    acc = m.copy()
    for k in range(1, limit + 1):
        if np.array_equal(acc, eye):
            return k
        acc = acc @ m
    raise CocycleError("matrix has no finite order below the limit")


def find_automorphisms(o: Origami, sign: int = 1) -> list[Permutation]:
    """All translation (sign=1) or half-translation (sign=-1) automorphisms."""
    n = o.n
    h, v = o.h.images, o.v.images
    hinv, vinv = o.h_inv.images, o.v_inv.images
    out = []
    for target in range(n):
        img = [-1] * n
        img[0] = target
        stack = [0]
        ok = True
        while stack and ok:
            i = stack.pop()
            for src_next, dst_next in ((h[i], h if sign == 1 else hinv), (v[i], v if sign == 1 else vinv)):
                want = dst_next[img[i]]
                if img[src_next] < 0:
                    img[src_next] = want
                    stack.append(src_next)
                elif img[src_next] != want:
                    ok = False
                    break
        if ok and sorted(img) == list(range(n)):
            out.append(Permutation(tuple(img)))
    return out


L_SHAPE = (Permutation.from_cycles(3, [(0, 1, 2)]), Permutation.from_cycles(3, [(0, 2)]))


def l_shape() -> Origami:
    """The 3-square origami in H(2) used throughout the tests."""
    return build_origami(*L_SHAPE)


def torus() -> Origami:
    return build_origami(Permutation.identity(1), Permutation.identity(1))
