"""Eigenspace bookkeeping for the deck group of a cyclic cover.

``t(k) = sum_i {k a_i / N}`` controls everything: the holomorphic part of the
zeta^k eigenspace has dimension t(N - k) - 1, and indices with both
dimensions equal to one carry the positive exponents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy

from . import intlinalg
from .cyclic_cover import CyclicCoverSpec, genus_by_formula


class BlockError(ValueError):
    pass


def t_value(spec: CyclicCoverSpec, k: int) -> int:
    if not 1 <= k <= spec.N - 1:
        raise ValueError(f"k={k} outside 1..{spec.N - 1}")
    total = sum(Fraction(k * a, spec.N) - (k * a) // spec.N for a in spec.a)
    if total.denominator != 1:
        raise ValueError("t(k) is not an integer; spec violates the sum condition")
    return int(total)


def frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


@dataclass
class EigenData:
    N: int
    t: tuple[int, ...]
    dims_holo: tuple[int, ...]
    i0: tuple[int, ...] = ()
    i1: tuple[int, ...] = ()
    predicted_positive_count: int = 0
    predicted_lambda: dict[int, Fraction] = field(default_factory=dict)

    def dim(self, k: int) -> int:
        return self.dims_holo[k - 1]

    def predicted_spectrum(self, genus: int) -> list[Fraction]:
        """Non-negative spectrum (length g), largest first."""
        vals = []
        for k in range(1, self.N):
            if self.dim(k) == 1 and self.dim(self.N - k) == 1:
                vals.append(self.predicted_lambda[min(k, self.N - k)])
        vals += [Fraction(0)] * (genus - len(vals))
        return sorted(vals, reverse=True)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "t": list(self.t),
            "dims_holo": list(self.dims_holo),
            "i0": list(self.i0),
            "i1": list(self.i1),
            "predicted_positive_count": self.predicted_positive_count,
            "predicted_lambda": {str(k): f"{v.numerator}/{v.denominator}" for k, v in sorted(self.predicted_lambda.items())},
        }


def eigenspace_dims(spec: CyclicCoverSpec) -> EigenData:
    N = spec.N
    t = tuple(t_value(spec, k) for k in range(1, N))
    dims = tuple(t[N - k - 1] - 1 for k in range(1, N))
    if sum(dims) != genus_by_formula(spec):
        raise ValueError("eigenspace dimensions do not add up to the genus")
    return EigenData(N, t, dims)


def lambda_prediction(spec: CyclicCoverSpec, k: int) -> Fraction:
    """2 * min_j min({k a_j / N}, 1 - {k a_j / N})."""
    best = None
    for a in spec.a:
        f = frac_part(Fraction(k * a, spec.N))
        m = min(f, 1 - f)
        best = m if best is None else min(best, m)
    return 2 * best


def partition_and_predictions(spec: CyclicCoverSpec) -> EigenData:
    data = eigenspace_dims(spec)
    N = spec.N
    i0, i1 = [], []
    for k in range(1, N // 2 + 1):
        (i1 if data.dim(k) == 1 and data.dim(N - k) == 1 else i0).append(k)
    data.i0, data.i1 = tuple(i0), tuple(i1)
    data.predicted_positive_count = sum(
        1 for k in range(1, N) if data.dim(k) == 1 and data.dim(N - k) == 1
    )
    data.predicted_lambda = {k: lambda_prediction(spec, k) for k in i1}
    return data


def block_dimension_formula(spec: CyclicCoverSpec, d: int) -> int:
    """Real dimension of ker Phi_d(deck) predicted from t(k)."""
    N = spec.N
    return sum(
        t_value(spec, k) + t_value(spec, N - k) - 2
        for k in range(1, N)
        if N // math.gcd(N, k) == d
    )


# --------------------------------------------------------------------------
# invariant blocks of a finite-order integer matrix


@dataclass
class RealBlock:
    label: str
    basis: np.ndarray  # (2g, dim) integer columns, or float for refinements
    exact: bool = True
    divisor: int | None = None
    k: int | None = None
    refinement: list["RealBlock"] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


@lru_cache(maxsize=None)
def cyclotomic_coeffs(d: int) -> tuple[int, ...]:
    x = sympy.Symbol("x")
    return tuple(int(c) for c in sympy.Poly(sympy.cyclotomic_poly(d, x), x).all_coeffs())


def poly_at_matrix(coeffs, m: np.ndarray) -> np.ndarray:
    """Horner evaluation with Python ints (coefficients highest degree first)."""
    m = m.astype(object)
    acc = np.zeros_like(m)
    eye = np.eye(m.shape[0], dtype=object)
    for c in coeffs:
        acc = acc.dot(m) + c * eye
    return acc


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _check_order(deck: np.ndarray, N: int) -> None:
    p = np.linalg.matrix_power(deck.astype(object), N)
    if not np.array_equal(p, np.eye(deck.shape[0], dtype=object)):
        raise BlockError(f"deck matrix does not have order dividing {N}")


def real_primary_decomposition(deck: np.ndarray, N: int, refine: bool = True) -> list[RealBlock]:
    deck = np.asarray(deck, dtype=np.int64)
    _check_order(deck, N)
    blocks = []
    total = 0
    for d in divisors(N):
        phi = poly_at_matrix(cyclotomic_coeffs(d), deck)
        ker = np.array(intlinalg.integer_kernel(intlinalg.as_rows(phi)), dtype=np.int64).reshape(deck.shape[0], -1)
        if ker.shape[1] == 0:
            continue
        total += ker.shape[1]
        blk = RealBlock(f"d={d}", ker, True, divisor=d)
        if refine:
            blk.refinement = _complex_refinement(deck, N, d, ker)
        blocks.append(blk)
    if total != deck.shape[0]:
        raise BlockError("cyclotomic kernels do not fill the space")
    return blocks


def _complex_refinement(deck: np.ndarray, N: int, d: int, ker: np.ndarray, tol: float = 1e-9) -> list[RealBlock]:
    ks = [k for k in range(1, N // 2 + 1) if N // math.gcd(N, k) == d] if d > 1 else []
    if len(ks) <= 1:
        return []
    zeta = np.exp(2j * np.pi / N)
    m = deck.astype(complex)
    eye = np.eye(m.shape[0])
    out = []
    for k in ks:
        proj = eye.astype(complex)
        for j in range(N):
            if j != k:
                proj = proj @ (m - zeta**j * eye) / (zeta**k - zeta**j)
        # real and imaginary parts of the zeta^k eigenspace span W_k
        real = np.concatenate([proj.real, proj.imag], axis=1)
        u, s, _ = np.linalg.svd(real)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        out.append(RealBlock(f"k={k}", u[:, :rank], False, divisor=d, k=k))
    return out


def block_restrict(matrices, block: RealBlock, target: RealBlock | None = None) -> list[np.ndarray]:
    """Matrices of the maps restricted to the block, in block coordinates.

    ``target`` defaults to ``block`` (maps from a surface to itself).
    """
    target = target or block
    out = []
    if block.exact and target.exact:
        left = np.array(intlinalg.left_inverse_on_saturated(intlinalg.as_rows(target.basis)), dtype=object)
        for m in matrices:
            m = getattr(m, "m", m)
            img = np.asarray(m, dtype=object).dot(block.basis.astype(object))
            r = left.dot(img)
            if not np.array_equal(target.basis.astype(object).dot(r), img):
                raise BlockError("not an invariant subbundle")
            out.append(r.astype(np.int64))
        return out
    for m in matrices:
        m = getattr(m, "m", m)
        img = np.asarray(m, dtype=float) @ block.basis
        r, *_ = np.linalg.lstsq(target.basis, img, rcond=None)
        if np.linalg.norm(target.basis @ r - img) > 1e-8 * max(1.0, np.linalg.norm(img)):
            raise BlockError("not an invariant subbundle")
        out.append(r)
    return out


@lru_cache(maxsize=None)
def idempotent_coeffs(N: int, d: int) -> tuple[tuple[int, ...], int]:
    """Integer coefficients c_j (lowest degree first) and a denominator D with
    sum_j c_j x^j / D the idempotent of Q[x]/(x^N - 1) supported on Phi_d."""
    x = sympy.Symbol("x")
    phi = sympy.Poly(sympy.cyclotomic_poly(d, x), x, domain="QQ")
    rest = sympy.Poly(x**N - 1, x, domain="QQ").quo(phi)
    inv = sympy.invert(rest.as_expr(), phi.as_expr(), x)
    e = sympy.Poly(sympy.expand(rest.as_expr() * inv), x, domain="QQ").rem(sympy.Poly(x**N - 1, x, domain="QQ"))
    coeffs = [sympy.Rational(c) for c in reversed(e.all_coeffs())]
    den = int(sympy.ilcm(*[c.q for c in coeffs])) if coeffs else 1
    ints = tuple(int(c * den) for c in coeffs)
    return ints, den


def block_projector(deck: np.ndarray, N: int, d: int) -> np.ndarray:
    """Float projector onto ker Phi_d(deck) along the other cyclotomic blocks,
    computed exactly over Z and divided once at the end."""
    ints, den = idempotent_coeffs(N, d)
    m = deck.astype(object)
    acc = np.zeros_like(m)
    power = np.eye(m.shape[0], dtype=object)
    for c in ints:
        if c:
            acc = acc + c * power
        power = power.dot(m)
    return acc.astype(float) / den


def character_projector(deck: np.ndarray, N: int, ks) -> np.ndarray:
    """Real projector (1/N) sum_j sum_{k in ks} zeta^(-k j) D^j onto the sum of
    the zeta^k eigenspaces; ks must be closed under k -> -k."""
    n = deck.shape[0]
    acc = np.zeros((n, n))
    power = np.eye(n, dtype=np.int64)
    for j in range(N):
        c = sum(math.cos(2 * math.pi * k * j / N) for k in ks)
        if abs(c) > 1e-15:
            acc += c * power
        power = power @ deck
    return acc / N
