"""Exact integer linear algebra on lists of Python ints.

Matrices are lists of rows. Everything here is exact; nothing touches floats.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

IntMatrix = list[list[int]]


def as_rows(a) -> IntMatrix:
    return [[int(x) for x in row] for row in np.asarray(a, dtype=object)]


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(a: IntMatrix) -> IntMatrix:
    return [list(col) for col in zip(*a)] if a else []


def matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    bt = transpose(b)
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def smith_normal_form(a: Sequence[Sequence[int]]):
    """Return (D, U, V) with U @ A @ V == D, D diagonal with d1 | d2 | ...

    U and V are unimodular. The elimination pivots on the smallest nonzero
    entry of the remaining block, which keeps coefficients small for the
    sparse boundary matrices we feed it.
    """
    d = [list(map(int, row)) for row in a]
    m = len(d)
    n = len(d[0]) if m else 0
    u = identity(m)
    v = identity(n)

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, q):  # row dst += q * row src
        rs, rd = d[src], d[dst]
        for k in range(n):
            if rs[k]:
                rd[k] += q * rs[k]
        us, ud = u[src], u[dst]
        for k in range(m):
            if us[k]:
                ud[k] += q * us[k]

    def add_col(src, dst, q):  # col dst += q * col src
        for row in d:
            if row[src]:
                row[dst] += q * row[src]
        for row in v:
            if row[src]:
                row[dst] += q * row[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = d[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = d[t][t]
            dirty = False
            for i in range(t + 1, m):
                if d[i][t]:
                    q = d[i][t] // p
                    add_row(t, i, -q)
                    if d[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if d[t][j]:
                    q = d[t][j] // p
                    add_col(t, j, -q)
                    if d[t][j]:
                        dirty = True
            if not dirty:
                # divisibility of the rest of the block
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if d[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                add_row(bad, t, 1)
                continue
            # move the smallest remainder into the pivot slot and repeat
            best = (abs(p), t, t)
            for i in range(t + 1, m):
                if d[i][t] and abs(d[i][t]) < best[0]:
                    best = (abs(d[i][t]), i, t)
            for j in range(t + 1, n):
                if d[t][j] and abs(d[t][j]) < best[0]:
                    best = (abs(d[t][j]), t, j)
            _, i, j = best
            if i != t:
                swap_rows(t, i)
            if j != t:
                swap_cols(t, j)
        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    return d, u, v


def rank_of_snf(d: IntMatrix) -> int:
    r = 0
    while r < min(len(d), len(d[0]) if d else 0) and d[r][r] != 0:
        r += 1
    return r


def integer_kernel(a: Sequence[Sequence[int]]) -> IntMatrix:
    """Columns spanning the saturated integer kernel {x : A x = 0}."""
    a = [list(map(int, row)) for row in a]
    d, _, v = smith_normal_form(a)
    r = rank_of_snf(d)
    return [row[r:] for row in v]


def solve_fraction(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]):
    """Solve A X = B exactly over Q for square nonsingular A."""
    n = len(a)
    aug = [[Fraction(x) for x in a[i]] + [Fraction(x) for x in b[i]] for i in range(n)]
    w = len(aug[0])
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [row[n:w] for row in aug]


def integer_inverse(a: Sequence[Sequence[int]]) -> IntMatrix:
    inv = solve_fraction(a, identity(len(a)))
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append([int(x) for x in row])
    return out


def determinant(a: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant."""
    m = [list(map(int, row)) for row in a]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def left_inverse_on_saturated(basis_cols: IntMatrix) -> IntMatrix:
    """Integer L with L @ B = I for a saturated column basis B (n x k)."""
    d, u, _v = smith_normal_form(basis_cols)
    k = len(basis_cols[0]) if basis_cols else 0
    for i in range(k):
        if abs(d[i][i]) != 1:
            raise ValueError("basis is not saturated")
    # U B V = [I;0] (up to signs absorbed in D) => (V D^-1 U[:k]) B = I
    vd = [[row[j] * d[j][j] for j in range(k)] for row in _v]
    return matmul(vd, u[:k])


def rref_mod_p(a: Sequence[Sequence[int]], p: int) -> tuple[IntMatrix, list[int]]:
    """Reduced row echelon form over F_p and the pivot columns."""
    m = [[x % p for x in row] for row in a]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def kernel_mod_p(a: Sequence[Sequence[int]], p: int, ncols: int | None = None) -> IntMatrix:
    """Basis (list of vectors) of {x : A x = 0} over F_p."""
    ncols = ncols if ncols is not None else (len(a[0]) if a else 0)
    m, pivots = rref_mod_p(a, p) if a else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for r, c in enumerate(pivots):
            x[c] = (-m[r][f]) % p
        basis.append(x)
    return basis


def solve_mod_p(a: Sequence[Sequence[int]], b: Sequence[int], p: int) -> list[int] | None:
    """One solution of A x = b over F_p, or None."""
    ncols = len(a[0])
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    m, pivots = rref_mod_p(aug, p)
    if ncols in pivots:
        return None
    x = [0] * ncols
    for r, c in enumerate(pivots):
        x[c] = m[r][ncols]
    return x
