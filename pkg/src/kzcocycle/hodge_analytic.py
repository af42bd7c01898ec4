"""Hodge-bundle geometry of cyclic covers w^N = prod (z - z_i)^{a_i}.

Holomorphic forms are monomials f(z) dz / w^k with f a product of powers of
(z - z_i). All integrals are pushed forward to the sphere: summing over the N
sheets turns every pairing into N times a single density of the shape handled
by ``hodge_quadrature``, or into zero by a character sum.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .cyclic_cover import CyclicCoverSpec
from .hodge_quadrature import PlaneEngine, QuadratureSettings, TermBatch, TorusEngine, modular_lambda

INF = None  # marker for the point at infinity
RANK_TOL = 1e-5
STANDARD_LOCATIONS = ("0", "1", "lam", "inf")


class HodgeError(ValueError):
    pass


# --------------------------------------------------------------------------
# configurations


@dataclass
class BranchConfiguration:
    """Points of the extended plane (``None`` is infinity) with exponents.

    ``locations`` names each point among "0", "1", "lam", "inf" when the
    configuration comes from a point tau of the upper half-plane.
    ``omega`` optionally overrides the exponents of u in omega = u dz / w^(N/2).
    ``reference`` is the finite point around which the free part of each
    monomial basis is expanded; by default a point of the closest pair, which
    keeps the basis well conditioned when two branch points merge.
    """

    N: int
    a: tuple[int, ...]
    points: tuple
    tau: complex | None = None
    locations: tuple[str, ...] | None = None
    omega: tuple[int, ...] | None = None
    reference: int | None = None

    def __post_init__(self):
        if len(self.points) != len(self.a):
            raise HodgeError("one exponent per point")
        if sum(p is None for p in self.points) > 1:
            raise HodgeError("at most one point at infinity")
        finite = [complex(p) for p in self.points if p is not None]
        for i in range(len(finite)):
            for j in range(i):
                if finite[i] == finite[j]:
                    raise HodgeError("branch points must be distinct")
        if self.N % 2:
            raise HodgeError("omega needs N even")
        if None in self.points and self.a[self.points.index(None)] % self.N != self.a_inf:
            raise HodgeError("exponent at infinity violates the sum condition")

    @property
    def finite(self) -> list[int]:
        return [i for i, p in enumerate(self.points) if p is not None]

    def reference_point(self) -> int:
        if self.reference is not None:
            return self.reference
        fin = self.finite
        if len(fin) < 2:
            return fin[0]
        pts = [complex(self.points[i]) for i in fin]
        near = [min(abs(p - q) for q in pts if q is not p) for p in pts]
        return fin[int(np.argmin(near))]

    @property
    def a_inf(self) -> int:
        """Exponent over infinity forced by the sum condition."""
        return (-sum(self.a[i] for i in self.finite)) % self.N

    def ramification(self, i: int | None) -> int:
        a = self.a_inf if i is None else self.a[i]
        return self.N // math.gcd(self.N, a)

    def omega_exponents(self) -> tuple[int, ...]:
        if self.omega is not None:
            return tuple(self.omega)
        out = []
        for i, p in enumerate(self.points):
            if p is None:
                out.append(0)
            elif self.a[i] % 2 == 0:
                raise HodgeError("default omega needs odd exponents")
            else:
                out.append((self.a[i] - 1) // 2)
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "a": list(self.a),
            "points": ["inf" if p is None else [complex(p).real, complex(p).imag] for p in self.points],
            "tau": None if self.tau is None else [self.tau.real, self.tau.imag],
            "locations": None if self.locations is None else list(self.locations),
            "omega": list(self.omega_exponents()),
            "reference": self.reference_point(),
        }


def teichmueller_point(spec: CyclicCoverSpec, tau: complex, locations=STANDARD_LOCATIONS) -> BranchConfiguration:
    """Branch points {0, 1, lambda(tau), inf}; locations[i] is where a_i sits."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise HodgeError("tau must lie in the upper half-plane")
    if sorted(locations) != sorted(STANDARD_LOCATIONS):
        raise HodgeError(f"locations must be a permutation of {STANDARD_LOCATIONS}")
    lam = modular_lambda(tau)
    value = {"0": 0.0, "1": 1.0, "lam": lam, "inf": INF}
    return BranchConfiguration(spec.N, tuple(spec.a), tuple(value[x] for x in locations), tau, tuple(locations))


Z_POINTS = (0.0, 1.0, 0.5 + 1.0j, -0.5 + 0.8j, -1.0 - 0.3j, 0.3 - 1.0j)


def z_configuration(points=Z_POINTS) -> BranchConfiguration:
    """w^6 = prod_{i<=6} (z - z_i) with omega = (z - z_1) dz / w^3."""
    if len(points) != 6:
        raise HodgeError("the Z model has six branch points")
    return BranchConfiguration(6, (1,) * 6, tuple(complex(p) for p in points),
                               omega=(1, 0, 0, 0, 0, 0), reference=0)


# --------------------------------------------------------------------------
# holomorphic basis


@dataclass
class EigenDifferential:
    """prod_i (z - z_i)^{exponents[i]} dz / w^k."""

    k: int
    exponents: tuple[int, ...]
    valuation: dict[str, int]
    N: int

    @property
    def eigenvalue(self) -> complex:
        """Deck action (z, w) -> (z, zeta w) multiplies the form by zeta^-k."""
        return complex(np.exp(-2j * np.pi * self.k / self.N))

    def describe(self) -> str:
        parts = [f"(z-z{i + 1})^{e}" if e > 1 else f"(z-z{i + 1})" for i, e in enumerate(self.exponents) if e]
        return ("*".join(parts) + " " if parts else "") + f"dz/w^{self.k}"

    def to_json(self) -> dict:
        return {"k": self.k, "exponents": list(self.exponents), "valuation": dict(sorted(self.valuation.items())),
                "form": self.describe()}


def _t_value(config: BranchConfiguration, k: int) -> int:
    total = sum(Fraction(k * a, config.N) % 1 for a in config.a)
    if config.points.count(None) == 0:
        total += Fraction(k * config.a_inf, config.N) % 1
    if total.denominator != 1:
        raise HodgeError("exponents violate the sum condition")
    return int(total)


def valuation(config: BranchConfiguration, k: int, exps) -> dict[str, int]:
    """Order of f dz / w^k at every ramification point and over infinity."""
    N = config.N
    out = {}
    deg = 0
    total_a = 0
    for i in config.finite:
        e = config.ramification(i)
        s = exps[i]
        deg += s
        total_a += config.a[i]
        order = Fraction(e * (s + 1) - 1) - Fraction(k * e * config.a[i], N)
        out[f"z{i + 1}"] = int(order)
    e = config.ramification(None)
    order = Fraction(k * e * total_a, N) - e * (deg + 1) - 1
    out["inf"] = int(order)
    return out


def _basis_for_k(config: BranchConfiguration, k: int) -> list[EigenDifferential]:
    N = config.N
    fin = config.finite
    smin = [0] * len(config.points)
    for i in fin:
        e = config.ramification(i)
        smin[i] = math.ceil(Fraction(k * config.a[i], N) - 1 + Fraction(1, e))
        smin[i] = max(smin[i], 0)
    total_a = sum(config.a[i] for i in fin)
    e_inf = config.ramification(None)
    max_deg = math.floor(Fraction(k * total_a, N) - 1 - Fraction(1, e_inf))
    extra = max_deg - sum(smin)
    ref = config.reference_point()
    out = []
    for j in range(extra + 1):
        exps = list(smin)
        exps[ref] += j
        val = valuation(config, k, exps)
        if min(val.values()) < 0:
            raise HodgeError(f"valuation bug: negative order {val} for k={k}")
        out.append(EigenDifferential(k, tuple(exps), val, N))
    return out


def holomorphic_basis(spec: CyclicCoverSpec | None, config: BranchConfiguration) -> list[EigenDifferential]:
    """Monomial basis of H^{1,0}, checked against t(k) - 1 forms per k."""
    if spec is not None and (spec.N != config.N or tuple(spec.a) != tuple(config.a)):
        raise HodgeError("configuration does not match the spec")
    out = []
    for k in range(1, config.N):
        forms = _basis_for_k(config, k)
        expected = _t_value(config, k) - 1
        if len(forms) != max(expected, 0):
            raise HodgeError(f"k={k}: {len(forms)} monomials but t(k) - 1 = {expected}")
        out += forms
    return out


def _poly(config: BranchConfiguration, exps) -> np.ndarray:
    roots = []
    for i in config.finite:
        roots += [complex(config.points[i])] * exps[i]
    return np.polynomial.polynomial.polyfromroots(roots) if roots else np.array([1.0 + 0j])


def omega_coordinates(config: BranchConfiguration, basis: list[EigenDifferential]) -> np.ndarray:
    """Coefficients of omega in ``basis`` (zero outside k = N/2)."""
    half = config.N // 2
    idx = [i for i, f in enumerate(basis) if f.k == half]
    target = _poly(config, config.omega_exponents())
    polys = [_poly(config, basis[i].exponents) for i in idx]
    n = max([len(target)] + [len(p) for p in polys])
    mat = np.zeros((n, len(idx)), dtype=complex)
    for c, p in enumerate(polys):
        mat[: len(p), c] = p
    rhs = np.zeros(n, dtype=complex)
    rhs[: len(target)] = target
    coef, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    if np.linalg.norm(mat @ coef - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        raise HodgeError("omega is not in the span of the k = N/2 forms")
    out = np.zeros(len(basis), dtype=complex)
    out[idx] = coef
    return out


# --------------------------------------------------------------------------
# quadrature plumbing


def _engine(config: BranchConfiguration, settings: QuadratureSettings | None, engine: str | None):
    kind = engine or ("torus" if config.locations is not None else "plane")
    if kind == "torus":
        if config.locations is None:
            raise HodgeError("the torus engine needs a configuration built from tau")
        return TorusEngine(config.tau, list(config.locations), settings), list(range(len(config.points)))
    if kind == "plane":
        cols = config.finite
        return PlaneEngine([complex(config.points[i]) for i in cols], settings), cols
    raise HodgeError(f"unknown engine {kind!r}")


def _character_sum(N: int, m: int) -> int:
    """sum_j zeta^(j m) over j mod N, rounded to the exact integer."""
    s = sum(np.exp(2j * np.pi * j * m / N) for j in range(N))
    return int(round(s.real))


@dataclass
class _Integrals:
    gram: np.ndarray
    bform: np.ndarray
    gram_err: np.ndarray
    bform_err: np.ndarray

    def scaled_error(self, other: "_Integrals | None" = None) -> float:
        """Largest entry error in units of sqrt(G_ii G_jj), i.e. for unit forms.

        With ``other`` the entrywise difference is included as well.
        """
        d = np.sqrt(np.abs(np.diag(self.gram)))
        unit = np.outer(d, d)
        unit[unit == 0] = 1.0
        ge, be = self.gram_err, self.bform_err
        if other is not None:
            ge = np.maximum(ge, np.abs(self.gram - other.gram))
            be = np.maximum(be, np.abs(self.bform - other.bform))
        return float(max((ge / unit).max(), (be / unit).max()))


def _integrals(config, basis, settings, engine, cols) -> _Integrals:
    N = config.N
    om = config.omega_exponents()
    # the column of a point at infinity carries no factor
    av = [0 if config.points[c] is None else config.a[c] for c in cols]
    n = len(basis)
    rows, where = [], []
    for i in range(n):
        for j in range(i, n):
            fi, fj = basis[i], basis[j]
            if _character_sum(N, fi.k - fj.k):
                rows.append(([fi.exponents[c] for c in cols], [fj.exponents[c] for c in cols],
                             [-2.0 * fi.k * x / N for x in av], N))
                where.append(("g", i, j))
            if _character_sum(N, fi.k + fj.k - N):
                rows.append(([fi.exponents[c] + fj.exponents[c] - om[c] for c in cols], [om[c] for c in cols],
                             [-float(x) for x in av], N))
                where.append(("b", i, j))
    out = _Integrals(*(np.zeros((n, n), dtype=complex) for _ in range(2)), *(np.zeros((n, n)) for _ in range(2)))
    if not rows:
        return out
    vals, errs = engine.integrate(TermBatch.build(rows), settings)
    for (kind, i, j), v, e in zip(where, vals, errs):
        if kind == "g":
            out.gram[i, j] = v
            out.gram[j, i] = np.conj(v)
            out.gram_err[i, j] = out.gram_err[j, i] = e
        else:
            out.bform[i, j] = out.bform[j, i] = v
            out.bform_err[i, j] = out.bform_err[j, i] = e
    return out


def _orthonormal_frame(gram: np.ndarray, basis, omega: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Columns: omega / |omega| first, then Gram-Schmidt of each k block."""
    n = len(basis)

    def inner(u, v):
        return u @ gram @ v.conj()

    ks = sorted({f.k for f in basis}, key=lambda k: (k != basis[0].N // 2, k))
    cols, labels = [], []
    for k in ks:
        idx = [i for i, f in enumerate(basis) if f.k == k]
        cand = []
        if k == basis[0].N // 2:
            cand.append(omega)
        for i in idx:
            e = np.zeros(n, dtype=complex)
            e[i] = 1.0
            cand.append(e)
        block = []
        for v in cand:
            norm0 = math.sqrt(max(inner(v, v).real, 0.0))
            for u in block:
                v = v - inner(v, u) * u
            for u in block:
                v = v - inner(v, u) * u
            nv = math.sqrt(max(inner(v, v).real, 0.0))
            if nv <= 1e-7 * norm0:
                continue
            block.append(v / nv)
        if len(block) != len(idx):
            raise HodgeError(f"Gram matrix is degenerate in block k={k}")
        cols += block
        labels += [k] * len(block)
    return np.array(cols).T, labels


# --------------------------------------------------------------------------
# second fundamental form


@dataclass
class SecondFundamentalFormMatrix:
    frame: np.ndarray  # basis coefficients of the orthonormal frame, columns
    frame_k: list[int]
    basis: list[EigenDifferential]
    B: np.ndarray
    H: np.ndarray
    Lambda: np.ndarray
    singular_values: np.ndarray
    rank: int
    indeterminate: bool
    annihilator: np.ndarray  # frame coordinates, columns
    quadrature_error: float
    gram: np.ndarray
    config: BranchConfiguration
    settings: dict = field(default_factory=dict)

    @property
    def genus(self) -> int:
        return len(self.frame_k)

    @property
    def eigenvalues(self) -> list[complex]:
        N = self.config.N
        return [complex(np.exp(-2j * np.pi * k / N)) for k in self.frame_k]

    def block_trace(self, divisor: int) -> float:
        """tr H over the frame vectors whose deck eigenvalue has order ``divisor``."""
        N = self.config.N
        idx = [i for i, k in enumerate(self.frame_k) if N // math.gcd(N, k) == divisor]
        return float(np.real(np.trace(self.H[np.ix_(idx, idx)]))) if idx else 0.0

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "basis": [f.to_json() for f in self.basis],
            "frame_k": list(self.frame_k),
            "B": complex_matrix_json(self.B),
            "H": complex_matrix_json(self.H),
            "Lambda": [float(x) for x in self.Lambda],
            "singular_values": [float(x) for x in self.singular_values],
            "rank": self.rank,
            "indeterminate": self.indeterminate,
            "annihilator": complex_matrix_json(self.annihilator),
            "quadrature_error": self.quadrature_error,
            "quadrature": self.settings,
        }


def complex_matrix_json(m: np.ndarray) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def rank_decision(sv: np.ndarray, rank_tol: float = RANK_TOL) -> tuple[int, bool]:
    """Rank of unit-norm-scaled singular values; flags values near rank_tol."""
    if len(sv) == 0 or sv[0] == 0:
        return 0, False
    s = sv / sv[0]
    rank = int(np.sum(s > rank_tol))
    ambiguous = bool(np.any((s >= rank_tol / 10) & (s <= rank_tol * 10)))
    return rank, ambiguous


def second_fundamental_form(spec: CyclicCoverSpec | None, config: BranchConfiguration,
                            settings: QuadratureSettings | None = None, engine: str | None = None,
                            self_check: bool = True, rank_tol: float = RANK_TOL) -> SecondFundamentalFormMatrix:
    basis = holomorphic_basis(spec, config)
    eng, cols = _engine(config, settings, engine)
    st = settings or eng.settings
    fine = _integrals(config, basis, st, eng, cols)
    coarse = _integrals(config, basis, st.coarser(), eng, cols) if self_check else None
    err = fine.scaled_error(coarse)
    omega = omega_coordinates(config, basis)
    frame, frame_k = _orthonormal_frame(fine.gram, basis, omega)
    # omega's frame vector is omega / |omega|: keep the phase of omega itself
    B = frame.T @ fine.bform @ frame
    B = (B + B.T) / 2
    H = B @ B.conj().T
    H = (H + H.conj().T) / 2
    lam = np.sort(np.linalg.eigvalsh(H))[::-1]
    _, sv, vh = np.linalg.svd(B)
    rank, ambiguous = rank_decision(sv, rank_tol)
    if ambiguous:
        warnings.warn("rank of B is indeterminate at this tolerance", RuntimeWarning, stacklevel=2)
    null = vh[rank:].conj().T
    meta = {"engine": type(eng).__name__, "n_r": st.n_r, "n_theta": st.n_theta, "n_s": st.n_s,
            "rho": st.rho, "kappa": st.kappa, "epsabs": st.epsabs, "epsrel": st.epsrel, "rank_tol": rank_tol}
    return SecondFundamentalFormMatrix(frame, frame_k, basis, B, H, lam, sv, rank, ambiguous, null, err,
                                       fine.gram, config, meta)


def takagi(B: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """B = U diag(s) U^T with U unitary, for complex symmetric B."""
    w, s, vh = np.linalg.svd(B)
    vbar = vh.T  # conj of V
    d = w.conj().T @ vbar
    n = len(s)
    u = w.astype(complex).copy()
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(s[j] - s[i]) <= tol * max(1.0, s[0]):
            j += 1
        if s[i] > tol * max(1.0, s[0]):
            blk = d[i:j, i:j]
            root = scipy.linalg.sqrtm(blk)
            u[:, i:j] = w[:, i:j] @ root
        i = j
    return s, u


# --------------------------------------------------------------------------
# algebraic evaluators


def symmetry_zero_pattern(eigenvalues, u: complex, tol: float = 1e-9) -> tuple[np.ndarray, int]:
    """Entries (i, j) forced to vanish (u_i u_j != u^2) and the rank bound.

    Frame vectors are grouped by eigenvalue; a pair of groups (mu, mu') with
    mu mu' = u^2 contributes at most 2 min(#mu, #mu') to the rank, a group
    paired with itself at most #mu.
    """
    ev = np.asarray(eigenvalues, dtype=complex)
    if np.any(np.abs(np.abs(ev) - 1) > tol) or abs(abs(u) - 1) > tol:
        raise HodgeError("eigenvalues must have unit modulus")
    target = u * u
    mask = np.abs(ev[:, None] * ev[None, :] - target) > tol
    groups: list[tuple[complex, int]] = []
    for x in ev:
        for gi, (y, c) in enumerate(groups):
            if abs(x - y) <= tol:
                groups[gi] = (y, c + 1)
                break
        else:
            groups.append((x, 1))
    bound = 0
    for gi, (x, cx) in enumerate(groups):
        for gj in range(gi, len(groups)):
            y, cy = groups[gj]
            if abs(x * y - target) <= tol:
                bound += cx if gi == gj else 2 * min(cx, cy)
    return mask, bound


def _check_unitary(u: np.ndarray, tol: float = 1e-8) -> None:
    if np.abs(u.conj().T @ u - np.eye(u.shape[1])).max() > tol:
        raise HodgeError("frame change is not unitary (non-orthonormal frame)")


def phi_k(B: np.ndarray, H: np.ndarray, k: int, subset=None, unitary: np.ndarray | None = None) -> tuple[float, float]:
    """Phi_k of the isotropic span of Re(omega_i), i in ``subset`` (default the
    first k frame vectors), optionally after the frame change ``unitary``.

    Returns (2 sum H_ii - sum |B_ij|^2 over the subset,
             sum Lambda - sum |B_ij|^2 over the complement).
    """
    g = B.shape[0]
    if not 1 <= k <= g:
        raise HodgeError(f"k={k} outside 1..{g}")
    if unitary is not None:
        _check_unitary(unitary)
        B = unitary.T @ B @ unitary
        H = unitary.T @ H @ unitary.conj()
    sub = list(range(k)) if subset is None else list(subset)
    if len(sub) != k or len(set(sub)) != k:
        raise HodgeError("subset must list k distinct frame indices")
    rest = [i for i in range(g) if i not in sub]
    first = 2 * float(np.real(np.trace(H[np.ix_(sub, sub)]))) - float(np.sum(np.abs(B[np.ix_(sub, sub)]) ** 2))
    lam = np.linalg.eigvalsh((H + H.conj().T) / 2)
    second = float(np.sum(lam)) - float(np.sum(np.abs(B[np.ix_(rest, rest)]) ** 2))
    return first, second


@dataclass
class HodgeStarOps:
    """Real frame (Re w_1, Im w_1, Re w_2, ...) of an orthonormal frame."""

    star: np.ndarray
    symplectic: np.ndarray
    product: np.ndarray


def hodge_star_ops(g: int) -> HodgeStarOps:
    star = np.kron(np.eye(g, dtype=np.int64), np.array([[0, -1], [1, 0]]))
    sym = np.kron(np.eye(g, dtype=np.int64), np.array([[0, 1], [-1, 0]]))
    return HodgeStarOps(star, sym, sym @ star)


def real_to_holomorphic(g: int) -> np.ndarray:
    """P with h(c) = sum_i (P c)_i w_i: coordinates (x, y) give x - i y."""
    p = np.zeros((g, 2 * g), dtype=complex)
    for i in range(g):
        p[i, 2 * i] = 1.0
        p[i, 2 * i + 1] = -1j
    return p


def b_real(B: np.ndarray) -> np.ndarray:
    p = real_to_holomorphic(B.shape[0])
    return p.T @ B @ p


def h_real(H: np.ndarray) -> np.ndarray:
    p = real_to_holomorphic(H.shape[0])
    return p.T @ H @ p.conj()


def real_rank(form: np.ndarray, tol: float = 1e-8) -> int:
    """Rank of a complex-valued bilinear form on a real space, over R."""
    stacked = np.vstack([form.real, form.imag])
    sv = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0] if len(sv) else 0.0)))


def real_annihilator(B: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Basis (columns) of {c : B^R(c, .) = 0}."""
    form = b_real(B)
    stacked = np.vstack([form.real, form.imag])
    _, sv, vh = np.linalg.svd(stacked)
    rank = int(np.sum(sv > tol * max(1.0, sv[0] if len(sv) else 0.0)))
    return vh[rank:].T


def laplacian_rhs(B: np.ndarray, H: np.ndarray, c) -> float:
    """4 H^R(c,c)/|c|^2 - 2 |B^R(c,c)|^2/|c|^4 for a real class c in the frame."""
    c = np.asarray(c, dtype=float)
    n2 = float(c @ c)
    if n2 == 0:
        raise HodgeError("c must be nonzero")
    a = real_to_holomorphic(B.shape[0]) @ c
    h = float(np.real(a @ H @ a.conj()))
    b = a @ B @ a
    return 4 * h / n2 - 2 * abs(b) ** 2 / n2**2


# --------------------------------------------------------------------------
# Monte-Carlo average over the Teichmueller curve

LIGHT_SETTINGS = QuadratureSettings(n_r=48, n_theta=32, rho=0.6, kappa=14.0, n_s=64, epsabs=1e-10, epsrel=1e-8)
CUSP_CLAMP = 100.0
_LABEL_ORDERS = ("0", "1", "inf")


def _tau_from_unit(p: float, q: float, clamp: float) -> complex:
    """Map (p, q) in [0,1)^2 to dx dy / y^2 on |x| <= 1/2, |tau| >= 1."""
    x = math.sin(math.pi / 3 * (p - 0.5))
    y = math.sqrt(1 - x * x) / (1.0 - q)
    return complex(x, min(y, clamp))


ARRANGEMENTS = tuple(itertools.permutations(_LABEL_ORDERS))


def sample_plan(rng: np.random.Generator, n: int, clamp: float = CUSP_CLAMP) -> list[tuple[complex, tuple[str, ...]]]:
    """Stratified sample of (tau, locations).

    tau: Latin hypercube in the two uniform coordinates of the hyperbolic
    measure on the fundamental domain, Im tau capped at ``clamp``. Locations:
    a_3 stays at lambda and (a_1, a_2, a_4) run through the six arrangements
    of {0, 1, inf} cyclically from a random start. Every marginal is exact,
    so averages stay unbiased.
    """
    p = (rng.permutation(n) + rng.uniform(size=n)) / n
    q = (rng.permutation(n) + rng.uniform(size=n)) / n
    start = int(rng.integers(len(ARRANGEMENTS)))
    out = []
    for i in range(n):
        arr = ARRANGEMENTS[(start + i) % len(ARRANGEMENTS)]
        out.append((_tau_from_unit(p[i], q[i], clamp), (arr[0], arr[1], "lam", arr[2])))
    return out


@dataclass
class KontsevichReport:
    spec: str
    taus: list[complex]
    locations: list[tuple[str, ...]]
    traces: np.ndarray  # sum of Lambda per sample
    block_traces: dict[str, np.ndarray]
    max_quadrature_error: float
    lyapunov_sum: float | None = None
    lyapunov_blocks: dict[str, float] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(self.traces.mean())

    @property
    def stderr(self) -> float:
        n = len(self.traces)
        return float(self.traces.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")

    def block_mean(self, label: str) -> float:
        return float(self.block_traces[label].mean())

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "samples": len(self.traces),
            "mean_trace": self.mean,
            "stderr": self.stderr,
            "max_deviation_from_mean": float(np.abs(self.traces - self.mean).max()),
            "block_means": {k: float(v.mean()) for k, v in sorted(self.block_traces.items())},
            "lyapunov_sum": self.lyapunov_sum,
            "lyapunov_blocks": dict(sorted(self.lyapunov_blocks.items())),
            "max_quadrature_error": self.max_quadrature_error,
            "taus": [[t.real, t.imag] for t in self.taus],
            "locations": [list(x) for x in self.locations],
            "traces": [float(x) for x in self.traces],
        }


def nonnegative_block_sums(report) -> tuple[float, dict[str, float]]:
    """Sum of the non-negative half of the spectrum, in total and per block."""
    blocks = {}
    for label, data in report.blocks.items():
        ex = list(data["exponents"])
        blocks[label] = float(sum(ex[: len(ex) // 2]))
    total = float(sum(report.nonnegative())) if report.exponents else float(sum(blocks.values()))
    return total, blocks


def kontsevich_check(spec: CyclicCoverSpec, samples: int, seed: int = 0, lyapunov=None,
                     settings: QuadratureSettings = LIGHT_SETTINGS) -> KontsevichReport:
    """Average tr H (and its restriction to each rational deck block) over
    tau sampled from the hyperbolic measure, with a random labelling of the
    three cusps; optionally paired with simulated exponents."""
    if samples < 2:
        raise HodgeError("need at least two samples for an error bar")
    plan = sample_plan(np.random.default_rng(seed), samples)
    divisors = [d for d in range(1, spec.N + 1) if spec.N % d == 0]
    taus, locs, traces = [], [], []
    blocks = {f"d={d}": [] for d in divisors}
    worst = 0.0
    for tau, loc in plan:
        with warnings.catch_warnings():
            # only traces are used here; the rank decision is irrelevant
            warnings.filterwarnings("ignore", "rank of B is indeterminate", RuntimeWarning)
            sff = second_fundamental_form(spec, teichmueller_point(spec, tau, loc), settings=settings,
                                          self_check=False)
        taus.append(tau)
        locs.append(loc)
        traces.append(float(np.sum(sff.Lambda)))
        for d in divisors:
            blocks[f"d={d}"].append(sff.block_trace(d))
        worst = max(worst, sff.quadrature_error)
    rep = KontsevichReport(str(spec), taus, locs, np.array(traces), {k: np.array(v) for k, v in blocks.items()}, worst)
    if lyapunov is not None:
        rep.lyapunov_sum, rep.lyapunov_blocks = nonnegative_block_sums(lyapunov)
    return rep


# --------------------------------------------------------------------------
# period matrix variation


@dataclass
class RauchReport:
    spec: str
    tau: complex
    dts: list[float]
    period_matrix: np.ndarray
    symmetry_defect: float
    min_imag_eigenvalue: float
    derivative: list[np.ndarray]  # central differences, one per dt
    predicted: np.ndarray  # B(theta_i, theta_j)
    relative_errors: list[float]
    observed_order: float | None
    direction: int = -1
    flow_constant: complex = -2j
    raw_relative_error: float = float("nan")  # against B without the flow constant

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "tau": [self.tau.real, self.tau.imag],
            "dts": self.dts,
            "period_matrix": complex_matrix_json(self.period_matrix),
            "symmetry_defect": self.symmetry_defect,
            "min_imag_eigenvalue": self.min_imag_eigenvalue,
            "predicted": complex_matrix_json(self.predicted),
            "finite_differences": [complex_matrix_json(d) for d in self.derivative],
            "relative_errors": self.relative_errors,
            "observed_order": self.observed_order,
            "direction": self.direction,
            "flow_constant": [self.flow_constant.real, self.flow_constant.imag],
            "raw_relative_error": self.raw_relative_error,
        }


def rauch_check(spec: CyclicCoverSpec, tau: complex = 1j, dt: float = 1e-3, halvings: int = 1,
                settings: QuadratureSettings | None = None, direction: int = -1) -> RauchReport:
    """Central difference of the period matrix along tau(t) = tau e^(2 direction t)
    against B(theta_i, theta_j) for the dual basis theta.

    direction = -1 is the horizontal stretch diag(e^t, e^-t). The t-derivative
    of Pi equals 2i direction B, the constant fixed by a flat torus, where
    d tau / dt = 2i direction Im tau and B(dz, dz) = Im tau.
    """
    from .periods import SQUARE_LOCATIONS, CoverPeriods, period_matrix, symplectic_basis

    tau = complex(tau)
    if abs(tau.real) > 1e-14 or tau.imag <= 0:
        raise HodgeError("the square-tiled period model needs tau on the positive imaginary axis")
    base = CoverPeriods(spec, tau)
    symp = symplectic_basis(base.model.intersection)
    pi0, d = period_matrix(base, symp)
    # B in the monomial basis, with omega's phase fixed by the flat structure
    config = teichmueller_point(spec, tau, SQUARE_LOCATIONS)
    basis = holomorphic_basis(spec, config)
    eng, cols = _engine(config, settings, "torus")
    ints = _integrals(config, basis, settings or eng.settings, eng, cols)
    if direction not in (1, -1):
        raise HodgeError("direction must be +1 or -1")
    c = base.omega_edges()[0]
    b_theta = (c / np.conj(c)) * (d.T @ ints.bform @ d)
    flow = 2j * direction
    predicted = flow * b_theta
    dts = [dt / 2**i for i in range(halvings + 1)]
    derivs, errs = [], []
    scale = np.abs(predicted).max()
    for h in dts:
        plus, _ = period_matrix(CoverPeriods(spec, tau * math.exp(2 * direction * h)), symp)
        minus, _ = period_matrix(CoverPeriods(spec, tau * math.exp(-2 * direction * h)), symp)
        fd = (plus - minus) / (2 * h)
        derivs.append(fd)
        errs.append(float(np.abs(fd - predicted).max() / scale))
    order = None
    if len(errs) > 1 and errs[-1] > 0:
        order = float(math.log2(errs[-2] / errs[-1]))
    imag = np.linalg.eigvalsh((pi0.imag + pi0.imag.T) / 2)
    raw = float(np.abs(derivs[0] - b_theta).max() / np.abs(b_theta).max())
    return RauchReport(str(spec), tau, dts, pi0, float(np.abs(pi0 - pi0.T).max()), float(imag.min()),
                       derivs, predicted, errs, order, direction, flow, raw)
