"""Periods of holomorphic forms on a square-tiled cyclic cover.

The pillowcase is the torus C / (pi Z + pi tau Z) modulo v -> -v. Its front
face is the rectangle [0, pi/2] x [0, pi tau/2] with corners z_1 (v = 0), z_2
(pi/2), z_3 (pi/2 + pi tau/2), z_4 (pi tau/2); the back face sits above it.
Every square of the cover is one face on one sheet, so every edge integral is
an integral along a rectangle side between two branch points, computed in v
by Gauss-Jacobi quadrature with the exact corner exponents as weights.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import roots_jacobi

from .cyclic_cover import CyclicCoverSpec, build_cover, edge_labels
from .flat_surface import homology_model
from .hodge_quadrature import TorusEngine

# a_i sits at the corner of the front face it labels
SQUARE_LOCATIONS = ("0", "lam", "1", "inf")


class PeriodError(RuntimeError):
    pass


def symplectic_basis(j: np.ndarray) -> np.ndarray:
    """Columns a_1..a_g, b_1..b_g (rational) with x^T J y the standard form."""
    n = j.shape[0]
    jj = [[Fraction(int(x)) for x in row] for row in j]

    def form(x, y):
        return sum(x[r] * sum(jj[r][c] * y[c] for c in range(n) if y[c]) for r in range(n) if x[r])

    pool = [[Fraction(int(r == c)) for r in range(n)] for c in range(n)]
    avec, bvec = [], []
    while pool:
        a = pool.pop(0)
        k = next((i for i, y in enumerate(pool) if form(a, y) != 0), None)
        if k is None:
            raise PeriodError("intersection form is degenerate")
        b = pool.pop(k)
        s = form(a, b)
        b = [x / s for x in b]
        new = []
        for v in pool:
            vb, va = form(v, b), form(v, a)
            new.append([v[r] - vb * a[r] + va * b[r] for r in range(n)])
        pool = [v for v in new if any(v)]
        avec.append(a)
        bvec.append(b)
    out = np.array([[float(x) for x in col] for col in avec + bvec]).T
    return out


class CoverPeriods:
    """Edge and cycle periods of a monomial basis at a purely imaginary tau."""

    def __init__(self, spec: CyclicCoverSpec, tau: complex, n_nodes: int = 48):
        from .hodge_analytic import holomorphic_basis, omega_coordinates, teichmueller_point

        self.spec = spec
        self.tau = complex(tau)
        self.cover = build_cover(spec)
        self.model = homology_model(self.cover.origami)
        self.config = teichmueller_point(spec, self.tau, SQUARE_LOCATIONS)
        self.engine = TorusEngine(self.tau, list(SQUARE_LOCATIONS))
        self.basis = holomorphic_basis(spec, self.config)
        self.omega = omega_coordinates(self.config, self.basis)
        self.n_nodes = n_nodes
        pi, pt = math.pi, math.pi * self.tau
        self.corner_loc = {0: "0", 1: "lam", 2: "1", 3: "inf"}
        # corners of the union rectangle: front [0, pi/2] x [0, pt/2], back above
        self.corners = {"0": [0.0, pt], "lam": [pi / 2, pi / 2 + pt], "1": [pi / 2 + pt / 2], "inf": [pt / 2]}
        self.base = pi / 4 + pt / 2
        self._cache: dict = {}

    # -- branch of w --------------------------------------------------------

    def _logs(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Principal-ish log(z - z_i) per config point (rows) and log z'(v)."""
        eng = self.engine
        r1, r2, r3 = eng._ratios(0, v)
        logs = {"0": np.log(r1), "lam": np.log(r2), "1": np.log(r3)}
        out = np.zeros((len(SQUARE_LOCATIONS), len(v)), dtype=complex)
        for i, loc in enumerate(SQUARE_LOCATIONS):
            if loc != "inf":
                out[i] = eng.log_c[loc] + 2 * logs[loc]
        dz = eng.log_cd + np.log(r1) + np.log(r2) + np.log(r3)
        return out, dz

    def _continuous_logs(self, path: np.ndarray) -> np.ndarray:
        logs, _ = self._logs(path)
        return logs.real + 1j * np.unwrap(logs.imag, axis=1)

    def _side_logs(self, a: complex, b: complex, p: np.ndarray) -> np.ndarray:
        """Continuous log(z - z_i) at a + (b - a) p, reached from the base point."""
        mid = (a + b) / 2
        approach = self.base + (mid - self.base) * np.linspace(0.0, 1.0, 257)
        start = self._continuous_logs(approach)[:, -1]
        out = np.zeros((len(SQUARE_LOCATIONS), len(p)), dtype=complex)
        grid = np.linspace(0.0, 0.5, 257)
        for mask, direction in ((p >= 0.5, 1.0), (p < 0.5, -1.0)):
            idx = np.nonzero(mask)[0]
            if not len(idx):
                continue
            steps = np.concatenate([grid, np.abs(p[idx] - 0.5)])
            order = np.argsort(steps, kind="stable")
            logs = self._continuous_logs(mid + (b - a) * direction * steps[order])
            logs += start[:, None] - logs[:, :1]
            pos = np.empty(len(order), dtype=int)
            pos[order] = np.arange(len(order))
            out[:, idx] = logs[:, pos[len(grid):]]
        return out

    # -- edge integrals ----------------------------------------------------

    def _corner_exponent(self, loc: str, form) -> float:
        N, a = self.spec.N, self.spec.a
        if loc == "inf":
            deg = sum(form.exponents[i] for i, l in enumerate(SQUARE_LOCATIONS) if l != "inf")
            A = sum(a[i] for i, l in enumerate(SQUARE_LOCATIONS) if l != "inf")
            return -2 * deg - 3 + 2 * form.k * A / N
        i = SQUARE_LOCATIONS.index(loc)
        return 2 * form.exponents[i] + 1 - 2 * form.k * a[i] / N

    def _loc_of(self, v: complex) -> str:
        for loc, vs in self.corners.items():
            if any(abs(v - x) < 1e-9 for x in vs):
                return loc
        raise PeriodError(f"{v} is not a corner")

    def side_integral(self, a: complex, b: complex) -> np.ndarray:
        """int_a^b f dz / W^k for every basis form, W continuous on the union
        rectangle (the face factor is applied by the caller)."""
        key = (round(a.real, 9), round(a.imag, 9), round(b.real, 9), round(b.imag, 9))
        if key in self._cache:
            return self._cache[key]
        la, lb = self._loc_of(a), self._loc_of(b)
        N = self.spec.N
        out = np.zeros(len(self.basis), dtype=complex)
        for n_f, form in enumerate(self.basis):
            ea, eb = self._corner_exponent(la, form), self._corner_exponent(lb, form)
            with np.errstate(invalid="ignore"):  # 0/0 in scipy's recurrence when eb + ea = -1
                x, w = roots_jacobi(self.n_nodes, eb, ea)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
                raise PeriodError(f"Gauss-Jacobi nodes failed for exponents ({eb}, {ea})")
            p = (1 + x) / 2
            v = a + (b - a) * p
            logs = self._side_logs(a, b, p)
            _, dz = self._logs(v)
            finite = [i for i, l in enumerate(SQUARE_LOCATIONS) if l != "inf"]
            phi = sum(self.spec.a[i] * logs[i] for i in finite) / N
            lf = sum(form.exponents[i] * logs[i] for i in finite) - form.k * phi + dz
            # strip the Jacobi weight (1 - x)^eb (1 + x)^ea, in terms of |v - corner|
            lv = lf - eb * np.log(1 - x) - ea * np.log(1 + x)
            out[n_f] = (b - a) / 2 * np.sum(w * np.exp(lv))
        self._cache[key] = out
        return out

    def edge_periods(self) -> np.ndarray:
        """(basis, 2n) integrals over bottom edges b_i then left edges l_i."""
        n = self.cover.origami.n
        N = self.spec.N
        pi, pt = math.pi, math.pi * self.tau
        offset = {(0, 1): 0.0, (0, -1): pi / 2 + pt / 2, (1, 1): pt / 2, (1, -1): pi / 2 + pt}
        back = np.exp(2j * np.pi * edge_labels(self.spec)["T"] / N)
        ks = np.array([f.k for f in self.basis])
        out = np.zeros((len(self.basis), 2 * n), dtype=complex)
        for i in range(n):
            s, face = divmod(i, 2)
            sign = 1 if s % 2 == 0 else -1
            c = offset[(face, sign)]
            # sheet s carries w = zeta^-s W on the front face and zeta^(T-s) W on
            # the back, T the sheet shift across the top side
            twist = np.exp(2j * np.pi * ks * s / N) * (back ** (-ks) if face else 1.0)
            out[:, i] = twist * self.side_integral(c, c + sign * pi / 2)
            out[:, n + i] = twist * self.side_integral(c, c + sign * pt / 2)
        return out

    def cycle_periods(self) -> np.ndarray:
        return self.edge_periods() @ self.model.cycle_basis

    def omega_edges(self) -> np.ndarray:
        return self.omega @ self.edge_periods()


def period_matrix(per: CoverPeriods, symp: np.ndarray | None = None):
    """(Pi, D): Pi_ij = theta_i(b_j) with theta = basis @ D dual to the a-cycles."""
    g = per.model.genus
    s = symplectic_basis(per.model.intersection) if symp is None else symp
    q = per.cycle_periods() @ s
    a_per, b_per = q[:, :g], q[:, g:]
    d = np.linalg.inv(a_per).T
    return d.T @ b_per, d
