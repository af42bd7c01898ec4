"""Quadrature of algebraic densities on the Riemann sphere.

A density is a sum of terms

    coef * prod_i (z - z_i)^m_i * conj(z - z_i)^n_i * |z - z_i|^p_i  dA

over the finite branch points. Each term behaves like a power of the distance
near every branch point and near infinity. Two engines integrate such terms:

* ``TorusEngine`` for four branch points {0, 1, lambda, inf}: the sphere is
  the quotient of the flat torus C / (pi Z + pi tau Z) by v -> -v, with
  z(v) written through Jacobi theta functions. Branch points become the four
  half-periods and the densities become milder there.
* ``PlaneEngine`` for any number of finite points, working in the z-plane with
  a chart t = 1 / (z - c) near infinity.

Both use polar patches with Gauss-Jacobi radial nodes matched to the local
power, a smooth erfc partition, and a periodic trapezoid rule (exponentially
accurate for smooth periodic integrands) combined with adaptive quadrature
on the smooth remainder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import erfc, roots_jacobi


class QuadratureError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# theta functions and the modular lambda function

THETA_TERMS = 8


def thetas(v, tau: complex, nmax: int = THETA_TERMS):
    """Jacobi theta_1..theta_4 at v with nome q = exp(i pi tau).

    Each series term is exponentiated as a whole, so large Im v does not
    overflow as long as |Im v| <= pi Im(tau) / 2 + O(1).
    """
    v = np.asarray(v, dtype=complex)[..., None]
    n = np.arange(-nmax, nmax + 1)
    half = n + 0.5
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    e_int = np.exp(1j * np.pi * tau * n**2 + 2j * n * v)
    e_half = np.exp(1j * np.pi * tau * half**2 + 1j * (2 * n + 1) * v)
    t1 = -1j * (sign * e_half).sum(-1)
    t2 = e_half.sum(-1)
    t3 = e_int.sum(-1)
    t4 = (sign * e_int).sum(-1)
    return t1, t2, t3, t4


def theta_constants(tau: complex):
    _, t2, t3, t4 = thetas(0.0, tau)
    return complex(t2), complex(t3), complex(t4)


def modular_lambda(tau: complex) -> complex:
    if tau.imag <= 0:
        raise ValueError("tau must lie in the upper half-plane")
    t2, t3, _ = theta_constants(tau)
    return (t2 / t3) ** 4


# --------------------------------------------------------------------------
# densities


@dataclass
class TermBatch:
    """K terms over P finite points: exponent arrays of shape (K, P)."""

    m: np.ndarray
    n: np.ndarray
    p: np.ndarray
    coef: np.ndarray

    @classmethod
    def build(cls, rows) -> "TermBatch":
        """rows: iterable of (m, n, p, coef)."""
        rows = list(rows)
        m = np.array([r[0] for r in rows], dtype=float)
        n = np.array([r[1] for r in rows], dtype=float)
        p = np.array([r[2] for r in rows], dtype=float)
        c = np.array([r[3] for r in rows], dtype=complex)
        return cls(m, n, p, c)

    def __len__(self) -> int:
        return len(self.coef)

    @property
    def radial(self) -> np.ndarray:
        return self.m + self.n + self.p

    @property
    def angular(self) -> np.ndarray:
        return self.m - self.n

    def evaluate(self, logabs: np.ndarray, arg: np.ndarray, extra_log: np.ndarray | float = 0.0) -> np.ndarray:
        """Values (K, npts) from log|z - z_i| and arg(z - z_i), both (P, npts)."""
        lg = self.radial @ logabs + extra_log
        ph = self.angular @ arg
        return self.coef[:, None] * np.exp(lg + 1j * ph)


def bump(r, rho: float, kappa: float):
    return 0.5 * erfc(kappa * (r / rho - 1.0))


@lru_cache(maxsize=256)
def _jacobi(n: int, beta: float):
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def _polar_patch(batch: TermBatch, betas: np.ndarray, local, radius: float, n_r: int, n_theta: int) -> np.ndarray:
    """sum over a disc of radius ``radius`` of r^beta-weighted smooth parts.

    ``local(r, theta)`` returns (logabs, arg, extra_log) on the flattened
    polar grid, where extra_log already includes the cutoff and Jacobian
    factors other than r^beta.
    """
    out = np.zeros(len(batch), dtype=complex)
    theta = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    keys = np.round(betas, 12)
    for key in np.unique(keys):
        idx = np.nonzero(keys == key)[0]
        beta = float(key)
        if beta <= -2.0:
            raise QuadratureError(f"non-integrable power r^{beta:g} at a branch point")
        x, w = _jacobi(n_r, beta + 1.0)
        r = radius * (1.0 + x) / 2.0
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        logabs, arg, extra = local(rr.ravel(), tt.ravel())
        sub = TermBatch(batch.m[idx], batch.n[idx], batch.p[idx], batch.coef[idx])
        vals = sub.evaluate(logabs, arg, extra - beta * np.log(rr.ravel()))
        vals = vals.reshape(len(idx), n_r, n_theta).sum(axis=2) * (2 * np.pi / n_theta)
        scale = (radius / 2.0) ** (beta + 2.0)
        out[idx] = scale * (vals @ w)
    return out


def _quad_complex(f, a: float, b: float, epsabs: float, epsrel: float, limit: int = 2000, n_probe: int = 65):
    """Adaptive integral of a vector of complex functions.

    Each component is divided by a magnitude probe (mean |f| on a uniform
    grid) so the max-norm tolerance applies to every entry relative to its
    own size. Returns values and per-entry error estimates.
    """
    probe = np.abs(np.array([f(x) for x in np.linspace(a, b, n_probe)])).mean(axis=0) * (b - a)
    scale = np.where(probe > 0, probe, 1.0)

    def g(x):
        v = f(x) / scale
        return np.concatenate([v.real, v.imag])

    val, err = quad_vec(g, a, b, epsabs=epsabs, epsrel=epsrel, norm="max", limit=limit)
    k = len(val) // 2
    return (val[:k] + 1j * val[k:]) * scale, float(err) * scale


@dataclass
class QuadratureSettings:
    n_r: int = 96
    n_theta: int = 64
    rho: float = 0.6
    kappa: float = 14.0
    n_s: int = 128
    epsabs: float = 1e-12
    epsrel: float = 1e-11

    def coarser(self) -> "QuadratureSettings":
        return QuadratureSettings(max(8, self.n_r * 2 // 3), max(8, self.n_theta * 2 // 3), self.rho, self.kappa,
                                  max(16, self.n_s * 2 // 3), self.epsabs * 10, self.epsrel * 10)

    def finer(self) -> "QuadratureSettings":
        return QuadratureSettings(self.n_r * 3 // 2, self.n_theta * 3 // 2, self.rho, self.kappa,
                                  self.n_s * 3 // 2, self.epsabs / 10, self.epsrel / 10)


# --------------------------------------------------------------------------
# torus engine


class TorusEngine:
    """Sphere with branch points {0, 1, lambda(tau), inf}.

    ``location`` gives, for each configuration point, one of "0", "1", "lam",
    "inf". Terms carry one exponent column per configuration point; the column
    of the point at infinity must be zero.
    """

    HALF_PERIODS = {"0": 0, "lam": 1, "inf": 2, "1": 3}

    def __init__(self, tau: complex, location: list[str], settings: QuadratureSettings | None = None):
        if tau.imag <= 0:
            raise ValueError("tau must lie in the upper half-plane")
        self.tau = complex(tau)
        self.location = list(location)
        self.settings = settings or QuadratureSettings()
        t2, t3, t4 = theta_constants(self.tau)
        self.lam = (t2 / t3) ** 4
        # z = c0 R1^2, z - lam = cl R2^2, z - 1 = c1 R3^2, z' = cd R1 R2 R3
        self.log_c = {
            "0": np.log(t2**2 / t3**2),
            "lam": np.log(-(t2**2) * t4**2 / t3**4),
            "1": np.log(-(t4**2) / t3**2),
        }
        self.log_cd = np.log(2 * t2**2 * t4**2 / t3**2)
        pi, pt = np.pi, np.pi * self.tau
        self.centers = [0.0, pi / 2, pt / 2, pi / 2 + pt / 2]
        self.finite = [i for i, loc in enumerate(self.location) if loc != "inf"]

    def point_value(self, loc: str) -> complex:
        return {"0": 0.0, "1": 1.0, "lam": self.lam, "inf": math.inf}[loc]

    def _ratios(self, which: int, d):
        """(R1, R2, R3) at center ``which`` + d, via shifted identities."""
        t1, t2, t3, t4 = thetas(d, self.tau)
        if which == 0:
            return t1 / t4, t2 / t4, t3 / t4
        if which == 1:
            return t2 / t3, -t1 / t3, t4 / t3
        if which == 2:
            return t4 / t1, t3 / (1j * t1), t2 / (1j * t1)
        return t3 / t2, -1j * t4 / t2, 1j * t1 / t2

    def _factors(self, which: int, d):
        r1, r2, r3 = self._ratios(which, d)
        logs = {"0": np.log(r1), "lam": np.log(r2), "1": np.log(r3)}
        npts = len(d)
        logabs = np.zeros((len(self.location), npts))
        arg = np.zeros((len(self.location), npts))
        for i, loc in enumerate(self.location):
            if loc == "inf":
                continue
            lg = self.log_c[loc] + 2 * logs[loc]
            logabs[i] = lg.real
            arg[i] = lg.imag
        jac = 2 * (self.log_cd + np.log(r1) + np.log(r2) + np.log(r3)).real
        return logabs, arg, jac

    def local_beta(self, batch: TermBatch, loc: str) -> np.ndarray:
        if loc == "inf":
            return -2.0 * batch.radial.sum(axis=1) - 6.0
        i = self.location.index(loc)
        return 2.0 * batch.radial[:, i] + 2.0

    def _nearest(self, v: np.ndarray, center: complex) -> np.ndarray:
        """Distance from v to the lattice orbit of ``center``."""
        d = v - center
        t = d.imag / (np.pi * self.tau.imag)
        s = (d.real - np.pi * self.tau.real * t) / np.pi
        s -= np.round(s)
        t -= np.round(t)
        best = np.full(v.shape, np.inf)
        for ds in (-1, 0, 1):
            for dt in (-1, 0, 1):
                w = np.pi * ((s + ds) + self.tau * (t + dt))
                best = np.minimum(best, np.abs(w))
        return best

    def integrate(self, batch: TermBatch, settings: QuadratureSettings | None = None):
        """Sphere integrals of all terms; returns (values, per-term error estimates)."""
        st = settings or self.settings
        for j, loc in enumerate(self.location):
            if loc == "inf" and (np.any(batch.m[:, j]) or np.any(batch.n[:, j]) or np.any(batch.p[:, j])):
                raise QuadratureError("the point at infinity cannot carry a factor")
        radius = st.rho * (1.0 + 7.0 / st.kappa)
        total = np.zeros(len(batch), dtype=complex)
        locs = ["0", "lam", "inf", "1"]
        for which, loc in enumerate(locs):
            betas = self.local_beta(batch, loc)

            def local(r, th, which=which):
                d = r * np.exp(1j * th)
                logabs, arg, jac = self._factors(which, d)
                return logabs, arg, jac + np.log(bump(r, st.rho, st.kappa))

            total += _polar_patch(batch, betas, local, radius, st.n_r, st.n_theta)

        s = (np.arange(st.n_s) + 0.5) / st.n_s
        area = np.pi**2 * self.tau.imag

        def remainder(t):
            v = np.pi * (s + self.tau * t)
            logabs, arg, jac = self._factors(0, v)
            cut = 1.0 - sum(bump(self._nearest(v, c), st.rho, st.kappa) for c in self.centers)
            vals = batch.evaluate(logabs, arg, jac)
            return (vals * cut).mean(axis=1) * area

        rem, err = _quad_complex(remainder, -0.5, 0.5, st.epsabs, st.epsrel)
        total += rem
        # the torus double covers the sphere
        return total / 2.0, err / 2.0


# --------------------------------------------------------------------------
# plane engine


class PlaneEngine:
    """Finite branch points z_1..z_P in the plane, plus the chart at infinity.

    The remainder uses a fixed angular grid around the centroid, so points
    much closer to each other than to the centroid are refused.
    """

    MIN_SEPARATION = 0.02

    def __init__(self, points, settings: QuadratureSettings | None = None, n_theta_rem: int = 1024):
        self.points = np.asarray(points, dtype=complex)
        self.settings = settings or QuadratureSettings(n_r=96, n_theta=64, rho=0.5, kappa=14.0)
        self.n_theta_rem = n_theta_rem
        pts = self.points
        dist = np.abs(pts[:, None] - pts[None, :]) + np.diag(np.full(len(pts), np.inf))
        self.rho = 0.5 * dist.min(axis=1)
        self.center = pts.mean()
        self.rho_inf = 1.0 / (3.0 * np.abs(pts - self.center).max())
        if self.rho.min() * self.rho_inf < self.MIN_SEPARATION:
            raise QuadratureError("branch points too clustered for the plane engine")

    def _factors(self, z):
        d = z[None, :] - self.points[:, None]
        return np.log(np.abs(d)), np.angle(d)

    def integrate(self, batch: TermBatch, settings: QuadratureSettings | None = None):
        st = settings or self.settings
        kappa = st.kappa
        total = np.zeros(len(batch), dtype=complex)
        for i, zi in enumerate(self.points):
            rho = self.rho[i]
            radius = rho * (1.0 + 7.0 / kappa)
            betas = batch.radial[:, i]

            def local(r, th, zi=zi, rho=rho):
                z = zi + r * np.exp(1j * th)
                logabs, arg = self._factors(z)
                return logabs, arg, np.log(bump(r, rho, kappa))

            total += _polar_patch(batch, betas, local, radius, st.n_r, st.n_theta)

        # infinity: z = c + 1/t, dA_z = |t|^-4 dA_t, density ~ |t|^(-E-4)
        radius = self.rho_inf * (1.0 + 7.0 / kappa)
        betas = -batch.radial.sum(axis=1) - 4.0

        def local_inf(r, th):
            t = r * np.exp(1j * th)
            z = self.center + 1.0 / t
            logabs, arg = self._factors(z)
            return logabs, arg, np.log(bump(r, self.rho_inf, kappa)) - 4.0 * np.log(r)

        total += _polar_patch(batch, betas, local_inf, radius, st.n_r, st.n_theta)

        theta = 2 * np.pi * (np.arange(self.n_theta_rem) + 0.5) / self.n_theta_rem
        rmax = 2.0 / self.rho_inf

        def remainder(r):
            z = self.center + r * np.exp(1j * theta)
            logabs, arg = self._factors(z)
            cut = 1.0 - bump(1.0 / r, self.rho_inf, kappa) if r > 0 else 1.0
            for i, zi in enumerate(self.points):
                cut = cut - bump(np.abs(z - zi), self.rho[i], kappa)
            vals = batch.evaluate(logabs, arg)
            return (vals * cut).mean(axis=1) * (2 * np.pi * r)

        rem, err = _quad_complex(remainder, 0.0, rmax, st.epsabs, st.epsrel)
        return total + rem, err
