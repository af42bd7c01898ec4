"""Lyapunov exponents of the cocycle on an SL(2, Z) orbit of origamis.

A geodesic is coded by continued-fraction digits a_1, a_2, ...; digit a_i
acts by T^(+-a_i) S with alternating signs, which is the regular
continued-fraction coding T^a1 L^a2 T^a3 ... up to the central element -I.
Exponents are reported as ratios to the growth of the tautological plane.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from . import __version__
from .flat_surface import (
    SL2_MATRICES,
    CocycleError,
    HomologyModel,
    Origami,
    Permutation,
    apply_generator,
    automorphism_matrix,
    canonical_form,
    canonical_relabeling,
    homology_model,
    induced_cocycle_matrix,
)
from .spectral_decomp import BlockError, character_projector

PRNG_NAME = "numpy.PCG64"
DIGIT_CAP = 2**52
TABLE_DIGITS = 16
# early QR once the summed log-norm bound of pending steps exceeds this; the
# frame condition number stays below e^(2 budget), far from double precision
GROWTH_BUDGET = 12.0


class OrbitCapExceeded(RuntimeError):
    pass


def thin_qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Q factor and |diag R| of a tall matrix (direct LAPACK calls)."""
    qr, tau, _, info = lapack.dgeqrf(a)
    if info:
        raise CocycleError("QR factorization failed")
    d = np.abs(qr.diagonal())
    q, _, info = lapack.dorgqr(qr, tau)
    if info:
        raise CocycleError("QR factorization failed")
    return q, d


# --------------------------------------------------------------------------
# digits


@dataclass
class GeodesicWord:
    digits: np.ndarray
    seed: int
    process: str = "gauss-map"
    alternating: bool = True

    @property
    def convention(self) -> str:
        signs = "alternating" if self.alternating else "positive"
        return f"T^n S, {signs} shear signs, {self.process} digits, {PRNG_NAME}"

    def __len__(self) -> int:
        return len(self.digits)


def gauss_probability(n: int) -> float:
    return math.log2(1.0 + 1.0 / (n * (n + 2)))


def gauss_digits_iid(u: np.ndarray) -> np.ndarray:
    """Inverse CDF of the Gauss measure: P(D >= n) = log2(1 + 1/n)."""
    x = np.exp2(u) - 1.0
    with np.errstate(divide="ignore"):
        d = np.floor(1.0 / x)
    return np.minimum(d, DIGIT_CAP).astype(np.int64)


def gauss_digits_markov(u: np.ndarray, y0: float) -> np.ndarray:
    """Digits of the stationary Gauss-map process.

    The past digits enter through y = [0; a_k, ..., a_1]; given y the current
    point x has density (1 + y) / (1 + x y)^2, sampled by inverting its CDF.
    """
    out = np.empty(len(u), dtype=np.int64)
    y = y0
    cap = float(DIGIT_CAP)
    for i, ui in enumerate(u.tolist()):
        x = ui / (1.0 + y - ui * y)
        a = math.floor(1.0 / x) if x > 1.0 / cap else DIGIT_CAP
        out[i] = a
        y = 1.0 / (a + y)
    return out


def sample_word(seed: int, length: int, process: str = "gauss-map", alternating: bool = True) -> GeodesicWord:
    if length < 1:
        raise ValueError("word length must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = 1.0 - rng.random(length)  # in (0, 1]
    if process == "iid":
        digits = gauss_digits_iid(u)
    elif process == "gauss-map":
        y0 = 2.0 ** (1.0 - rng.random()) - 1.0
        digits = gauss_digits_markov(u, y0)
    else:
        raise ValueError(f"unknown digit process {process!r}")
    return GeodesicWord(digits, seed, process, alternating)


# --------------------------------------------------------------------------
# orbit automaton


@dataclass
class OrbitAutomaton:
    states: list[Origami]
    models: list[HomologyModel]
    target: dict[tuple[int, str], int]
    matrices: dict[tuple[int, str], np.ndarray]
    deck: list[np.ndarray] | None = None
    deck_order: int | None = None
    # units[i, g] = u with M D_i^u = D_j M; the affine action may permute
    # the deck group by a power map, so eigenspaces can be exchanged
    units: dict[tuple[int, str], int] | None = None

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def rank(self) -> int:
        return self.models[0].rank

    def hash(self) -> str:
        h = hashlib.sha256()
        for i, o in enumerate(self.states):
            h.update(json.dumps(o.to_json(), sort_keys=True).encode())
            for g in ("T", "Tinv", "S"):
                h.update(f"{i}{g}{self.target[i, g]}".encode())
                h.update(self.matrices[i, g].tobytes())
        return h.hexdigest()[:20]

    def check_closed(self) -> None:
        for i in range(self.size):
            src = self.models[i]
            for g in ("T", "Tinv", "S"):
                j = self.target[i, g]
                m = self.matrices[i, g]
                if not np.array_equal(m.T @ self.models[j].intersection @ m, src.intersection):
                    raise CocycleError(f"transition {i} --{g}--> {j} is not symplectic")

    def inverse(self, i: int, g: str) -> np.ndarray:
        """Exact inverse of a transition matrix via the intersection forms."""
        j = self.target[i, g]
        return self.models[i].intersection_inv @ self.matrices[i, g].T @ self.models[j].intersection


def build_automaton(o: Origami, cap: int = 20000, deck: Permutation | None = None, deck_sign: int = -1) -> OrbitAutomaton:
    """Breadth-first closure of the orbit under T, T^-1 and S.

    If ``deck`` is given, its homology matrix at the start state is
    transported to every state by conjugation along the search tree.
    """
    start, sigma = canonical_relabeling(o)
    states = [start]
    index = {start.key(): 0}
    models = [homology_model(start)]
    deck_mats = None
    order = None
    if deck is not None:
        # the deck permutation in canonical labels
        inv = [0] * o.n
        for old, new in enumerate(sigma):
            inv[new] = old
        p = Permutation(tuple(sigma[deck(inv[i])] for i in range(o.n)))
        d0 = automorphism_matrix(start, p, models[0], sign=deck_sign).m
        deck_mats = [d0]
        order = p.order()
    target, mats = {}, {}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for g in ("T", "Tinv", "S"):
            img = canonical_form(apply_generator(states[i], g))
            j = index.get(img.key())
            if j is None:
                if len(states) >= cap:
                    raise OrbitCapExceeded(f"orbit has more than {cap} states")
                j = len(states)
                index[img.key()] = j
                states.append(img)
                models.append(homology_model(img))
                queue.append(j)
                new = True
            else:
                new = False
            cm = induced_cocycle_matrix(states[i], g, models[i], models[j], canonical=True)
            target[i, g] = j
            mats[i, g] = np.asarray(cm.m, dtype=np.int64)
            if new and deck_mats is not None:
                m = mats[i, g]
                minv = models[i].intersection_inv @ m.T @ models[j].intersection
                deck_mats.append(m @ deck_mats[i] @ minv)
    units = None
    if deck_mats is not None:
        units = {}
        for (i, g), m in mats.items():
            units[i, g] = deck_unit(m, deck_mats[i], deck_mats[target[i, g]], order)
    aut = OrbitAutomaton(states, models, target, mats, deck_mats, order, units)
    aut.check_closed()
    return aut


def deck_unit(m: np.ndarray, d_src: np.ndarray, d_dst: np.ndarray, order: int) -> int:
    """The exponent u with m d_src^u = d_dst m."""
    rhs = d_dst @ m
    lhs = m.copy()
    for u in range(1, order + 1):
        lhs = lhs @ d_src
        if np.array_equal(lhs, rhs):
            return u % order
    raise CocycleError("transition does not normalize the deck group")


# --------------------------------------------------------------------------
# step matrices


class StepTable:
    """Float matrices of T^(s n) S from every state, with lazy cusp powers."""

    def __init__(self, aut: OrbitAutomaton):
        self.aut = aut
        self.n = aut.rank
        self.small: dict[tuple[int, int, int], tuple[np.ndarray, int]] = {}
        self.cusp_cache: dict = {}
        self.unit_cache: dict = {}
        # T-cycles (cusps): position of each state on its cycle
        self.cycle_of: list[tuple[int, int]] = [(-1, -1)] * aut.size
        self.cycles: list[list[int]] = []
        for s in range(aut.size):
            if self.cycle_of[s][0] >= 0:
                continue
            cyc = [s]
            j = aut.target[s, "T"]
            while j != s:
                cyc.append(j)
                j = aut.target[j, "T"]
            cid = len(self.cycles)
            self.cycles.append(cyc)
            for pos, t in enumerate(cyc):
                self.cycle_of[t] = (cid, pos)
        # matrices of T^j along each cusp, from each state, j = 0..TABLE_DIGITS
        self.tpow: dict[tuple[int, int], list[np.ndarray]] = {}
        for s in range(aut.size):
            for sign in (1, -1):
                g = "T" if sign == 1 else "Tinv"
                pw = [np.eye(self.n, dtype=np.int64)]
                cur = s
                for _ in range(TABLE_DIGITS):
                    pw.append(aut.matrices[cur, g] @ pw[-1])
                    cur = aut.target[cur, g]
                self.tpow[s, sign] = pw
        for s in range(aut.size):
            s1 = aut.target[s, "S"]
            ms = aut.matrices[s, "S"]
            for sign in (1, -1):
                pw = self.tpow[s1, sign]
                for k in range(1, TABLE_DIGITS + 1):
                    self.small[s, sign, k] = ((pw[k] @ ms).astype(float), self.shift(s1, sign * k))

    def shift(self, s: int, k: int) -> int:
        cid, pos = self.cycle_of[s]
        cyc = self.cycles[cid]
        return cyc[(pos + k) % len(cyc)]

    def _cusp(self, s: int, sign: int):
        """Powers T^(sign j) for j < p from s, and the return matrix T^(sign p)."""
        key = (s, sign)
        if key not in self.cusp_cache:
            g = "T" if sign == 1 else "Tinv"
            p = len(self.cycles[self.cycle_of[s][0]])
            pw = [np.eye(self.n, dtype=np.int64)]
            cur = s
            for _ in range(p):
                pw.append(self.aut.matrices[cur, g] @ pw[-1])
                cur = self.aut.target[cur, g]
            ret = pw.pop()
            nil = ret - np.eye(self.n, dtype=np.int64)
            self.cusp_cache[key] = (pw, ret, nil, not np.any(nil @ nil))
        return self.cusp_cache[key]

    def step(self, s: int, sign: int, k: int) -> tuple[np.ndarray, int]:
        if k <= TABLE_DIGITS:
            return self.small[s, sign, k]
        s1 = self.aut.target[s, "S"]
        pw, ret, nil, square_zero = self._cusp(s1, sign)
        q, r = divmod(k, len(pw))
        if square_zero:
            big = np.eye(self.n) + float(q) * nil
        else:
            big = np.linalg.matrix_power(ret.astype(float), q)
        m = pw[r] @ big @ self.aut.matrices[s, "S"]
        return m, self.shift(s1, sign * k)

    def unit(self, s: int, sign: int, k: int) -> int:
        """Deck exponent u of the step T^(sign k) S from s (see ``deck_unit``)."""
        key = (s, sign, k)
        if key in self.unit_cache:
            return self.unit_cache[key]
        aut, N = self.aut, self.aut.deck_order
        g = "T" if sign == 1 else "Tinv"
        s1 = aut.target[s, "S"]
        ckey = (s1, sign)
        if ckey not in self.unit_cache:
            pre, cur = [1], s1
            for _ in range(len(self.cycles[self.cycle_of[s1][0]])):
                pre.append(pre[-1] * aut.units[cur, g] % N)
                cur = aut.target[cur, g]
            self.unit_cache[ckey] = pre
        pre = self.unit_cache[ckey]
        q, r = divmod(k, len(pre) - 1)
        u = aut.units[s, "S"] * pow(pre[-1], q, N) * pre[r] % N
        if k <= TABLE_DIGITS:
            self.unit_cache[key] = u
        return u

    def exact_step(self, s: int, sign: int, k: int) -> tuple[np.ndarray, int]:
        """Integer matrix of T^(sign k) S (for tests; no cusp shortcut)."""
        aut = self.aut
        m = aut.matrices[s, "S"]
        cur = aut.target[s, "S"]
        g = "T" if sign == 1 else "Tinv"
        for _ in range(k):
            m = aut.matrices[cur, g] @ m
            cur = aut.target[cur, g]
        return m, cur


def taut_step(sign: int, k: int) -> np.ndarray:
    t = SL2_MATRICES["T"] if sign == 1 else SL2_MATRICES["Tinv"]
    return np.linalg.matrix_power(t, k) @ SL2_MATRICES["S"]


# --------------------------------------------------------------------------
# blocks


@dataclass
class BlockSpec:
    """Invariant block given by a set of deck characters k (zeta^k)."""

    label: str
    ks: tuple[int, ...]
    dimension: int = 0


def rational_block_specs(N: int) -> list[BlockSpec]:
    out = []
    for d in range(1, N + 1):
        if N % d == 0:
            ks = tuple(k for k in range(N) if N // math.gcd(N, k) == d)
            out.append(BlockSpec(f"d={d}", ks))
    return out


def eigen_block_specs(N: int) -> list[BlockSpec]:
    """W_k = span of the zeta^k and zeta^-k eigenspaces, k = 0..N/2."""
    return [BlockSpec(f"W{k}", tuple(sorted({k % N, (-k) % N}))) for k in range(0, N // 2 + 1)]


class ProjectorCache:
    def __init__(self, aut: OrbitAutomaton, blocks: Sequence[BlockSpec]):
        if aut.deck is None:
            raise BlockError("blocks need an automaton built with a deck transformation")
        self.aut = aut
        self.blocks = list(blocks)
        self.cache: dict[tuple[int, int], list[np.ndarray]] = {}

    def get(self, s: int, c: int = 1) -> list[np.ndarray]:
        """Block projectors at state s when the continued deck element is D_s^c."""
        if (s, c) not in self.cache:
            N = self.aut.deck_order
            cinv = pow(c, -1, N)
            d = self.aut.deck[s]
            self.cache[s, c] = [
                character_projector(d, N, tuple(sorted({k * cinv % N for k in b.ks}))) for b in self.blocks
            ]
        return self.cache[s, c]


# --------------------------------------------------------------------------
# Benettin runs


@dataclass
class LyapunovReport:
    exponents: list[float]
    stderr: list[float]
    blocks: dict[str, dict] = field(default_factory=dict)
    steps: int = 0
    seed: int = 0
    qr_interval: int = 8
    interval_reductions: int = 0
    convention: str = ""
    automaton_hash: str = ""
    batch_log: np.ndarray | None = field(default=None, repr=False)  # (batches, columns) log growth
    batch_taut: np.ndarray | None = field(default=None, repr=False)
    final_frame: np.ndarray | None = field(default=None, repr=False)
    final_state: int = 0
    version: str = __version__

    def nonnegative(self) -> list[float]:
        g = len(self.exponents) // 2
        return self.exponents[:g] if len(self.exponents) % 2 == 0 else self.exponents[: g + 1]

    def to_json(self) -> dict:
        return {
            "exponents": [float(x) for x in self.exponents],
            "stderr": [float(x) for x in self.stderr],
            "blocks": {k: {"exponents": [float(x) for x in v["exponents"]], "stderr": [float(x) for x in v["stderr"]], "dimension": v["dimension"]} for k, v in self.blocks.items()},
            "steps": self.steps,
            "seed": self.seed,
            "qr_interval": self.qr_interval,
            "interval_reductions": self.interval_reductions,
            "convention": self.convention,
            "automaton_hash": self.automaton_hash,
            "software_version": self.version,
        }


def _summaries(batch_log: np.ndarray, batch_taut: np.ndarray, cols: slice):
    """Ratio estimates (sorted descending) with batch-means standard errors."""
    logs = batch_log[:, cols]
    total = logs.sum(axis=0) / batch_taut.sum()
    order = np.argsort(-total, kind="stable")
    per_batch = logs / batch_taut[:, None]
    per_batch = -np.sort(-per_batch, axis=1)
    b = len(batch_taut)
    err = per_batch.std(axis=0, ddof=1) / math.sqrt(b) if b > 1 else np.full(logs.shape[1], np.nan)
    return total[order].tolist(), err.tolist()


def run_oseledets(
    aut: OrbitAutomaton,
    word: GeodesicWord,
    qr_interval: int = 8,
    blocks: Sequence[BlockSpec] | None = None,
    batches: int = 20,
    trace_path: str | None = None,
    trace_every: int | None = None,
    start: int = 0,
    full: bool = True,
) -> LyapunovReport:
    if qr_interval < 1:
        raise ValueError("qr_interval must be positive")
    table = StepTable(aut)
    n = aut.rank
    rng = np.random.Generator(np.random.PCG64(word.seed ^ 0x5EED))
    blocks = list(blocks or [])
    proj = ProjectorCache(aut, blocks) if blocks else None

    # initial frames: the full space, then one generic frame per block
    frames, spans = [], []
    col = 0
    if full:
        frames.append(np.linalg.qr(rng.standard_normal((n, n)))[0])
        spans.append(slice(0, n))
        col = n
    block_dims = []
    if proj is not None:
        for b, p in zip(blocks, proj.get(start)):
            dim = int(round(np.trace(p)))
            b.dimension = dim
            block_dims.append(dim)
            if dim == 0:
                spans.append(slice(col, col))
                continue
            f = np.linalg.qr(p @ rng.standard_normal((n, dim)))[0]
            frames.append(f)
            spans.append(slice(col, col + dim))
            col += dim
    if col == 0:
        raise ValueError("nothing to track")
    frame = np.concatenate(frames, axis=1)
    ncol = col

    steps = len(word)
    bounds = np.linspace(0, steps, batches + 1).round().astype(int)
    batch_log = np.zeros((batches, ncol))
    batch_taut = np.zeros(batches)
    logs = np.zeros(ncol)
    taut_log = 0.0
    tv0, tv1 = 1.0, 0.0
    state = start
    power = 1  # continued deck element is D_state^power
    N = aut.deck_order
    reductions = 0
    since, budget = 0, 0.0
    batch = 0
    digits = word.digits.tolist()
    alternating = word.alternating
    small = table.small
    trace_rows = []
    trace_every = trace_every or max(1, steps // 200)

    def orthonormalize():
        nonlocal frame
        pj = proj.get(state, power) if proj is not None else None
        first = 1 if full else 0
        for idx, sl in enumerate(spans):
            if sl.stop == sl.start:
                continue
            block = frame[:, sl]
            if idx >= first and pj is not None:
                block = pj[idx - first] @ block
            q, d = thin_qr(block)
            if d.min() <= 0.0 or not math.isfinite(d.max()):
                raise CocycleError("QR produced a singular or non-finite diagonal")
            logs[sl] += np.log(d)
            frame[:, sl] = q

    for i, k in enumerate(digits):
        sign = -1 if (alternating and i % 2) else 1
        entry = small.get((state, sign, k)) if k <= TABLE_DIGITS else None
        if proj is not None:
            power = power * pow(table.unit(state, sign, k), -1, N) % N
        m, state = entry if entry is not None else table.step(state, sign, k)
        frame = m @ frame
        # tautological plane: T^(sign k) S acting on a 2-vector
        a, b = -tv1, tv0
        a += sign * k * b
        nrm = math.hypot(a, b)
        taut_log += math.log(nrm)
        tv0, tv1 = a / nrm, b / nrm
        since += 1
        budget += math.log1p(k) + 1.0
        end_batch = i + 1 == bounds[batch + 1]
        if since >= qr_interval or budget > GROWTH_BUDGET or end_batch:
            if budget > GROWTH_BUDGET and since < qr_interval and not end_batch:
                reductions += 1
            orthonormalize()
            since, budget = 0, 0.0
            if end_batch:
                batch_log[batch] = logs
                batch_taut[batch] = taut_log
                batch += 1
        if trace_path is not None and (i + 1) % trace_every == 0 and since == 0:
            trace_rows.append((i + 1, logs.copy(), taut_log))

    # cumulative -> per batch increments
    batch_log = np.diff(np.vstack([np.zeros(ncol), batch_log]), axis=0)
    batch_taut = np.diff(np.concatenate([[0.0], batch_taut]))

    report = LyapunovReport([], [], steps=steps, seed=word.seed, qr_interval=qr_interval,
                            interval_reductions=reductions, convention=word.convention,
                            automaton_hash=aut.hash(), batch_log=batch_log, batch_taut=batch_taut,
                            final_frame=frame.copy(), final_state=state)
    offset = 0
    if full:
        report.exponents, report.stderr = _summaries(batch_log, batch_taut, spans[0])
        offset = 1
    for b, sl in zip(blocks, spans[offset:]):
        if sl.stop == sl.start:
            report.blocks[b.label] = {"exponents": [], "stderr": [], "dimension": 0, "span": sl}
            continue
        ex, er = _summaries(batch_log, batch_taut, sl)
        report.blocks[b.label] = {"exponents": ex, "stderr": er, "dimension": sl.stop - sl.start, "span": sl}
    if trace_path is not None:
        write_trace(trace_path, trace_rows, spans, blocks, full)
    return report


def write_trace(path, rows, spans, blocks, full) -> None:
    labels = (["full"] if full else []) + [b.label for b in blocks]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "block_label", "lambda_index", "running_estimate"])
        for step, logs, taut in rows:
            if taut <= 0:
                continue
            for label, sl in zip(labels, spans):
                vals = sorted((logs[sl] / taut).tolist(), reverse=True)
                for j, v in enumerate(vals, 1):
                    w.writerow([step, label, j, f"{v:.8g}"])


def block_exponents(aut: OrbitAutomaton, word: GeodesicWord, blocks: Sequence[BlockSpec], qr_interval: int = 8, **kw) -> LyapunovReport:
    return run_oseledets(aut, word, qr_interval=qr_interval, blocks=blocks, full=False, **kw)


def merge_reports(reports: Sequence[LyapunovReport]) -> LyapunovReport:
    """Pool independent replicas: sums of log growth over all batches."""
    first = reports[0]
    batch_log = np.vstack([r.batch_log for r in reports])
    batch_taut = np.concatenate([r.batch_taut for r in reports])
    out = LyapunovReport([], [], steps=sum(r.steps for r in reports), seed=first.seed,
                         qr_interval=first.qr_interval,
                         interval_reductions=sum(r.interval_reductions for r in reports),
                         convention=first.convention, automaton_hash=first.automaton_hash,
                         batch_log=batch_log, batch_taut=batch_taut)
    n_full = len(first.exponents)
    if n_full:
        out.exponents, out.stderr = _summaries(batch_log, batch_taut, slice(0, n_full))
    for label, data in first.blocks.items():
        sl = data["span"]
        if sl.stop == sl.start:
            out.blocks[label] = dict(data)
            continue
        ex, er = _summaries(batch_log, batch_taut, sl)
        out.blocks[label] = {"exponents": ex, "stderr": er, "dimension": data["dimension"], "span": sl}
    return out


def count_positive(exponents: Sequence[float], threshold: float = 0.02) -> int:
    return sum(1 for x in exponents if x > threshold)


# --------------------------------------------------------------------------
# symplectic orthogonality of Oseledets directions


@dataclass
class OseledetsCheck:
    exponents: list[float]
    stderr: list[float]
    pairings: np.ndarray  # |omega(e_i, e_j)| in the final forward frame
    max_cross_pairing: float
    dual_pairing: float  # |omega(e_1, f_1)|, top forward vs top backward direction
    resolved_pairs: int
    conclusive: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "exponents": self.exponents,
            "stderr": self.stderr,
            "max_cross_pairing": self.max_cross_pairing,
            "dual_pairing": self.dual_pairing,
            "resolved_pairs": self.resolved_pairs,
            "conclusive": self.conclusive,
            "note": self.note,
        }


def _column_exponents(rep: LyapunovReport, n: int) -> tuple[np.ndarray, np.ndarray]:
    logs = rep.batch_log[:, :n]
    est = logs.sum(axis=0) / rep.batch_taut.sum()
    per = logs / rep.batch_taut[:, None]
    err = per.std(axis=0, ddof=1) / math.sqrt(len(per))
    return est, err


def backward_frame(aut: OrbitAutomaton, future: GeodesicWord, start: int, qr_interval: int = 8) -> np.ndarray:
    """Orthonormal frame at ``start`` obtained by pulling a generic frame back
    along ``future``; its leading columns approximate the most contracted
    Oseledets directions at ``start``."""
    table = StepTable(aut)
    n = aut.rank
    state = start
    path = []
    for i, k in enumerate(future.digits.tolist()):
        sign = -1 if (future.alternating and i % 2) else 1
        m, nxt = table.step(state, sign, k)
        path.append((state, nxt, m))
        state = nxt
    rng = np.random.Generator(np.random.PCG64(future.seed ^ 0xBAC))
    f = thin_qr(rng.standard_normal((n, n)))[0]
    since = 0
    for src, dst, m in reversed(path):
        minv = aut.models[src].intersection_inv @ m.T @ aut.models[dst].intersection
        f = minv @ f
        since += 1
        if since >= qr_interval or np.abs(f).max() > 1e8:
            f, since = thin_qr(f)[0], 0
    return thin_qr(f)[0]


def oseledets_subspace_check(aut: OrbitAutomaton, word: GeodesicWord, future: GeodesicWord | None = None,
                             qr_interval: int = 8) -> OseledetsCheck:
    """Symplectic pairings between estimated Oseledets directions.

    The final forward frame e_1..e_2g at the end point P of ``word`` spans the
    unstable flag: e_i lies in the sum of the Oseledets spaces with the i
    largest exponents. omega(e_i, e_j) must vanish whenever the exponents of
    e_i and e_j have a positive sum. The top backward direction f_1 at P,
    obtained from a continuation word, estimates E_(-1) and must pair
    nondegenerately with e_1.
    """
    n = aut.rank
    rep = run_oseledets(aut, word, qr_interval=qr_interval)
    est, err = _column_exponents(rep, n)
    e = rep.final_frame[:, :n]
    p_state = rep.final_state
    j = aut.models[p_state].intersection.astype(float)
    pair = np.abs(e.T @ j @ e)
    cross, resolved = 0.0, 0
    for a in range(n):
        for b in range(a + 1, n):
            s = est[a] + est[b]
            # forward flags determine e_i only modulo faster directions, so
            # the pairing is forced to vanish only for a positive sum
            if s > 3.0 * (err[a] + err[b]) and s > 0.02:
                resolved += 1
                cross = max(cross, float(pair[a, b]))
    future = future or sample_word(word.seed + 1, len(word), word.process, word.alternating)
    f = backward_frame(aut, future, p_state, qr_interval)
    dual = float(abs(e[:, 0] @ j @ f[:, 0]))
    note = "" if resolved else "no exponent pair is resolved away from zero sum"
    if n == 2:
        note = "genus one: only the dual pair exists"
    return OseledetsCheck(est.tolist(), err.tolist(), pair, cross, dual, resolved, resolved > 0 or n == 2, note)
