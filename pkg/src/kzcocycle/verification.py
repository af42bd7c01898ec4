"""Verification records: expected values with provenance, measured values, verdicts.

Every claim declares its checks (expected value, tolerance, comparison mode)
and a provenance entry saying where the expected value comes from:
``theory`` (a published statement about the surface), ``oracle`` (an
independent computation frozen here) or ``invariant`` (an identity that must
hold for every input). Claims without provenance are rejected at registration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

PROVENANCE_KINDS = ("theory", "oracle", "invariant")
MODES = ("abs", "rel", "exact", "max", "min")


class VerificationError(ValueError):
    pass


@dataclass(frozen=True)
class Provenance:
    kind: str
    source: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "source": self.source}


@dataclass(frozen=True)
class CheckSpec:
    name: str
    expected: object
    tolerance: float = 0.0
    mode: str = "abs"


@dataclass
class CheckResult:
    name: str
    expected: object
    measured: object
    tolerance: float
    mode: str
    passed: bool
    deviation: float

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "expected": _plain(self.expected),
            "measured": _plain(self.measured),
            "tolerance": self.tolerance,
            "mode": self.mode,
            "deviation": self.deviation,
            "passed": self.passed,
        }


@dataclass
class Claim:
    id: str
    title: str
    provenance: Provenance
    checks: tuple[CheckSpec, ...]
    run: Callable[[float], tuple[dict, dict]]  # budget scale -> (measured by check name, details)

    def __post_init__(self):
        if not isinstance(self.provenance, Provenance) or self.provenance.kind not in PROVENANCE_KINDS \
                or not self.provenance.source.strip():
            raise VerificationError(f"claim {self.id!r} has no provenance; refusing to register it")
        for c in self.checks:
            if c.mode not in MODES:
                raise VerificationError(f"claim {self.id!r}: unknown mode {c.mode!r}")


@dataclass
class VerificationRecord:
    claim_id: str
    title: str
    provenance: Provenance
    checks: list[CheckResult]
    passed: bool
    runtime_s: float
    budget: float
    details: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "title": self.title,
            "provenance": self.provenance.to_json(),
            "checks": [c.to_json() for c in self.checks],
            "passed": self.passed,
            "runtime_s": round(self.runtime_s, 3),
            "budget": self.budget,
            "details": _plain(self.details),
            "error": self.error,
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        worst = [c for c in self.checks if not c.passed]
        note = f"  failed: {', '.join(c.name for c in worst)}" if worst else ""
        if self.error:
            note = f"  error: {self.error}"
        return f"{verdict}  {self.claim_id:<32} {self.runtime_s:8.1f}s  {self.title}{note}"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def compare(spec: CheckSpec, measured) -> CheckResult:
    exp = spec.expected
    if spec.mode == "exact":
        ok = _plain(exp) == _plain(measured)
        dev = 0.0 if ok else float("inf")
    else:
        e = np.atleast_1d(np.asarray(_plain(exp), dtype=float))
        m = np.atleast_1d(np.asarray(_plain(measured), dtype=float))
        if e.shape != m.shape:
            return CheckResult(spec.name, exp, measured, spec.tolerance, spec.mode, False, float("inf"))
        if spec.mode == "abs":
            dev = float(np.max(np.abs(m - e)))
            ok = dev <= spec.tolerance
        elif spec.mode == "rel":
            dev = float(np.max(np.abs(m - e) / np.abs(e)))
            ok = dev <= spec.tolerance
        elif spec.mode == "max":  # measured <= expected
            dev = float(np.max(m - e))
            ok = dev <= 0.0
        else:  # measured >= expected
            dev = float(np.max(e - m))
            ok = dev <= 0.0
        ok = ok and bool(np.all(np.isfinite(m)))
    return CheckResult(spec.name, exp, measured, spec.tolerance, spec.mode, bool(ok), dev)


def run_claim(claim: Claim, budget: float = 1.0, expected: dict | None = None) -> VerificationRecord:
    """Run one claim; ``expected`` replaces expected values by check name."""
    specs = list(claim.checks)
    if expected:
        unknown = set(expected) - {c.name for c in specs}
        if unknown:
            raise VerificationError(f"{claim.id}: unknown checks {sorted(unknown)}")
        specs = [CheckSpec(c.name, expected.get(c.name, c.expected), c.tolerance, c.mode) for c in specs]
    t0 = time.perf_counter()
    try:
        measured, details = claim.run(budget)
        err = None
    except Exception as exc:  # the record carries the failure
        measured, details, err = {}, {}, f"{type(exc).__name__}: {exc}"
    runtime = time.perf_counter() - t0
    measured = dict(measured)
    measured.setdefault("runtime_s", runtime)
    results = []
    for c in specs:
        if c.name not in measured:
            results.append(CheckResult(c.name, c.expected, None, c.tolerance, c.mode, False, float("inf")))
        else:
            results.append(compare(c, measured[c.name]))
    passed = err is None and all(r.passed for r in results)
    return VerificationRecord(claim.id, claim.title, claim.provenance, results, passed, runtime, budget, details, err)


# --------------------------------------------------------------------------
# claims


def _steps(n: int, budget: float, floor: int = 10**4) -> int:
    return max(floor, int(round(n * budget)))


def _cover_run(spec_text: str, steps: int, seeds, blocks=None):
    from .cyclic_cover import build_cover, parse_spec
    from .lyapunov_engine import build_automaton, merge_reports, run_oseledets, sample_word

    cover = build_cover(parse_spec(spec_text))
    aut = build_automaton(cover.origami, deck=cover.deck if blocks else None)
    reps = [run_oseledets(aut, sample_word(s, steps), blocks=blocks) for s in seeds]
    return merge_reports(reps) if len(reps) > 1 else reps[0]


def _degenerate(claim_id: str, spec_text: str, seeds, limit_s: float) -> Claim:
    def run(budget):
        rep = _cover_run(spec_text, _steps(10**6, budget), seeds)
        nn = rep.nonnegative()
        return {"lambda_1": nn[0], "other": [abs(x) for x in nn[1:]]}, {"nonnegative": nn, "stderr": rep.stderr[: len(nn)]}

    g = {"M4(1,1,1,1)": 3, "M6(1,1,1,3)": 4}[spec_text]
    return Claim(
        claim_id,
        f"{spec_text}: maximally degenerate spectrum, 1e6 steps x {len(seeds)} seeds",
        Provenance("theory", f"{spec_text} has lambda_1 = 1 and lambda_2 = ... = lambda_{g} = 0"),
        (CheckSpec("lambda_1", 1.0, 0.01), CheckSpec("other", [0.01] * (g - 1), mode="max"),
         CheckSpec("runtime_s", limit_s, mode="max")),
        run,
    )


def _exponent_count_run(budget):
    from .cyclic_cover import orientable_specs
    from .lyapunov_engine import OrbitCapExceeded, count_positive
    from .spectral_decomp import partition_and_predictions

    steps = _steps(10**6, budget)
    rows, mismatch, skipped = [], [], []
    for N in (4, 6, 8, 10, 12):
        for spec in orientable_specs(N):
            try:
                rep = _cover_run(str(spec), steps, [0])
            except OrbitCapExceeded:
                skipped.append(str(spec))
                continue
            got = count_positive(rep.nonnegative(), 0.02)
            want = partition_and_predictions(spec).predicted_positive_count
            rows.append({"spec": str(spec), "predicted": want, "simulated": got,
                         "nonnegative": [round(x, 4) for x in rep.nonnegative()]})
            if got != want:
                mismatch.append(str(spec))
    return {"mismatches": len(mismatch), "specs": len(rows)}, {"rows": rows, "mismatched": mismatch, "over_cap": skipped}


def _m8_values_run(budget):
    rep = _cover_run("M8(1,1,3,3)", _steps(10**6, budget), [0])
    return {"nonnegative": rep.nonnegative()}, {"stderr": rep.stderr[:7]}


def _z_spectrum_run(budget):
    from .locus_z import find_z_member, z_spectrum

    cand, val = find_z_member()
    rep = z_spectrum(cand, _steps(2 * 10**6, budget), validation=val)
    half = {k: v["exponents"][: len(v["exponents"]) // 2] for k, v in rep.blocks.items()}
    return ({"total": rep.nonnegative(), "W3": half["W3"], "W2": half["W2"], "W1": [abs(x) for x in half["W1"]]},
            {"candidate": cand.to_json(), "validation": val.diagnostics, "stderr": rep.stderr[:10]})


def _m6_sff_run(budget):
    from .cyclic_cover import parse_spec
    from .hodge_analytic import second_fundamental_form, symmetry_zero_pattern, teichmueller_point

    spec = parse_spec("M6(1,1,1,3)")
    sff = second_fundamental_form(spec, teichmueller_point(spec, 1j))
    mask, bound = symmetry_zero_pattern(sff.eigenvalues, sff.eigenvalues[0])
    forced = float(np.abs(sff.B[mask]).max()) if mask.any() else 0.0
    return ({"B_omega_omega": abs(sff.B[0, 0]), "forced_zero_max": forced, "sigma_2": sff.singular_values[1],
             "rank": sff.rank, "Lambda_1": sff.Lambda[0], "Lambda_2": sff.Lambda[1]},
            {"singular_values": sff.singular_values, "rank_bound": bound, "quadrature_error": sff.quadrature_error,
             "frame_k": sff.frame_k})


def _z_rank_run(budget):
    from .hodge_analytic import second_fundamental_form, z_configuration

    sff = second_fundamental_form(None, z_configuration())
    sv = sff.singular_values
    gap = float(np.log10(sv[3] / max(sv[4], 1e-300)))
    w2 = [i for i, k in enumerate(sff.frame_k) if k in (2, 4)]
    sub = sff.B[np.ix_(w2, w2)]
    sv2 = np.linalg.svd(sub, compute_uv=False)
    rank2 = int(np.sum(sv2 > 1e-5 * sv[0]))
    kk = np.array([sff.frame_k[i] for i in w2])
    diag = float(np.abs(sub[kk[:, None] == kk[None, :]]).max())
    return ({"rank": sff.rank, "corank": sff.genus - sff.rank, "gap_orders": gap, "W2_rank": rank2,
             "W2_diagonal_max": diag},
            {"singular_values": sv, "W2_singular_values": sv2, "frame_k": sff.frame_k,
             "quadrature_error": sff.quadrature_error})


def _kontsevich_run(budget):
    from .cyclic_cover import parse_spec
    from .hodge_analytic import kontsevich_check
    from .spectral_decomp import partition_and_predictions

    n = max(10, int(round(200 * budget)))
    m8 = parse_spec("M8(1,1,3,3)")
    lyap = _cover_run("M8(1,1,3,3)", _steps(10**6, budget), [0], blocks=_rational_blocks(8))
    rep = kontsevich_check(m8, n, seed=0, lyapunov=lyap)
    formula = float(sum(partition_and_predictions(m8).predicted_spectrum(7)))
    labels = sorted(rep.block_traces)
    hodge_blocks = [rep.block_mean(k) for k in labels]
    lyap_blocks = [rep.lyapunov_blocks.get(k, 0.0) for k in labels]
    # 7% relative per block; blocks whose exponents vanish are compared absolutely
    block_dev = [abs(h - l) / l if l > 0.02 else abs(h - l) for h, l in zip(hodge_blocks, lyap_blocks)]
    small = {}
    for text in ("M4(1,1,1,1)", "M6(1,1,1,3)"):
        r = kontsevich_check(parse_spec(text), max(4, int(round(20 * budget))), seed=1)
        small[text] = float(np.abs(r.traces - 1.0).max())
    return ({"mean_vs_lyapunov": abs(rep.mean - rep.lyapunov_sum) / rep.lyapunov_sum,
             "mean_vs_formula": abs(rep.mean - formula) / formula,
             "block_deviation": block_dev,
             "M4_max_deviation": small["M4(1,1,1,1)"], "M6_max_deviation": small["M6(1,1,1,3)"]},
            {"samples": n, "mean": rep.mean, "stderr": rep.stderr, "lyapunov_sum": rep.lyapunov_sum,
             "formula_sum": formula, "blocks": labels, "hodge_blocks": hodge_blocks, "lyapunov_blocks": lyap_blocks,
             "max_quadrature_error": rep.max_quadrature_error})


def _rational_blocks(N):
    from .lyapunov_engine import rational_block_specs

    return rational_block_specs(N)


def random_symmetric_contraction(rng: np.random.Generator, g: int) -> np.ndarray:
    """Complex symmetric g x g matrix with singular values in [0, 1]."""
    z = rng.standard_normal((g, g)) + 1j * rng.standard_normal((g, g))
    u, _ = np.linalg.qr(z)
    s = rng.random(g)
    s[0] = 1.0
    return u @ np.diag(s) @ u.T


def random_unitary(rng: np.random.Generator, g: int) -> np.ndarray:
    z = rng.standard_normal((g, g)) + 1j * rng.standard_normal((g, g))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _property_run(budget):
    from .cyclic_cover import build_cover, parse_spec
    from .flat_surface import l_shape
    from .hodge_analytic import hodge_star_ops, phi_k
    from .lyapunov_engine import StepTable, build_automaton, oseledets_subspace_check, run_oseledets, sample_word

    rng = np.random.default_rng(20261015)
    n_fuzz = max(100, int(round(1000 * budget)))
    eq_dev, bound_excess = 0.0, -math.inf
    for _ in range(n_fuzz):
        g = int(rng.integers(1, 11))
        B = random_symmetric_contraction(rng, g)
        H = B @ B.conj().T
        k = int(rng.integers(1, g + 1))
        sub = sorted(rng.choice(g, size=k, replace=False).tolist())
        u = random_unitary(rng, g) if rng.random() < 0.5 else None
        a, b = phi_k(B, H, k, sub, u)
        eq_dev = max(eq_dev, abs(a - b))
        bound_excess = max(bound_excess, abs(a) - min(2 * k, g))

    # exact symplecticity of every step matrix along words
    sym_fail, sym_steps = 0, 0
    n_word = _steps(10**4, budget, floor=1000)
    for text in ("M6(1,1,1,3)", "M8(1,1,3,3)"):
        aut = build_automaton(build_cover(parse_spec(text)).origami)
        table = StepTable(aut)
        word = sample_word(7, n_word)
        s = 0
        for i, k in enumerate(word.digits.tolist()):
            sign = -1 if i % 2 else 1
            m, t = table.exact_step(s, sign, min(int(k), 64))
            j_src, j_dst = aut.models[s].intersection, aut.models[t].intersection
            sym_fail += int(not np.array_equal(m.T @ j_dst @ m, j_src))
            sym_steps += 1
            s = t

    # spectrum symmetry
    aut8 = build_automaton(build_cover(parse_spec("M8(1,1,3,3)")).origami)
    rep = run_oseledets(aut8, sample_word(3, _steps(2 * 10**5, budget)))
    ex, se = np.array(rep.exponents), np.array(rep.stderr)
    sym_ratio = float(np.max(np.abs(ex + ex[::-1]) / (3 * (se + se[::-1]))))

    # Hodge star in the real frame
    star_ok = True
    for g in range(1, 11):
        ops = hodge_star_ops(g)
        c1 = rng.integers(-9, 10, size=2 * g)
        c2 = rng.integers(-9, 10, size=2 * g)
        star_ok &= bool(np.array_equal(ops.star @ ops.star, -np.eye(2 * g, dtype=np.int64)))
        star_ok &= int(c1 @ c2) == int(c1 @ ops.symplectic @ (ops.star @ c2))

    chk = oseledets_subspace_check(build_automaton(l_shape()), sample_word(11, _steps(10**5, budget)))
    chk8 = oseledets_subspace_check(aut8, sample_word(12, _steps(10**5, budget)))
    pairing = max(chk.max_cross_pairing, chk8.max_cross_pairing)
    return ({"phi_equality": eq_dev, "phi_bound_excess": bound_excess, "symplectic_failures": sym_fail,
             "spectrum_symmetry_ratio": sym_ratio, "star_identities": star_ok, "oseledets_pairing": pairing,
             "oseledets_resolved_pairs": chk.resolved_pairs + chk8.resolved_pairs},
            {"fuzzed_inputs": n_fuzz, "symplectic_steps": sym_steps, "M8_exponents": ex,
             "oseledets": {"L-shape": chk.to_json(), "M8(1,1,3,3)": chk8.to_json()}})


def _rauch_run(budget):
    from .cyclic_cover import parse_spec
    from .hodge_analytic import rauch_check

    rep = rauch_check(parse_spec("M6(1,1,1,3)"), 1j, dt=1e-3, halvings=1)
    return ({"relative_error": rep.relative_errors[0], "observed_order": rep.observed_order},
            {"relative_errors": rep.relative_errors, "dts": rep.dts, "flow_constant": rep.flow_constant,
             "raw_relative_error": rep.raw_relative_error, "symmetry_defect": rep.symmetry_defect,
             "min_imag_eigenvalue": rep.min_imag_eigenvalue})


def _z_pred(key):
    from .locus_z import Z_PREDICTED

    return Z_PREDICTED[key]


def build_claims() -> list[Claim]:
    return [
        _degenerate("M4_degenerate", "M4(1,1,1,1)", (0, 1, 2, 3), 60.0),
        _degenerate("M6_1113_degenerate", "M6(1,1,1,3)", (0,), 90.0),
        Claim("exponent_count", "positive-exponent count = number of k with dims (1, 1), N = 4..12",
              Provenance("theory", "cyclic covers: the number of positive exponents equals the number of k "
                                   "with dim H^{1,0}_k = dim H^{1,0}_{N-k} = 1"),
              (CheckSpec("mismatches", 0, mode="exact"), CheckSpec("specs", 48, mode="exact")),
              _exponent_count_run),
        Claim("M8_1133_values", "M8(1,1,3,3) non-negative spectrum {1, 1/2, 1/2, 0^4}",
              Provenance("oracle", "lambda_k = 2 min_j min({k a_j/N}, 1 - {k a_j/N}) evaluated in exact rationals"),
              (CheckSpec("nonnegative", [1.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0], 0.02),), _m8_values_run),
        Claim("Z_spectrum", "locus Z member over the L-shape: total and per-block spectrum, 2e6 steps",
              Provenance("theory", "Z spectrum {1, 4/9, 4/9, 1/3, 0^6}; W3 {1, 1/3}; W2 {4/9, 4/9, 0, 0}; W1 zero"),
              (CheckSpec("total", _z_pred("total"), 0.02), CheckSpec("W3", _z_pred("W3"), 0.02),
               CheckSpec("W2", _z_pred("W2"), 0.02), CheckSpec("W1", [0.01] * 4, mode="max"),
               CheckSpec("runtime_s", 600.0, mode="max")),
              _z_spectrum_run),
        Claim("M6_1113_second_fundamental_form", "M6(1,1,1,3) at tau = i: B(omega, omega), zero pattern, rank 1",
              Provenance("theory", "B(omega, omega) = |omega|^2 = 1; deck symmetry forces B_ij = 0 unless "
                                   "u_i u_j = u^2, leaving rank 1"),
              (CheckSpec("B_omega_omega", 1.0, 1e-6), CheckSpec("forced_zero_max", 1e-8, mode="max"),
               CheckSpec("sigma_2", 1e-6, mode="max"), CheckSpec("rank", 1, mode="exact"),
               CheckSpec("Lambda_1", 1.0, 1e-6), CheckSpec("Lambda_2", 1e-6, mode="max"),
               CheckSpec("runtime_s", 300.0, mode="max")),
              _m6_sff_run),
        Claim("Z_rank", "locus Z: rank B = 4, corank 6, B on W2 of rank 2 with zero diagonal blocks",
              Provenance("theory", "on Z the corank of B is 6; on W2 only the (zeta^2, zeta^4) pairing survives"),
              (CheckSpec("rank", 4, mode="exact"), CheckSpec("corank", 6, mode="exact"),
               CheckSpec("gap_orders", 3.0, mode="min"), CheckSpec("W2_rank", 2, mode="exact"),
               CheckSpec("W2_diagonal_max", 1e-8, mode="max")),
              _z_rank_run),
        Claim("kontsevich_formula", "M8 Monte-Carlo mean of sum Lambda vs Lyapunov sums; M4/M6 identity",
              Provenance("oracle", "two independent pipelines: Hodge quadrature averaged over the Teichmueller "
                                   "curve and the simulated cocycle (plus the exact exponent formula)"),
              (CheckSpec("mean_vs_lyapunov", 0.05, mode="max"), CheckSpec("mean_vs_formula", 0.05, mode="max"),
               CheckSpec("block_deviation", [0.07] * 4, mode="max"),
               CheckSpec("M4_max_deviation", 1e-5, mode="max"), CheckSpec("M6_max_deviation", 1e-5, mode="max")),
              _kontsevich_run),
        Claim("property_suites", "Phi_k identities, symplecticity, spectrum symmetry, Hodge star, Oseledets",
              Provenance("invariant", "identities valid for every input: two expressions of Phi_k and its bound, "
                                      "M^T J M = J, lambda_i = -lambda_{2g+1-i}, ** = -I, (c1, c2) = <c1, *c2>"),
              (CheckSpec("phi_equality", 1e-10, mode="max"), CheckSpec("phi_bound_excess", 1e-12, mode="max"),
               CheckSpec("symplectic_failures", 0, mode="exact"), CheckSpec("spectrum_symmetry_ratio", 1.0, mode="max"),
               CheckSpec("star_identities", True, mode="exact"), CheckSpec("oseledets_pairing", 1e-3, mode="max"),
               CheckSpec("oseledets_resolved_pairs", 1, mode="min")),
              _property_run),
        Claim("rauch_variation", "M6(1,1,1,3): central difference of the period matrix vs B(theta_i, theta_j)",
              Provenance("oracle", "period matrix by contour quadrature against B by area quadrature; flow "
                                   "constant 2i d fixed by the flat torus"),
              (CheckSpec("relative_error", 1e-3, mode="max"), CheckSpec("observed_order", 2.0, 0.2)),
              _rauch_run),
    ]


def claims_by_id() -> dict[str, Claim]:
    return {c.id: c for c in build_claims()}


def run_suite(only=None, budget: float = 1.0, expected: dict | None = None, progress=None) -> list[VerificationRecord]:
    claims = claims_by_id()
    ids = list(claims) if not only else list(only)
    unknown = [i for i in ids if i not in claims]
    if unknown:
        raise VerificationError(f"unknown claims {unknown}; known: {sorted(claims)}")
    out = []
    for i in ids:
        rec = run_claim(claims[i], budget, (expected or {}).get(i))
        if progress is not None:
            progress(rec)
        out.append(rec)
    return out
