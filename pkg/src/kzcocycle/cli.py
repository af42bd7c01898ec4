"""Command-line front end: build, lyapunov, hodge, verify.

Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 verification failure.
"""
from __future__ import annotations

import csv
import functools
import json
import math
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, build_config, parse_count
from .cyclic_cover import SpecError
from .flat_surface import SurfaceError, canonical_id
from .locus_z import Z_PREDICTED, ZError
from .store import Target, TargetError, load_automaton, resolve_target

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3
INPUT_ERRORS = (SpecError, ConfigError, TargetError, SurfaceError, ZError)


class VerificationFailed(click.ClickException):
    exit_code = EXIT_VERIFY


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _clean(x.item())
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(data), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def slug(target: Target) -> str:
    out = "".join(c if c.isalnum() else "_" for c in target.label).strip("_")
    while "__" in out:
        out = out.replace("__", "_")
    return out


def guarded(fn):
    """Map library exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except INPUT_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except Exception as exc:
            click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(x.strip().lower() for x in text.split(",") if x.strip())
    bad = [f for f in fmts if f not in ("png", "svg", "pdf")]
    if bad:
        raise ConfigError(f"unsupported figure formats {bad}")
    return fmts


@click.group()
@click.version_option(__version__, prog_name="kzcocycle")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None, envvar="KZCOCYCLE_CACHE",
              help="Directory for cached orbit automatons (default ~/.cache/kzcocycle).")
@click.pass_context
def main(ctx, cache_dir):
    """Kontsevich-Zorich cocycle experiments on square-tiled cyclic covers."""
    ctx.obj = {"cache": cache_dir or os.path.join(os.path.expanduser("~"), ".cache", "kzcocycle")}


# --------------------------------------------------------------------------
# build


@main.command()
@click.argument("target")
@click.option("--from", "from_file", type=click.Path(dir_okay=False), default=None, help="Base origami for locus-z.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@guarded
def build(target, from_file, out_dir):
    """Build a cover, origami or locus-Z member and write its analysis."""
    from .spectral_decomp import block_dimension_formula, divisors, partition_and_predictions

    t = resolve_target(target, from_file)
    out = Path(out_dir)
    name = slug(t)
    o = t.origami
    summary = {
        "target": t.label,
        "kind": t.kind,
        "squares": o.n,
        "genus": o.genus,
        "stratum": list(o.profile.zero_orders),
        "canonical_id": canonical_id(o),
        "software_version": __version__,
    }
    if t.kind == "cover":
        data = t.cover.to_json()
        data["branch_fibers"] = [list(map(list, f)) for f in t.cover.branch_fibers]
        eig = partition_and_predictions(t.spec)
        summary["eigen_data"] = eig.to_json()
        summary["predicted_spectrum"] = [str(x) for x in eig.predicted_spectrum(o.genus)]
        summary["block_dimensions"] = {f"d={d}": block_dimension_formula(t.spec, d) for d in divisors(t.spec.N)}
        click.echo(f"{t.label}: {o.n} squares, genus {o.genus}, stratum H{tuple(summary['stratum'])}, "
                   f"I1 = {set(eig.i1) or '{}'}")
    elif t.kind == "locus-z":
        data = t.candidate.to_json()
        data["symmetry"] = list(t.validation.symmetry.images)
        summary["validation"] = t.validation.diagnostics
        click.echo(f"{t.label}: validated Z member, {o.n} squares, genus {o.genus}, "
                   f"blocks {t.validation.diagnostics['block_dims']}")
    else:
        data = o.to_json()
        click.echo(f"{t.label}: {o.n} squares, genus {o.genus}, stratum H{tuple(summary['stratum'])}")
    p1 = write_json(out / f"{name}.origami.json", data)
    p2 = write_json(out / f"{name}.analysis.json", summary)
    click.echo(f"wrote {p1} and {p2}")


# --------------------------------------------------------------------------
# lyapunov


def select_blocks(selector: str, order: int | None):
    from .lyapunov_engine import eigen_block_specs, rational_block_specs

    sel = (selector or "none").strip()
    if sel == "none":
        return []
    if order is None:
        raise ConfigError("blocks need a deck transformation: use a cyclic-cover spec or locus-z target")
    rational, eigen = rational_block_specs(order), eigen_block_specs(order)
    if sel == "rational":
        return rational
    if sel == "eigen":
        return eigen
    known = {b.label: b for b in rational + eigen}
    out = []
    for label in (x.strip() for x in sel.split(",") if x.strip()):
        if label not in known:
            raise ConfigError(f"unknown block {label!r}; known: {', '.join(known)}")
        out.append(known[label])
    return out


def _predicted(t: Target):
    if t.kind == "cover":
        from .spectral_decomp import partition_and_predictions

        return [float(x) for x in partition_and_predictions(t.spec).predicted_spectrum(t.origami.genus)]
    if t.kind == "locus-z":
        return list(Z_PREDICTED["total"])
    return None


@main.command()
@click.argument("target", required=False)
@click.option("--config", "config_file", type=click.Path(dir_okay=False, exists=True), default=None,
              help="Flat key = value file; flags override it.")
@click.option("--steps", default=None, help="Word length, e.g. 1e6.")
@click.option("--seeds", default=None, help="Number of seeds, or an explicit list 0,1,5 / range 0..3.")
@click.option("--qr-interval", type=int, default=None)
@click.option("--blocks", default=None, help="none | rational | eigen | comma list such as d=3,W2.")
@click.option("--process", type=click.Choice(["gauss-map", "iid"]), default=None)
@click.option("--from", "from_file", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", default="png,svg", show_default=True, help="Figure formats.")
@click.option("--plot/--no-plot", default=True, show_default=True)
@click.pass_context
@guarded
def lyapunov(ctx, target, config_file, steps, seeds, qr_interval, blocks, process, from_file, out_dir, fmt, plot):
    """Estimate Lyapunov exponents (full spectrum and deck blocks)."""
    from .lyapunov_engine import merge_reports, run_oseledets, sample_word
    from .plotting import plot_convergence, plot_spectrum

    seed_arg = None
    if seeds is not None:
        seed_arg = tuple(range(int(seeds))) if seeds.strip().isdigit() else seeds
    cfg = build_config(config_file, target=target, steps=steps, seeds=seed_arg, qr_interval=qr_interval,
                       blocks=blocks, process=process, output=out_dir)
    if not cfg.target:
        raise ConfigError("no target given (argument or 'target' key)")
    t = resolve_target(cfg.target, from_file)
    chosen = select_blocks(cfg.blocks, t.deck_order)
    aut = load_automaton(t, ctx.obj["cache"], with_deck=bool(chosen))
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    name = slug(t)
    reports = []
    for s in cfg.seeds:
        word = sample_word(s, cfg.steps, cfg.process)
        trace = out / f"{name}.trace_seed{s}.csv"
        reports.append(run_oseledets(aut, word, qr_interval=cfg.qr_interval, blocks=[replace(b) for b in chosen],
                                     trace_path=str(trace)))
    merged = merge_reports(reports) if len(reports) > 1 else reports[0]
    predicted = _predicted(t)
    g = t.origami.genus
    report = {
        "target": t.label,
        "genus": g,
        "orbit_size": aut.size,
        "config": cfg.to_json(),
        "predicted_nonnegative": predicted,
        "merged": merged.to_json(),
        "nonnegative": merged.nonnegative(),
        "nonnegative_stderr": merged.stderr[: len(merged.nonnegative())],
        "per_seed": [r.to_json() for r in reports],
        "software_version": __version__,
    }
    path = write_json(out / f"{name}.lyapunov.json", report)
    click.echo(f"{t.label}: orbit {aut.size}, {cfg.steps} steps x {len(cfg.seeds)} seeds")
    click.echo("  nonnegative: " + ", ".join(f"{x:.4f}" for x in merged.nonnegative()))
    for label, data in merged.blocks.items():
        ex = data["exponents"]
        click.echo(f"  {label} (dim {data['dimension']}): " + ", ".join(f"{x:.4f}" for x in ex[: len(ex) // 2]))
    click.echo(f"wrote {path}")
    if plot:
        formats = _formats(fmt)
        first = out / f"{name}.trace_seed{cfg.seeds[0]}.csv"
        figs = plot_convergence(first, out / f"{name}.convergence", formats, title=t.label)
        nn = merged.nonnegative()
        figs += plot_spectrum(nn, merged.stderr[: len(nn)], predicted, out / f"{name}.spectrum", formats,
                              title=t.label)
        click.echo("figures: " + ", ".join(str(p) for p in figs))


# --------------------------------------------------------------------------
# hodge


def _parse_tau(text: str) -> complex:
    try:
        if "," in text:
            re_, im = text.split(",")
            return complex(float(re_), float(im))
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"bad tau {text!r}; use re,im or 0.5+1.2j") from exc


def _phi_table(sff) -> list[dict]:
    from .hodge_analytic import phi_k

    rows = []
    g = sff.genus
    for k in range(1, g + 1):
        a, b = phi_k(sff.B, sff.H, k)
        rows.append({"k": k, "phi_first": a, "phi_second": b, "bound": min(2 * k, g)})
    return rows


@main.command()
@click.argument("target")
@click.option("--tau", default="0,1", show_default=True, help="Point of the upper half-plane, as re,im.")
@click.option("--rank-only", is_flag=True, help="Only report rank and corank of B.")
@click.option("--tolerance", type=float, default=None, help="Quadrature relative tolerance.")
@click.option("--max-error", type=float, default=1e-6, show_default=True,
              help="Fail if the estimated quadrature error exceeds this.")
@click.option("--kontsevich", is_flag=True, help="Monte-Carlo average of sum Lambda over the Teichmueller curve.")
@click.option("--samples", default="200", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lyapunov-steps", default="1e6", show_default=True,
              help="Steps for the paired Lyapunov run (0 disables it).")
@click.option("--rauch", is_flag=True, help="Finite-difference check of the period-matrix variation.")
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--from", "from_file", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--format", "fmt", default="png,svg", show_default=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
@click.pass_context
@guarded
def hodge(ctx, target, tau, rank_only, tolerance, max_error, kontsevich, samples, seed, lyapunov_steps, rauch, dt,
          from_file, out_dir, fmt, plot):
    """Second fundamental form B, curvature H, Lambda, rank and Phi_k."""
    from .hodge_analytic import (
        RANK_TOL,
        kontsevich_check,
        rauch_check,
        real_annihilator,
        second_fundamental_form,
        symmetry_zero_pattern,
        teichmueller_point,
        z_configuration,
    )
    from .hodge_quadrature import QuadratureSettings
    from .plotting import plot_kontsevich, plot_singular_values

    cfg = build_config(None, target=target, tolerance=tolerance, samples=samples, output=out_dir)
    out = Path(cfg.output)
    formats = _formats(fmt)
    settings = None
    if tolerance is not None:
        settings = replace(QuadratureSettings(), epsrel=cfg.tolerance, epsabs=cfg.tolerance / 10)
    is_z = target.strip().lower() in ("z", "locus-z") or target.lower().startswith("locus-z:")
    if is_z:
        if kontsevich or rauch:
            raise ConfigError("--kontsevich and --rauch need a cyclic-cover spec")
        spec, config, name, label = None, z_configuration(), "locus_z", "locus-z"
    else:
        t = resolve_target(target, from_file)
        if t.kind != "cover":
            raise ConfigError("hodge needs a cyclic-cover spec or locus-z")
        spec, name, label = t.spec, slug(t), t.label
        config = teichmueller_point(spec, _parse_tau(tau))
    sff = second_fundamental_form(spec, config, settings=settings)
    if not sff.quadrature_error <= max_error:
        raise RuntimeError(f"quadrature error {sff.quadrature_error:.2e} exceeds {max_error:.0e}; "
                           "tolerance unreachable at this budget")
    g = sff.genus
    click.echo(f"{label}: rank {sff.rank} / corank {g - sff.rank}"
               + ("  (indeterminate at this tolerance)" if sff.indeterminate else ""))
    report = {"target": label, "genus": g, "rank": sff.rank, "corank": g - sff.rank,
              "singular_values": sff.singular_values, "indeterminate": sff.indeterminate,
              "rank_tol": RANK_TOL, "quadrature_error": sff.quadrature_error, "software_version": __version__}
    if not rank_only:
        mask, bound = symmetry_zero_pattern(sff.eigenvalues, sff.eigenvalues[0])
        table = _phi_table(sff)
        report.update(sff.to_json())
        report.update({
            "deck_eigenvalues": sff.eigenvalues,
            "forced_zero_max": float(np.abs(sff.B[mask]).max()) if mask.any() else 0.0,
            "symmetry_rank_bound": bound,
            "real_annihilator_dimension": int(real_annihilator(sff.B).shape[1]),
            "phi_k": table,
        })
        with open(_mk(out / f"{name}.phi_k.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "phi_first", "phi_second", "bound"])
            for r in table:
                w.writerow([r["k"], f"{r['phi_first']:.12g}", f"{r['phi_second']:.12g}", r["bound"]])
        click.echo("  Lambda: " + ", ".join(f"{x:.6f}" for x in sff.Lambda))
    path = write_json(out / f"{name}.hodge.json", report)
    click.echo(f"wrote {path}")
    if plot:
        figs = plot_singular_values(sff.singular_values, out / f"{name}.singular_values", formats, RANK_TOL, label)
        click.echo("figures: " + ", ".join(str(p) for p in figs))

    if kontsevich:
        n = parse_count(samples)
        lyap = None
        ls = parse_count(lyapunov_steps)
        if ls:
            from .lyapunov_engine import rational_block_specs, run_oseledets, sample_word

            aut = load_automaton(t, ctx.obj["cache"], with_deck=True)
            lyap = run_oseledets(aut, sample_word(seed, ls), blocks=rational_block_specs(spec.N))
        rep = kontsevich_check(spec, n, seed=seed, lyapunov=lyap)
        data = rep.to_json()
        data["predicted_sum"] = float(sum(_predicted(t)))
        write_json(out / f"{name}.kontsevich.json", data)
        with open(out / f"{name}.kontsevich_samples.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            labels = sorted(rep.block_traces)
            w.writerow(["sample", "tau_re", "tau_im", "locations", "sum_lambda"] + labels)
            for i, (tv, loc, tr) in enumerate(zip(rep.taus, rep.locations, rep.traces)):
                w.writerow([i, f"{tv.real:.12g}", f"{tv.imag:.12g}", " ".join(loc), f"{tr:.12g}"]
                           + [f"{rep.block_traces[k][i]:.12g}" for k in labels])
        ref = rep.lyapunov_sum if rep.lyapunov_sum is not None else data["predicted_sum"]
        click.echo(f"  kontsevich: mean sum Lambda = {rep.mean:.4f} +- {rep.stderr:.4f} over {n} samples; "
                   f"Lyapunov sum {ref:.4f} ({abs(rep.mean - ref) / ref:.2%})")
        if plot:
            plot_kontsevich(rep.traces, ref, out / f"{name}.kontsevich", formats, label)

    if rauch:
        rr = rauch_check(spec, _parse_tau(tau), dt=dt, halvings=1)
        write_json(out / f"{name}.rauch.json", rr.to_json())
        click.echo(f"  rauch: relative error {rr.relative_errors[0]:.2e} at dt={dt:g}, "
                   f"observed order {rr.observed_order:.2f}")


def _mk(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# --------------------------------------------------------------------------
# verify


def _parse_expect(items) -> dict:
    out: dict = {}
    for item in items:
        try:
            head, value = item.split("=", 1)
            cid, check = head.split(":", 1)
            out.setdefault(cid, {})[check] = json.loads(value)
        except ValueError as exc:
            raise ConfigError(f"bad --expect {item!r}; use CLAIM:CHECK=JSON") from exc
    return out


@main.command()
@click.option("--only", multiple=True, help="Run only these claim ids (repeatable).")
@click.option("--list", "list_only", is_flag=True, help="List claim ids and exit.")
@click.option("--expect", multiple=True, help="Override an expected value: CLAIM:CHECK=JSON.")
@click.option("--budget", type=float, default=1.0, show_default=True, help="Scale for steps and samples.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@guarded
def verify(only, list_only, expect, budget, out_dir):
    """Run the verification suite; exit 0 iff every record passes."""
    from .verification import VerificationError, build_claims, run_suite

    if list_only:
        for c in build_claims():
            click.echo(f"{c.id:<34} [{c.provenance.kind}] {c.title}")
        return
    try:
        records = run_suite(only or None, budget, _parse_expect(expect), progress=lambda r: click.echo(r.line()))
    except VerificationError as exc:
        raise ConfigError(str(exc)) from exc
    for r in records:
        for c in r.checks:
            if not c.passed:
                click.echo(f"    {r.claim_id}:{c.name}  expected {_clean(c.expected)}  measured "
                           f"{_clean(c.measured)}  ({c.mode}, tol {c.tolerance:g}, deviation {c.deviation:.3g})")
    path = write_json(Path(out_dir) / "verification.json",
                      {"records": [r.to_json() for r in records], "budget": budget,
                       "passed": all(r.passed for r in records), "software_version": __version__})
    n_pass = sum(r.passed for r in records)
    click.echo(f"{n_pass}/{len(records)} records pass; wrote {path}")
    if n_pass != len(records):
        raise VerificationFailed("verification failed")


if __name__ == "__main__":
    main()
