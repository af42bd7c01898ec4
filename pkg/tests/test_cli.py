import json

import pytest
from click.testing import CliRunner

from kzcocycle.cli import main
from kzcocycle.config import ConfigError, build_config, parse_count, parse_seeds
from kzcocycle.verification import CheckSpec, Claim, Provenance, VerificationError, compare


@pytest.fixture()
def run(tmp_path, monkeypatch):
    monkeypatch.setenv("KZCOCYCLE_CACHE", str(tmp_path / "cache"))
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return invoke


def test_parse_helpers():
    assert parse_count("1e6") == parse_count("10**6") == parse_count("1_000_000") == 10**6
    assert parse_seeds("0..3") == (0, 1, 2, 3)
    assert parse_seeds("4,7") == (4, 7)
    with pytest.raises(ConfigError):
        parse_count("2.5")


def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text("target = M6(1,1,1,3)  # comment\nsteps = 2e4\nseeds = 0..1\nblocks = rational\n")
    cfg = build_config(cfg_file)
    assert (cfg.target, cfg.steps, cfg.seeds, cfg.blocks) == ("M6(1,1,1,3)", 20000, (0, 1), "rational")
    cfg = build_config(cfg_file, steps="3e4", seeds=None)
    assert cfg.steps == 30000 and cfg.seeds == (0, 1)


@pytest.mark.parametrize("text", ["steps = 100", "unknown = 1", "tolerance = 1e-2", "process = bogus", "nokey"])
def test_config_rejects(tmp_path, text):
    f = tmp_path / "bad.cfg"
    f.write_text(text + "\n")
    with pytest.raises(ConfigError):
        build_config(f)


def test_build_outputs(run, tmp_path):
    out = tmp_path / "o"
    res = run("build", "M6(1,1,1,3)", "--out", out)
    assert res.exit_code == 0, res.output
    data = json.loads((out / "M6_1_1_1_3.analysis.json").read_text())
    assert data["genus"] == 4
    assert (out / "M6_1_1_1_3.origami.json").exists()


@pytest.mark.parametrize("target", ["M4(1,1,1,2)", "M5(1,1,1)", "nonsense"])
def test_build_rejects_bad_targets(run, tmp_path, target):
    assert run("build", target, "--out", tmp_path).exit_code == 2


def test_lyapunov_determinism_and_files(run, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        res = run("lyapunov", "M6(1,1,1,3)", "--steps", "2e4", "--seeds", "2", "--blocks", "rational",
                  "--out", out, "--format", "png")
        assert res.exit_code == 0, res.output
    name = "M6_1_1_1_3"
    assert (a / f"{name}.lyapunov.json").read_bytes() == (b / f"{name}.lyapunov.json").read_bytes()
    for f in (f"{name}.trace_seed0.csv", f"{name}.trace_seed1.csv", f"{name}.convergence.png", f"{name}.spectrum.png"):
        assert (a / f).exists(), f
    report = json.loads((a / f"{name}.lyapunov.json").read_text())
    assert report["config"]["seeds"] == [0, 1]
    assert "d=2" in report["merged"]["blocks"]


def test_lyapunov_config_file(run, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"target = M6(1,1,1,3)\nsteps = 1e5\noutput = {tmp_path / 'c'}\n")
    res = run("lyapunov", "--config", cfg, "--steps", "1e4", "--no-plot")
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "c" / "M6_1_1_1_3.lyapunov.json").read_text())
    assert report["config"]["steps"] == 10**4


def test_lyapunov_rejects_short_runs(run, tmp_path):
    assert run("lyapunov", "M6(1,1,1,3)", "--steps", "100", "--out", tmp_path).exit_code == 2


def test_hodge_rank_only_z(run, tmp_path):
    res = run("hodge", "locus-z", "--rank-only", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "rank 4" in res.output and "corank 6" in res.output


def test_hodge_report(run, tmp_path):
    res = run("hodge", "M6(1,1,1,3)", "--out", tmp_path, "--format", "svg")
    assert res.exit_code == 0, res.output
    data = json.loads((tmp_path / "M6_1_1_1_3.hodge.json").read_text())
    assert data["rank"] == 1
    assert (tmp_path / "M6_1_1_1_3.phi_k.csv").exists()
    assert (tmp_path / "M6_1_1_1_3.singular_values.svg").exists()


def test_verify_list_and_run(run, tmp_path):
    res = run("verify", "--list")
    assert res.exit_code == 0 and "Z_rank" in res.output
    res = run("verify", "--only", "M6_1113_second_fundamental_form", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert res.output.startswith("PASS")
    assert json.loads((tmp_path / "verification.json").read_text())["passed"] is True


def test_verify_tampered_expectation_fails(run, tmp_path):
    res = run("verify", "--only", "M6_1113_second_fundamental_form", "--expect",
              "M6_1113_second_fundamental_form:rank=2", "--out", tmp_path)
    assert res.exit_code == 3
    assert "FAIL" in res.output


def test_verify_unknown_claim(run, tmp_path):
    assert run("verify", "--only", "no_such_claim", "--out", tmp_path).exit_code == 2


def test_claim_requires_provenance():
    with pytest.raises(VerificationError):
        Claim("x", "t", None, (), lambda b: ({}, {}))
    with pytest.raises(VerificationError):
        Claim("x", "t", Provenance("hearsay", "me"), (), lambda b: ({}, {}))


def test_compare_modes():
    assert compare(CheckSpec("a", 1.0, 0.1, "abs"), 1.05).passed
    assert not compare(CheckSpec("a", 1.0, 0.01, "rel"), 1.05).passed
    assert compare(CheckSpec("a", 3, mode="exact"), 3).passed
    assert compare(CheckSpec("a", 1e-3, mode="max"), 5e-4).passed
    assert not compare(CheckSpec("a", 2, mode="min"), 1).passed
