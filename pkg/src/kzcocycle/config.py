"""Experiment configuration: flat ``key = value`` files, overridable by flags.

Schema (all keys optional):

    target       = M8(1,1,3,3) | <origami.json> | locus-z | locus-z:from=<file>
    steps        = 1000000          # integer >= 10^4, "1e6" accepted
    seeds        = 0,1,2,3          # comma list or a range a..b (inclusive)
    qr_interval  = 8
    blocks       = none | rational | eigen | d=3,W2,...
    tolerance    = 1e-10            # quadrature relative tolerance, in [1e-12, 1e-4]
    samples      = 200              # Kontsevich samples
    process      = gauss-map | iid
    output       = out
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

MIN_STEPS = 10**4
TOL_RANGE = (1e-12, 1e-4)


class ConfigError(ValueError):
    pass


def parse_count(text) -> int:
    """Integer from "1000000", "1e6" or "10**6"."""
    if isinstance(text, int):
        return text
    s = str(text).strip().replace("_", "")
    try:
        if "**" in s:
            base, exp = s.split("**")
            return int(base) ** int(exp)
        x = float(s)
    except ValueError as exc:
        raise ConfigError(f"not a count: {text!r}") from exc
    if x != int(x):
        raise ConfigError(f"not an integer: {text!r}")
    return int(x)


def parse_seeds(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    s = str(text).strip()
    if ".." in s:
        lo, hi = s.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    try:
        return tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad seed list {text!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    target: str = ""
    steps: int = 10**6
    seeds: tuple[int, ...] = (0,)
    qr_interval: int = 8
    blocks: str = "none"
    tolerance: float = 1e-10
    samples: int = 200
    process: str = "gauss-map"
    output: str = "out"
    extra: dict = field(default_factory=dict, compare=False)

    def validate(self) -> "ExperimentConfig":
        if self.steps < MIN_STEPS:
            raise ConfigError(f"steps={self.steps} is below {MIN_STEPS}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.qr_interval < 1:
            raise ConfigError("qr_interval must be positive")
        lo, hi = TOL_RANGE
        if not lo <= self.tolerance <= hi:
            raise ConfigError(f"tolerance={self.tolerance} outside [{lo}, {hi}]")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if self.process not in ("gauss-map", "iid"):
            raise ConfigError(f"unknown digit process {self.process!r}")
        return self

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "steps": self.steps,
            "seeds": list(self.seeds),
            "qr_interval": self.qr_interval,
            "blocks": self.blocks,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "process": self.process,
        }


_CONVERT = {
    "steps": parse_count,
    "seeds": parse_seeds,
    "qr_interval": parse_count,
    "samples": parse_count,
    "tolerance": float,
}
_KEYS = {f.name for f in fields(ExperimentConfig)} - {"extra"}


def read_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """File values first, then every non-None override."""
    values: dict = {}
    if path is not None:
        try:
            values.update(read_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    typed = {}
    for k, v in values.items():
        try:
            typed[k] = _CONVERT[k](v) if k in _CONVERT else v
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
    return replace(ExperimentConfig(), **typed).validate()
