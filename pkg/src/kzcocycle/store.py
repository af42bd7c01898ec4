"""Targets (cover specs, origami files, Z members) and the automaton cache."""
from __future__ import annotations

import hashlib
import json
import os
import pickle
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .cyclic_cover import CoverResult, CyclicCoverSpec, build_cover, parse_spec
from .flat_surface import Origami, Permutation, SurfaceError, canonical_form, l_shape
from .locus_z import ZCandidate, ZValidation, find_z_member
from .lyapunov_engine import OrbitAutomaton, build_automaton


class TargetError(ValueError):
    pass


@dataclass
class Target:
    kind: str  # "cover", "origami" or "locus-z"
    label: str
    origami: Origami
    spec: CyclicCoverSpec | None = None
    cover: CoverResult | None = None
    deck: Permutation | None = None
    candidate: ZCandidate | None = None
    validation: ZValidation | None = None

    @property
    def deck_order(self) -> int | None:
        if self.kind == "cover":
            return self.spec.N
        if self.kind == "locus-z":
            return 6
        return None


def read_origami(path) -> Origami:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise TargetError(f"cannot read origami file {path}: {exc}") from exc
    try:
        return Origami.from_json(data)
    except (KeyError, TypeError, SurfaceError) as exc:
        raise TargetError(f"{path}: not a valid origami ({exc})") from exc


def _z_target(base_file: str | None) -> Target:
    base = read_origami(base_file) if base_file else l_shape()
    cand, val = find_z_member(base)
    label = f"locus-z:from={base_file}" if base_file else "locus-z"
    return Target("locus-z", label, cand.origami, deck=val.symmetry, candidate=cand, validation=val)


def resolve_target(text: str, from_file: str | None = None) -> Target:
    text = text.strip()
    if text.lower() in ("z", "locus-z"):
        return _z_target(from_file)
    if text.lower().startswith("locus-z:from="):
        return _z_target(text.split("=", 1)[1])
    if text.upper().startswith("M") and "(" in text:
        spec = parse_spec(text)
        cover = build_cover(spec)
        return Target("cover", str(spec), cover.origami, spec=spec, cover=cover, deck=cover.deck)
    if os.path.exists(text):
        return Target("origami", Path(text).name, read_origami(text))
    raise TargetError(f"unrecognized target {text!r}: expected M<N>(a1,a2,a3,a4), an origami file or locus-z")


def automaton_key(o: Origami, deck: Permutation | None) -> str:
    payload = {"origami": canonical_form(o).to_json(), "version": __version__}
    if deck is not None:
        payload["start"] = o.to_json()
        payload["deck"] = list(deck.images)
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:24]


def load_automaton(target: Target, cache_dir: str | Path | None = None, with_deck: bool = True) -> OrbitAutomaton:
    """Orbit automaton of the target, cached under a content-addressed name."""
    deck = target.deck if with_deck else None
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"automaton-{automaton_key(target.origami, deck)}.pkl"
        if path.exists():
            with open(path, "rb") as fh:
                return pickle.load(fh)
    aut = build_automaton(target.origami, deck=deck, deck_sign=-1)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            pickle.dump(aut, fh)
        tmp.replace(path)
    return aut
