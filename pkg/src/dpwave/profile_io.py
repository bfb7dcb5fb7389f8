"""Bit-stable file formats: profile documents (JSON), traces and sweeps (CSV).

Documents round-trip losslessly: floats are written with 17 significant
digits (enough to reproduce any double exactly), key order is fixed, and a
rewrite of a parsed document is byte-identical apart from the timestamp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .decay import ConvEstimateVerdict
from .evolution import EvolutionTrace
from .grids import Grid
from .steady import WaveProfile

SCHEMA_VERSION = 1


class DocumentError(ValueError):
    """Malformed or unreadable profile document."""


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class ProfileDocument:
    profile: WaveProfile
    provenance: dict

    @classmethod
    def create(cls, profile: WaveProfile, command: str = "") -> "ProfileDocument":
        return cls(profile, {
            "command": command,
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        })


def write_profile(path, doc: ProfileDocument) -> None:
    p = doc.profile
    g = p.grid
    values = ", ".join(_fmt(v) for v in p.phi)
    text = (
        "{\n"
        f'  "schema_version": {SCHEMA_VERSION},\n'
        '  "grid": {"kind": ' + json.dumps(g.kind) + ', "n": ' + str(g.n)
        + ', "half_length": ' + _fmt(g.half_length) + "},\n"
        f'  "c": {_fmt(p.c)},\n'
        f'  "a": {_fmt(p.a)},\n'
        f'  "values": [{values}],\n'
        '  "provenance": ' + json.dumps(doc.provenance, sort_keys=True) + "\n"
        "}\n"
    )
    Path(path).write_text(text)


def read_profile(path) -> ProfileDocument:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"cannot read profile document: {exc}") from exc
    try:
        if raw["schema_version"] != SCHEMA_VERSION:
            raise DocumentError(f"unsupported schema version {raw['schema_version']}")
        g = raw["grid"]
        grid = Grid(g["kind"], int(g["n"]), float(g["half_length"]))
        profile = WaveProfile(grid, np.array(raw["values"], dtype=float),
                              float(raw["c"]), float(raw["a"]))
        return ProfileDocument(profile, dict(raw.get("provenance", {})))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DocumentError):
            raise
        raise DocumentError(f"malformed profile document: {exc}") from exc


def write_trace_csv(path, trace: EvolutionTrace) -> None:
    lines = ["t,lambda,lambda_dot,shape_error,symmetry_error,l2_norm"]
    for s in trace.samples:
        lines.append(",".join(_fmt(v) for v in
                              (s.t, s.lam, s.lam_dot, s.shape_error,
                               s.symmetry_error, s.l2_norm)))
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_csv(path, verdicts: list[ConvEstimateVerdict]) -> None:
    lines = ["l,m,sigma,y,lhs,rhs_paper,rhs_safe,ok_paper,ok_safe"]
    for v in verdicts:
        c = v.case
        lines.append(",".join(
            [_fmt(c.l), _fmt(c.m), _fmt(c.sigma), _fmt(c.y), _fmt(c.lhs),
             _fmt(v.rhs_paper), _fmt(v.rhs_safe),
             str(v.ok_paper).lower(), str(v.ok_safe).lower()]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_intervals_csv(path, sets) -> None:
    """Reflection-set intervals: one row per interval."""
    lines = ["lambda,interval_start,interval_end"]
    for rs in sets:
        for a, b in rs.intervals:
            lines.append(f"{_fmt(rs.lam)},{_fmt(a)},{_fmt(b)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True,
                                     default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")
