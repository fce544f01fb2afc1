"""CSV/JSON outputs: error traces, profiles, verdicts and sweep tables.

Every file starts with ``#`` metadata lines carrying the config hash; floats
are written with 17 significant digits so they re-parse bit-identically.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .schema import VERDICT_SCHEMA_ID

SWEEP_COLUMNS = [
    "index", "scheme", "ic", "amplitude", "dx", "dt", "config_hash", "stop_reason", "solution_kind",
    "symmetry", "label", "peak_count", "aggregation_count", "l1_norm", "final_time", "error",
]


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


@dataclass
class OutputBundle:
    config_hash: str
    error_times: List[int] = field(default_factory=list)
    error_values: List[float] = field(default_factory=list)
    x: Optional[np.ndarray] = None
    profiles: Dict[int, tuple] = field(default_factory=dict)  # t -> (u_plus, u_minus)
    verdict: Optional[dict] = None
    sweep_rows: Optional[List[dict]] = None

    @classmethod
    def from_record(cls, rec) -> "OutputBundle":
        return cls(
            config_hash=rec.config_hash,
            error_times=list(rec.series.times),
            error_values=list(rec.series.values),
            x=rec.config.grid.x,
            profiles={t: (s.u_plus, s.u_minus) for t, s in rec.snapshots.items()},
            verdict=verdict_document(rec),
        )


def verdict_document(rec) -> dict:
    v = rec.verdict
    return {
        "schema": VERDICT_SCHEMA_ID,
        "config_hash": rec.config_hash,
        "config": rec.config.to_dict(),
        "verdict": {
            "stop_reason": v.stop_reason.value,
            "solution_kind": v.solution_kind.value,
            "symmetry": v.symmetry.value,
            "label": v.label,
            "peak_count": v.peak_count,
            "aggregation_count": v.aggregation_count,
            "symmetry_residual": v.symmetry_residual,
            "t0": v.t0,
            "stop_time": v.stop_time,
        },
        "minima": [{"t": m.t, "E": m.E, "kind": m.kind.value} for m in rec.minima if m.t is not None],
        "nonconvergence": None
        if rec.nonconvergence is None or rec.nonconvergence.band is None
        else {"flagged": rec.nonconvergence.flagged, "band": list(rec.nonconvergence.band)},
        "final_time": rec.series.last_time,
        "steps": rec.steps,
        "wall_clock_s": rec.wall_clock,
        "mass_initial": rec.mass_initial,
        "mass_final": rec.mass_final,
        "health": rec.health,
        "kernels": rec.kernels,
    }


def _header(config_hash: str, kind: str, columns: List[str]) -> str:
    return f"# config_hash: {config_hash}\n# file: {kind}\n" + ",".join(columns) + "\n"


def error_series_text(b: OutputBundle) -> str:
    lines = [_header(b.config_hash, "error_series", ["t", "E"])]
    lines += [f"{t},{fmt(e)}\n" for t, e in zip(b.error_times, b.error_values)]
    return "".join(lines)


def profiles_text(b: OutputBundle) -> str:
    out = [_header(b.config_hash, "profiles", ["t", "x", "u_plus", "u_minus", "u"])]
    for t, (up, um) in sorted(b.profiles.items()):
        out.append(f"# block t={t}\n")
        u = up + um
        out += [f"{t},{fmt(x)},{fmt(p)},{fmt(m)},{fmt(s)}\n" for x, p, m, s in zip(b.x, up, um, u)]
    return "".join(out)


def sweep_text(config_hash: str, rows: List[dict]) -> str:
    buf = _io.StringIO()
    buf.write(f"# config_hash: {config_hash}\n# file: sweep\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: fmt(r.get(k)) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        tmp.replace(path)
    except OSError as err:
        raise OSError(f"failed to write {path}: {err}") from err
    return path


def emit(bundle: OutputBundle, out_dir) -> List[Path]:
    """Write the bundle into ``out_dir/<config_hash>/``; re-running overwrites the same files."""
    folder = Path(out_dir) / bundle.config_hash
    try:
        folder.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {folder}: {err}") from err
    written = []
    if bundle.verdict is not None or bundle.error_times:
        written.append(_write(folder / "error_series.csv", error_series_text(bundle)))
    if bundle.profiles:
        written.append(_write(folder / "profiles.csv", profiles_text(bundle)))
    if bundle.verdict is not None:
        written.append(_write(folder / "verdict.json", json.dumps(bundle.verdict, indent=2, default=_json_default) + "\n"))
    if bundle.sweep_rows is not None:
        written.append(_write(folder / "sweep.csv", sweep_text(bundle.config_hash, bundle.sweep_rows)))
    return written


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def read_error_series(path):
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=3, ndmin=2)
    return data[:, 0].astype(int), data[:, 1]


def read_profiles(path) -> Dict[int, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=3, ndmin=2)
    return {int(t): data[data[:, 0] == t, 1:] for t in np.unique(data[:, 0])}


def read_sweep(path) -> List[dict]:
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))
