"""Command-line front end.

    nonlocal-fv --scheme qsa_mc --dx 0.0078125 --dt 0.015625 --amplitude 5 --T 2000 --out-dir out
    nonlocal-fv --sweep-amplitudes 0.1:36:0.1 --workers 4 --out-dir sweep

With no flags the run uses the default model constants, upwind, the sin02
profile with amplitude 2.5, dx = 2^-7 and dt = 2 dx.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import runner
from .diagnostics import DiagnosticThresholds
from .io import OutputBundle, emit
from .model import ConfigurationError, GridSpec, ModelParams
from .runner import InitialConditionSpec, RunConfig, run_simulation, sweep
from .schemes import SchemeId

log = logging.getLogger("nonlocal_fv")

DEFAULT_DX = 2.0**-7
DEFAULT_DT_RATIO = 2.0
DEFAULT_T = 2000.0

_PARAM_NAMES = [f.name for f in fields(ModelParams)]
_TOL_FIELDS = {f.name: f for f in fields(DiagnosticThresholds) if f.name != "early_stop"}


@dataclass(frozen=True)
class CliRequest:
    config: RunConfig
    out_dir: Optional[Path] = None
    sweep_amplitudes: Optional[Tuple[float, ...]] = None
    sweep_steps: Optional[Tuple[Tuple[float, float], ...]] = None
    workers: int = 1
    log_every: int = runner.PROGRESS_EVERY

    @property
    def is_sweep(self) -> bool:
        return self.sweep_amplitudes is not None or self.sweep_steps is not None


def amplitude_range(text: str) -> Tuple[float, ...]:
    """'a:b:step' -> a, a+step, ..., b (inclusive, rounded to 12 digits)."""
    try:
        a, b, h = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}") from None
    if h <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty amplitude range {text!r}")
    n = int(math.floor((b - a) / h + 1e-9))
    return tuple(round(a + i * h, 12) for i in range(n + 1))


def step_pairs(text: str) -> Tuple[Tuple[float, float], ...]:
    """'dx:dt,dx:dt,...'"""
    try:
        pairs = tuple(tuple(float(v) for v in item.split(":")) for item in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected dx:dt[,dx:dt...], got {text!r}") from None
    if any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f"expected dx:dt[,dx:dt...], got {text!r}")
    return pairs


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def read_params_file(path) -> dict:
    """``key = value`` lines (``#`` comments allowed) naming model constants."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise ConfigurationError(f"cannot read parameter file {path}: {err}") from err
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out.update(_param_item(key, value, f"{path}:{n}"))
    return out


def _param_item(key: str, value: str, where: str) -> dict:
    if key not in _PARAM_NAMES:
        raise ConfigurationError(f"{where}: unknown parameter {key!r}; known: {', '.join(_PARAM_NAMES)}")
    try:
        return {key: float(value)}
    except ValueError:
        raise ConfigurationError(f"{where}: parameter {key} needs a number, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-fv", description="Finite-volume runs of the nonlocal aggregation model.")
    p.add_argument("--scheme", default="upwind", help=f"one of: {', '.join(s.value for s in SchemeId)}")
    p.add_argument("--dx", type=float, default=DEFAULT_DX)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dt", type=float, help="time step (default 2*dx)")
    g.add_argument("--dt-ratio", type=float, help="dt = ratio * dx")
    g.add_argument("--courant", type=float, help="dt = courant * dx / gamma")
    p.add_argument("--T", type=float, default=DEFAULT_T, help="final time")
    p.add_argument("--amplitude", type=float, default=2.5)
    p.add_argument("--ic", default="sin02", help="sin02 | sin04 | rand | file:PATH")
    p.add_argument("--ic-base", type=float, default=2.0, help="homogeneous level the perturbation sits on")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", metavar="FILE", help="key = value overrides of model constants")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="single constant override (repeatable)")
    for name, f in _TOL_FIELDS.items():
        p.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=type(f.default), default=None)
    p.add_argument("--stop-factor", dest="tol_stop_factor_alias", type=float, default=None)
    p.add_argument("--no-early-stop", action="store_true", help="always run to T")
    p.add_argument("--snapshot-times", type=_float_list, default=(), help="comma-separated extra profile times")
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--checkpoint-every", type=int, default=1_000_000, help="steps between checkpoints")
    p.add_argument("--sweep-amplitudes", type=amplitude_range, default=None, metavar="A:B:STEP")
    p.add_argument("--sweep-steps", type=step_pairs, default=None, metavar="DX:DT[,DX:DT...]")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log-every", type=int, default=runner.PROGRESS_EVERY, help="time units between progress lines")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_cli(argv: Optional[Sequence[str]] = None) -> CliRequest:
    """Turn flags into a validated :class:`CliRequest`. Raises ConfigurationError/ValueError on bad input."""
    ns = build_parser().parse_args(argv)
    scheme = SchemeId.parse(ns.scheme)

    overrides = read_params_file(ns.params) if ns.params else {}
    for item in ns.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        overrides.update(_param_item(key.strip(), value.strip(), "--set"))
    params = ModelParams(**overrides)

    if ns.dt is not None:
        dt = ns.dt
    elif ns.courant is not None:
        dt = ns.courant * ns.dx / params.gamma
    else:
        dt = (ns.dt_ratio if ns.dt_ratio is not None else DEFAULT_DT_RATIO) * ns.dx
    grid = GridSpec(dx=ns.dx, dt=dt, T=ns.T, L=params.L)

    kind, _, path = ns.ic.partition(":")
    if kind == "file" and not path:
        raise ConfigurationError("--ic file needs a path: file:PATH")
    ic = InitialConditionSpec(kind=kind, amplitude=ns.amplitude, path=path or None, base=ns.ic_base)

    tol = {name: getattr(ns, f"tol_{name}") for name in _TOL_FIELDS if getattr(ns, f"tol_{name}") is not None}
    if ns.tol_stop_factor_alias is not None:
        tol["stop_factor"] = ns.tol_stop_factor_alias
    thresholds = DiagnosticThresholds(early_stop=not ns.no_early_stop, **tol)

    config = RunConfig(
        params=params,
        grid=grid,
        scheme=scheme,
        ic=ic,
        thresholds=thresholds,
        seed=ns.seed,
        checkpoint_interval=ns.checkpoint_every,
        threads=ns.threads,
        snapshot_times=tuple(ns.snapshot_times),
    )
    config.validate()
    return CliRequest(
        config=config,
        out_dir=ns.out_dir,
        sweep_amplitudes=ns.sweep_amplitudes,
        sweep_steps=ns.sweep_steps,
        workers=ns.workers,
        log_every=ns.log_every,
    )


def render_cli(config: RunConfig) -> List[str]:
    """Flags that reproduce ``config`` through :func:`parse_cli`."""
    args = ["--scheme", config.scheme.value, "--dx", repr(config.grid.dx), "--dt", repr(config.grid.dt), "--T", repr(config.grid.T)]
    ic = config.ic
    args += ["--amplitude", repr(ic.amplitude), "--ic", f"file:{ic.path}" if ic.kind == "file" else ic.kind]
    args += ["--ic-base", repr(ic.base), "--seed", str(config.seed)]
    default = ModelParams()
    for name in _PARAM_NAMES:
        v = getattr(config.params, name)
        if name.startswith("m_"):
            # m_j defaults to s_j / 8, so only pin it when it differs from that
            if v != getattr(config.params, "s_" + name[2:]) / 8.0:
                args += ["--set", f"{name}={v!r}"]
        elif v != getattr(default, name):
            args += ["--set", f"{name}={v!r}"]
    th, dth = config.thresholds, DiagnosticThresholds()
    for name in _TOL_FIELDS:
        v = getattr(th, name)
        if v != getattr(dth, name):
            args += [f"--tol-{name.replace('_', '-')}", repr(v)]
    if not th.early_stop:
        args.append("--no-early-stop")
    if config.snapshot_times:
        args += ["--snapshot-times", ",".join(repr(float(t)) for t in config.snapshot_times)]
    if config.threads is not None:
        args += ["--threads", str(config.threads)]
    args += ["--checkpoint-every", str(config.checkpoint_interval)]
    return args


def sweep_hash(config: RunConfig, amplitudes, steps) -> str:
    blob = json.dumps(
        {"template": config.hash, "amplitudes": list(amplitudes or []), "steps": [list(s) for s in steps or []]},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def execute(req: CliRequest) -> int:
    runner.PROGRESS_EVERY = req.log_every
    cfg = req.config
    if req.is_sweep:
        rows, records = sweep(
            cfg, req.sweep_amplitudes, req.sweep_steps, workers=req.workers,
            checkpoint_dir=req.out_dir, keep_records=req.out_dir is not None,
        )
        failed = sum(1 for r in rows if r.get("error"))
        if req.out_dir is not None:
            for rec in records:
                if rec is not None:
                    emit(OutputBundle.from_record(rec), req.out_dir)
            h = sweep_hash(cfg, req.sweep_amplitudes, req.sweep_steps)
            paths = emit(OutputBundle(config_hash=h, sweep_rows=rows), req.out_dir)
            print(paths[-1])
        for r in rows:
            print(f"{r['amplitude']:>8g} {r['dx']:.6g} {r.get('label', '-'):>6} {r.get('error', '')}")
        return 1 if failed else 0

    rec = run_simulation(cfg, checkpoint_dir=req.out_dir)
    v = rec.verdict
    print(
        f"{cfg.hash} {cfg.scheme.value} A={cfg.ic.amplitude:g} t={rec.series.last_time} "
        f"{v.stop_reason.value} {v.solution_kind.value} {v.symmetry.value} peaks={v.peak_count} label={v.label}"
    )
    if req.out_dir is not None:
        for path in emit(OutputBundle.from_record(rec), req.out_dir):
            print(path)
    return 2 if v.stop_reason.value == "Aborted" else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=logging.DEBUG if "-v" in argv or "--verbose" in argv else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        req = parse_cli(argv)
    except (ConfigurationError, ValueError) as err:
        print(f"nonlocal-fv: error: {err}", file=sys.stderr)
        return 2
    try:
        return execute(req)
    except OSError as err:
        print(f"nonlocal-fv: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
