"""Full simulations, checkpoint/resume, and parameter sweeps."""
from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .diagnostics import (
    DiagnosticThresholds,
    ErrorSeries,
    MinimumVerdict,
    NonConvergence,
    SolutionKind,
    StopReason,
    Symmetry,
    check_stop,
    classify_symmetry,
    l1_norm,
    sample_step,
    solution_kind,
    step_error,
    stop_time,
)
from .model import GridSpec, ModelParams, PopulationState, build_kernel_table, validate_grid
from .schemes import NonFiniteStateError, SchemeId, step

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
NEGATIVE_TOLERANCE = -1e-12
IC_KINDS = ("sin02", "sin04", "rand", "file")
PROGRESS_EVERY = 1000  # integer time units between (t, E) log lines


@dataclass(frozen=True)
class InitialConditionSpec:
    """Perturbation of the homogeneous state: u(x, 0) = base + amplitude * profile(x), split evenly."""

    kind: str = "sin02"
    amplitude: float = 2.5
    path: Optional[str] = None
    base: float = 2.0

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {IC_KINDS}")
        if self.amplitude < 0:
            raise ValueError("initial amplitude must be >= 0")
        if self.kind == "file" and not self.path:
            raise ValueError("file initial condition needs a path")


def make_initial_state(ic: InitialConditionSpec, grid: GridSpec, seed: int = 0) -> PopulationState:
    """Initial total density sampled at x_i = i dx, split as u_plus = u_minus = u / 2.

    ``rand`` draws one uniform [0, 1) value per cell from numpy's PCG64
    generator seeded with ``seed``.
    """
    x = grid.x
    if ic.kind == "sin02":
        u = ic.base + ic.amplitude * (0.5 + 0.5 * np.sin(0.2 * np.pi * x))
    elif ic.kind == "sin04":
        u = ic.base + ic.amplitude * (0.5 + 0.5 * np.sin(0.4 * np.pi * x))
    elif ic.kind == "rand":
        u = ic.base + ic.amplitude * np.random.Generator(np.random.PCG64(seed)).random(grid.nx)
    else:
        data = np.loadtxt(ic.path, comments="#", delimiter=None if not str(ic.path).endswith(".csv") else ",", ndmin=2)
        if data.shape[0] != grid.nx:
            raise ValueError(f"profile {ic.path} has {data.shape[0]} rows, grid has {grid.nx} cells")
        if data.shape[1] >= 2:
            return PopulationState(data[:, 0].copy(), data[:, 1].copy(), 0)
        u = data[:, 0]
    return PopulationState(u / 2.0, u / 2.0, 0)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: GridSpec = field(default_factory=lambda: GridSpec(dx=2.0**-7, dt=2.0**-6, T=2000.0))
    scheme: SchemeId = SchemeId.Upwind
    ic: InitialConditionSpec = field(default_factory=InitialConditionSpec)
    thresholds: DiagnosticThresholds = field(default_factory=DiagnosticThresholds)
    seed: int = 0
    checkpoint_interval: int = 1_000_000
    threads: Optional[int] = None
    snapshot_times: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))

    def validate(self) -> None:
        self.params.validate()
        validate_grid(self.params, self.grid)

    def physics_dict(self) -> dict:
        """Everything that determines the trajectory and the verdicts."""
        return {
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "scheme": self.scheme.value,
            "ic": asdict(self.ic),
            "thresholds": asdict(self.thresholds),
            "seed": self.seed,
        }

    def to_dict(self) -> dict:
        d = self.physics_dict()
        d.update(checkpoint_interval=self.checkpoint_interval, threads=self.threads, snapshot_times=list(self.snapshot_times))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            params=ModelParams(**d["params"]),
            grid=GridSpec(**d["grid"]),
            scheme=SchemeId.parse(d["scheme"]),
            ic=InitialConditionSpec(**d["ic"]),
            thresholds=DiagnosticThresholds(**d["thresholds"]),
            seed=int(d["seed"]),
            checkpoint_interval=int(d.get("checkpoint_interval", 1_000_000)),
            threads=d.get("threads"),
            snapshot_times=tuple(d.get("snapshot_times", ())),
        )

    @property
    def hash(self) -> str:
        blob = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


@dataclass
class RunVerdict:
    stop_reason: StopReason
    solution_kind: SolutionKind
    symmetry: Symmetry
    peak_count: int
    aggregation_count: int
    label: str
    symmetry_residual: float
    t0: Optional[int] = None
    stop_time: Optional[int] = None


@dataclass
class RunRecord:
    config: RunConfig
    config_hash: str
    series: ErrorSeries
    verdict: RunVerdict
    final_state: PopulationState
    snapshots: Dict[int, PopulationState]
    steps: int
    wall_clock: float
    health: dict
    mass_initial: float
    mass_final: float
    minima: List[MinimumVerdict] = field(default_factory=list)
    nonconvergence: Optional[NonConvergence] = None
    kernels: dict = field(default_factory=dict)

    @property
    def mass_drift(self) -> float:
        return abs(self.mass_final - self.mass_initial) / abs(self.mass_initial)


class Simulation:
    """Stateful driver around :func:`nonlocal_fv.schemes.step`.

    E(t) is recorded at every integer time; the stop rule is checked after
    each sample. ``advance`` can be called piecemeal and a checkpoint taken at
    any step boundary, which is what resume relies on.
    """

    def __init__(self, config: RunConfig, state: Optional[PopulationState] = None):
        config.validate()
        self.config = config
        self.kernels = build_kernel_table(config.params, config.grid)
        self.state = state if state is not None else make_initial_state(config.ic, config.grid, config.seed)
        self.series = ErrorSeries(steady_level=config.thresholds.steady_level)
        self.snapshots: Dict[int, PopulationState] = {}
        self.first_negative: Optional[int] = None
        self.nonfinite: Optional[dict] = None
        self.stop_reason = StopReason.Continue
        self.mass_initial = self.state.mass(config.grid.dx)
        self.wall_clock = 0.0
        if self.state.time_index == 0 and self._wants_snapshot(0):
            self.snapshots[0] = self.state.copy()

    @property
    def done(self) -> bool:
        return self.stop_reason is not StopReason.Continue

    def _wants_snapshot(self, t: int) -> bool:
        T = self.config.grid.T
        return t == 0 or t == int(T // 2) or any(abs(t - s) < 1e-9 for s in self.config.snapshot_times)

    def advance(self, max_steps: Optional[int] = None) -> None:
        cfg, grid = self.config, self.config.grid
        _kernels.set_threads(cfg.threads)
        th = cfg.thresholds
        start = time.perf_counter()
        taken = 0
        next_t = self.series.last_time + 1
        next_k = sample_step(next_t, grid.dt)
        while not self.done and (max_steps is None or taken < max_steps):
            k = self.state.time_index + 1
            if k > grid.nt:
                self.stop_reason = StopReason.FinalTimeReached
                break
            prev = self.state.total if k == next_k else None
            try:
                new = step(cfg.scheme, self.state, cfg.params, grid, self.kernels)
            except NonFiniteStateError as err:
                self.nonfinite = {"step": err.step, "cell": err.cell}
                self.stop_reason = StopReason.Aborted
                log.error("%s", err)
                break
            self.state = new
            taken += 1
            if self.first_negative is None and (
                new.u_plus.min() < NEGATIVE_TOLERANCE or new.u_minus.min() < NEGATIVE_TOLERANCE
            ):
                self.first_negative = k
                log.warning("negative density at step %d", k)
            if prev is not None:
                e = step_error(new.total, prev, grid)
                self.series.append(next_t, e)
                if self._wants_snapshot(next_t):
                    self.snapshots[next_t] = new.copy()
                if PROGRESS_EVERY > 0 and next_t % PROGRESS_EVERY == 0:
                    log.info("t=%d E=%.3e", next_t, e)
                self.stop_reason = check_stop(self.series, grid.T, th.stop_factor, th.early_stop)
                next_t += 1
                next_k = sample_step(next_t, grid.dt)
            elif k == grid.nt:
                self.stop_reason = StopReason.FinalTimeReached
        self.wall_clock += time.perf_counter() - start

    def run(self, checkpoint_dir=None) -> "RunRecord":
        interval = self.config.checkpoint_interval if checkpoint_dir is not None else 0
        while not self.done:
            if interval > 0:
                self.advance(interval - self.state.time_index % interval)
                if not self.done:
                    self.save_checkpoint(checkpoint_dir)
            else:
                self.advance()
        return self.record()

    def record(self) -> RunRecord:
        cfg = self.config
        th = cfg.thresholds
        final_t = self.series.last_time
        if final_t not in self.snapshots:
            self.snapshots[final_t] = self.state.copy()
        reason = self.stop_reason if self.done else StopReason.Continue
        kind_reason = StopReason.FinalTimeReached if reason is StopReason.Aborted else reason
        kind, minima, nc = solution_kind(self.series, kind_reason, th)
        sym = classify_symmetry(self.state.total, cfg.grid, th.symmetry_tol, th.peak_margin, th.gap_fraction)
        verdict = RunVerdict(
            stop_reason=reason,
            solution_kind=kind,
            symmetry=sym.symmetry,
            peak_count=sym.peak_count,
            aggregation_count=sym.aggregation_count,
            label=sym.label,
            symmetry_residual=sym.residual,
            t0=self.series.t0,
            stop_time=stop_time(self.series.t0, cfg.grid.T, th.stop_factor) if th.early_stop else None,
        )
        health = {
            "first_negative_step": self.first_negative,
            "min_density": float(min(self.state.u_plus.min(), self.state.u_minus.min())),
            "nonfinite": self.nonfinite,
            "flagged": self.first_negative is not None or self.nonfinite is not None,
        }
        return RunRecord(
            config=cfg,
            config_hash=cfg.hash,
            series=self.series,
            verdict=verdict,
            final_state=self.state.copy(),
            snapshots=dict(sorted(self.snapshots.items())),
            steps=self.state.time_index,
            wall_clock=self.wall_clock,
            health=health,
            mass_initial=self.mass_initial,
            mass_final=self.state.mass(cfg.grid.dx),
            minima=minima,
            nonconvergence=nc,
            kernels=self.kernels.metadata(),
        )

    # checkpointing -----------------------------------------------------

    def save_checkpoint(self, directory) -> Path:
        """Write ``<directory>/<hash>/ckpt-<step>`` atomically; keeps the two newest."""
        folder = Path(directory) / self.config.hash
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / f"ckpt-{self.state.time_index}"
        snaps = {f"snap_{t}": np.stack([s.u_plus, s.u_minus]) for t, s in self.snapshots.items()}
        meta = {
            "version": CHECKPOINT_VERSION,
            "config_hash": self.config.hash,
            "config": self.config.to_dict(),
            "step": self.state.time_index,
            "seed": self.config.seed,
            "prng": {"bit_generator": "PCG64", "seed": self.config.seed},
            "t0": self.series.t0,
            "first_negative": self.first_negative,
            "mass_initial": self.mass_initial,
            "wall_clock": self.wall_clock,
        }
        tmp = folder / f".ckpt-{self.state.time_index}.tmp"
        try:
            with open(tmp, "wb") as fh:
                np.savez(
                    fh,
                    meta=np.array(json.dumps(meta)),
                    u_plus=self.state.u_plus,
                    u_minus=self.state.u_minus,
                    e_times=np.asarray(self.series.times, dtype=np.int64),
                    e_values=np.asarray(self.series.values, dtype=np.float64),
                    **snaps,
                )
            os.replace(tmp, path)
        except OSError as err:
            tmp.unlink(missing_ok=True)
            raise OSError(f"could not write checkpoint {path}: {err}") from err
        for old in list_checkpoints(folder)[:-2]:
            old.unlink(missing_ok=True)
        return path

    @classmethod
    def from_checkpoint(cls, path, config: Optional[RunConfig] = None) -> "Simulation":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"{path}: unsupported checkpoint version {meta['version']}")
            cfg = config or RunConfig.from_dict(meta["config"])
            if cfg.hash != meta["config_hash"]:
                raise ValueError(f"{path}: checkpoint belongs to config {meta['config_hash']}, not {cfg.hash}")
            state = PopulationState(data["u_plus"].copy(), data["u_minus"].copy(), int(meta["step"]))
            sim = cls(cfg, state=state)
            sim.series = ErrorSeries.from_arrays(data["e_times"], data["e_values"], cfg.thresholds.steady_level)
            sim.snapshots = {
                int(k[5:]): PopulationState(data[k][0].copy(), data[k][1].copy()) for k in data.files if k.startswith("snap_")
            }
            sim.first_negative = meta["first_negative"]
            sim.mass_initial = meta["mass_initial"]
            sim.wall_clock = meta["wall_clock"]
        sim.stop_reason = check_stop(sim.series, cfg.grid.T, cfg.thresholds.stop_factor, cfg.thresholds.early_stop) if len(sim.series) else StopReason.Continue
        return sim


def list_checkpoints(folder) -> List[Path]:
    folder = Path(folder)
    if not folder.is_dir():
        return []
    found = [p for p in folder.glob("ckpt-*") if p.name[5:].isdigit()]
    return sorted(found, key=lambda p: int(p.name[5:]))


def run_simulation(config: RunConfig, checkpoint_dir=None, resume: bool = True) -> RunRecord:
    """Run until the stop rule fires; resumes from the newest checkpoint when one exists."""
    sim = None
    if checkpoint_dir is not None and resume:
        ckpts = list_checkpoints(Path(checkpoint_dir) / config.hash)
        if ckpts:
            log.info("resuming from %s", ckpts[-1])
            sim = Simulation.from_checkpoint(ckpts[-1], config)
    if sim is None:
        sim = Simulation(config)
    return sim.run(checkpoint_dir)


# sweeps ----------------------------------------------------------------


def sweep_configs(template: RunConfig, amplitudes=None, steps=None) -> List[RunConfig]:
    if amplitudes is None and steps is None:
        raise ValueError("sweep needs amplitudes or (dx, dt) pairs")
    configs = []
    if amplitudes is not None:
        configs += [template.with_(ic=replace(template.ic, amplitude=float(a))) for a in amplitudes]
    if steps is not None:
        configs += [template.with_(grid=replace(template.grid, dx=float(dx), dt=float(dt))) for dx, dt in steps]
    if not configs:
        raise ValueError("sweep list is empty")
    return configs


def _sweep_row(args) -> Tuple[dict, Optional[RunRecord]]:
    index, cfg, checkpoint_dir, keep_record = args
    row = {
        "index": index,
        "scheme": cfg.scheme.value,
        "ic": cfg.ic.kind,
        "amplitude": cfg.ic.amplitude,
        "dx": cfg.grid.dx,
        "dt": cfg.grid.dt,
        "config_hash": cfg.hash,
    }
    try:
        rec = run_simulation(cfg, checkpoint_dir)
    except Exception as err:  # one failed run must not sink the sweep
        row.update(error=f"{type(err).__name__}: {err}")
        return row, None
    v = rec.verdict
    row.update(
        stop_reason=v.stop_reason.value,
        solution_kind=v.solution_kind.value,
        symmetry=v.symmetry.value,
        label=v.label,
        peak_count=v.peak_count,
        aggregation_count=v.aggregation_count,
        l1_norm=l1_norm(rec.final_state.total, cfg.grid),
        final_time=rec.series.last_time,
        error="",
    )
    return row, rec if keep_record else None


def sweep(
    template: RunConfig,
    amplitudes: Optional[Sequence[float]] = None,
    steps: Optional[Sequence[Tuple[float, float]]] = None,
    workers: int = 1,
    checkpoint_dir=None,
    keep_records: bool = False,
):
    """Run one simulation per amplitude (or per (dx, dt) pair); rows come back in request order."""
    configs = sweep_configs(template, amplitudes, steps)
    jobs = [(i, c, checkpoint_dir, keep_records) for i, c in enumerate(configs)]
    if workers > 1:
        # spawn, not fork: the compiled loops may already hold an OpenMP runtime
        with ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("spawn")) as pool:
            results = list(pool.map(_sweep_row, jobs))
    else:
        results = [_sweep_row(j) for j in jobs]
    rows = [r for r, _ in results]
    if keep_records:
        return rows, [rec for _, rec in results]
    return rows


def default_amplitudes() -> List[float]:
    """0.001 followed by 0.1, 0.2, ..., 36.0."""
    return [0.001] + [round(0.1 * n, 10) for n in range(1, 361)]
