"""Step-error monitoring, stop rules, and classification of runs and profiles.

The step error E(t) is the discrete L1 distance between the total densities
of the two consecutive time steps that land on integer time t. Its trace is
what separates transient plateaus, genuine steady states and runs that never
settle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

TRANSIENT_LEVEL = 1e-8
STEADY_LEVEL = 1e-14
STOP_FACTOR = 1.34
MINIMUM_WINDOW = 201


class StopReason(str, enum.Enum):
    Continue = "Continue"
    FinalTimeReached = "FinalTimeReached"
    SteadyStateStop = "SteadyStateStop"
    Aborted = "Aborted"


class SolutionKind(str, enum.Enum):
    TransientOnly = "TransientOnly"
    SteadyState = "SteadyState"
    NonConvergent = "NonConvergent"
    Undetermined = "Undetermined"


class MinimumKind(str, enum.Enum):
    Transient = "Transient"
    SteadyState = "SteadyState"
    Undetermined = "Undetermined"


class Symmetry(str, enum.Enum):
    Odd = "Odd"
    Even = "Even"
    NonSymmetric = "NonSymmetric"


@dataclass(frozen=True)
class DiagnosticThresholds:
    transient_level: float = TRANSIENT_LEVEL
    steady_level: float = STEADY_LEVEL
    stop_factor: float = STOP_FACTOR
    early_stop: bool = True
    minimum_window: int = MINIMUM_WINDOW
    tail_fraction: float = 0.3
    band_ratio: float = 10.0
    max_tail_decay: float = 0.5
    symmetry_tol: float = 1e-3
    peak_margin: float = 1e-2
    gap_fraction: float = 1e-2


def l1_norm(u, grid) -> float:
    """(L/Nx) * sum |u_i|."""
    u = np.asarray(u, dtype=float)
    return float(grid.L / u.shape[0] * np.sum(np.abs(u)))


def step_error(u_now, u_prev, grid) -> float:
    u_now = np.asarray(u_now, dtype=float)
    return float(grid.L / u_now.shape[0] * np.sum(np.abs(u_now - np.asarray(u_prev, dtype=float))))


def sample_step(t: int, dt: float) -> int:
    """Index k of the step with t^k <= t < t^k + dt."""
    return int(math.floor(t / dt + 1e-9))


@dataclass
class ErrorSeries:
    """E sampled at integer times 1, 2, 3, ..."""

    times: List[int] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    steady_level: float = STEADY_LEVEL
    t0: Optional[int] = None

    def append(self, t: int, e: float) -> None:
        if self.times and t != self.times[-1] + 1:
            raise ValueError(f"samples must advance by one time unit, got {t} after {self.times[-1]}")
        if e < 0:
            raise ValueError("step error cannot be negative")
        self.times.append(int(t))
        self.values.append(float(e))
        if self.t0 is None and e < self.steady_level:
            self.t0 = int(t)

    @classmethod
    def from_arrays(cls, times, values, steady_level: float = STEADY_LEVEL) -> "ErrorSeries":
        s = cls(steady_level=steady_level)
        for t, e in zip(times, values):
            s.append(int(t), float(e))
        return s

    def __len__(self) -> int:
        return len(self.values)

    @property
    def last_time(self) -> int:
        return self.times[-1] if self.times else 0

    def local_minima(self, window: int = MINIMUM_WINDOW) -> List[int]:
        """Indices that are the smallest value in a centred window (truncated at the ends)."""
        e = np.asarray(self.values)
        if e.size == 0:
            return []
        h = window // 2
        pad = np.concatenate([np.full(h, np.inf), e, np.full(h, np.inf)])
        win = np.lib.stride_tricks.sliding_window_view(pad, 2 * h + 1)
        mins = win.min(axis=1)
        idx = np.flatnonzero(e == mins)
        # keep the first of any run of equal minima
        keep = [i for n, i in enumerate(idx) if n == 0 or i != idx[n - 1] + 1]
        return keep


def stop_time(t0: Optional[int], T: float, factor: float = STOP_FACTOR) -> Optional[int]:
    """T* = factor * t0 rounded up to an integer sample, or None when T* >= T."""
    if t0 is None:
        return None
    t_star = factor * t0
    if not t_star < T:
        return None
    return int(math.ceil(t_star - 1e-9 * max(1.0, t_star)))


def check_stop(series: ErrorSeries, T: float, factor: float = STOP_FACTOR, early_stop: bool = True) -> StopReason:
    t = series.last_time
    if early_stop:
        t_star = stop_time(series.t0, T, factor)
        if t_star is not None and t >= t_star:
            return StopReason.SteadyStateStop
    if t >= T - 1e-9:
        return StopReason.FinalTimeReached
    return StopReason.Continue


@dataclass
class MinimumVerdict:
    t: Optional[int]
    E: float
    kind: MinimumKind
    note: str = ""


def _steady_tail_start(e: np.ndarray, level: float) -> Optional[int]:
    below = e < level
    if below.size < 2 or not below[-1]:
        return None
    above = np.flatnonzero(~below)
    start = 0 if above.size == 0 else int(above[-1]) + 1
    return start if e.size - start >= 2 else None


def classify_minimum(
    series: ErrorSeries,
    window: int = MINIMUM_WINDOW,
    transient_level: float = TRANSIENT_LEVEL,
    steady_level: float = STEADY_LEVEL,
) -> List[MinimumVerdict]:
    """Label the low points of an E(t) trace.

    Each excursion below ``transient_level`` contributes its deepest windowed
    minimum: Transient when E later climbs back above the level, SteadyState
    when the trace ends in a run of samples all below ``steady_level``
    (reported at the first sample of that run), Undetermined otherwise.
    """
    e = np.asarray(series.values, dtype=float)
    times = series.times
    if e.size < 2:
        return [MinimumVerdict(None, float("nan"), MinimumKind.Undetermined, "series too short")]
    out: List[MinimumVerdict] = []
    tail = _steady_tail_start(e, steady_level)
    minima = set(series.local_minima(window))
    below = e < transient_level
    # contiguous excursions below the transient level
    edges = np.flatnonzero(np.diff(np.concatenate([[0], below.astype(np.int8), [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        if tail is not None and b == e.size:
            out.append(MinimumVerdict(times[tail], float(e[tail]), MinimumKind.SteadyState))
            continue
        cand = [i for i in range(a, b) if i in minima]
        if not cand:
            continue
        i = min(cand, key=lambda k: (e[k], k))
        if b < e.size:
            out.append(MinimumVerdict(times[i], float(e[i]), MinimumKind.Transient))
        else:
            out.append(MinimumVerdict(times[i], float(e[i]), MinimumKind.Undetermined, "no rise and no steady tail"))
    return out


@dataclass
class NonConvergence:
    flagged: bool
    band: Optional[Tuple[float, float]]
    log_slope: float = 0.0
    note: str = ""


def detect_nonconvergence(
    series: ErrorSeries,
    tail_fraction: float = 0.3,
    band_ratio: float = 10.0,
    transient_level: float = TRANSIENT_LEVEL,
    max_tail_decay: float = 0.5,
    monotone_fraction: float = 0.95,
    min_tail: int = 100,
) -> NonConvergence:
    """Flag a trace whose tail oscillates inside a narrow band above the transient level.

    The tail (last ``tail_fraction`` of samples) must satisfy E_min > transient_level,
    E_max / E_min <= band_ratio, and the least-squares trend of log10 E across the
    tail must not fall by more than ``max_tail_decay`` decades. Tails shorter
    than ``min_tail`` samples are never flagged. A tail that is
    non-increasing in at least ``monotone_fraction`` of its steps is slow
    convergence, not an oscillation, however shallow the decay.
    """
    e = np.asarray(series.values, dtype=float)
    n = int(math.ceil(tail_fraction * e.size))
    if n < min_tail:
        return NonConvergence(False, None, note="tail too short")
    tail = e[-n:]
    lo, hi = float(tail.min()), float(tail.max())
    if not lo > transient_level:
        return NonConvergence(False, (lo, hi), note="tail reaches the transient level")
    t = np.asarray(series.times[-n:], dtype=float)
    slope = float(np.polyfit(t - t[0], np.log10(tail), 1)[0])
    if hi / lo > band_ratio:
        return NonConvergence(False, (lo, hi), slope, "band wider than band_ratio")
    if slope * (t[-1] - t[0]) < -max_tail_decay:
        return NonConvergence(False, (lo, hi), slope, "tail still decaying")
    if np.mean(np.diff(tail) <= 0) >= monotone_fraction:
        return NonConvergence(False, (lo, hi), slope, "tail decreasing monotonically")
    return NonConvergence(True, (lo, hi), slope)


def solution_kind(series: ErrorSeries, stop_reason: StopReason, th: DiagnosticThresholds = DiagnosticThresholds()):
    """Combine minimum labels and the non-convergence test into one run-level verdict."""
    minima = classify_minimum(series, th.minimum_window, th.transient_level, th.steady_level)
    kinds = {m.kind for m in minima}
    nc = NonConvergence(False, None)
    if MinimumKind.SteadyState in kinds:
        kind = SolutionKind.SteadyState
    else:
        if stop_reason is StopReason.FinalTimeReached:
            nc = detect_nonconvergence(series, th.tail_fraction, th.band_ratio, th.transient_level, th.max_tail_decay)
        if nc.flagged:
            kind = SolutionKind.NonConvergent
        elif MinimumKind.Transient in kinds:
            kind = SolutionKind.TransientOnly
        else:
            kind = SolutionKind.Undetermined
    return kind, minima, nc


@dataclass
class SymmetryResult:
    symmetry: Symmetry
    peak_count: int
    aggregation_count: int
    residual: float
    axis: Optional[float] = None
    aggregations: List[Tuple[Symmetry, int]] = field(default_factory=list)

    @property
    def label(self) -> str:
        """Short table label: ODD / EVEN / NON, or e.g. 2-ODD for repeated symmetric aggregations."""
        short = {Symmetry.Odd: "ODD", Symmetry.Even: "EVEN", Symmetry.NonSymmetric: "NON"}
        kinds = {s for s, _ in self.aggregations}
        if self.aggregation_count >= 2 and len(kinds) == 1 and Symmetry.NonSymmetric not in kinds:
            return f"{self.aggregation_count}-{short[kinds.pop()]}"
        return short[self.symmetry]


def reflection_residuals(u) -> np.ndarray:
    """R[m] = ||u_i - u_{(m-i) mod N}||_1 / ||u - mean||_1 for every periodic reflection m.

    Reflection m fixes the half-integer index m/2 (and its antipode), so the
    N values cover all 2N half-cell axis candidates.
    """
    u = np.asarray(u, dtype=float)
    den = np.sum(np.abs(u - u.mean()))
    rev = u[::-1]
    num = np.array([np.sum(np.abs(u - np.roll(rev, m + 1))) for m in range(u.size)])
    return num / den


def count_peaks(u, level: float) -> int:
    """Strict local maxima above ``level`` on the periodic grid; equal-valued plateaus count once."""
    u = np.asarray(u, dtype=float)
    if u.size < 3:
        return 0
    # collapse runs of identical values so that a two-cell plateau is one peak
    start = int(np.argmax(u != np.roll(u, 1))) if np.any(u != np.roll(u, 1)) else 0
    v = np.roll(u, -start)
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    w = v[keep]
    if w.size < 3:
        return 0
    peaks = (w > np.roll(w, 1)) & (w > np.roll(w, -1)) & (w > level)
    return int(np.count_nonzero(peaks))


def _regions(mask: np.ndarray) -> List[np.ndarray]:
    """Index sets of the connected True regions of a periodic boolean mask."""
    if mask.all():
        return [np.arange(mask.size)]
    if not mask.any():
        return []
    shift = int(np.argmin(mask))  # start at a False cell so no region wraps
    m = np.roll(mask, -shift)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], m.astype(np.int8), [0]])))
    return [(np.arange(a, b) + shift) % mask.size for a, b in zip(edges[::2], edges[1::2])]


def _symmetry_of(u, tol, peak_level):
    r = reflection_residuals(u)
    m = int(np.argmin(r))
    peaks = count_peaks(u, peak_level)
    if r[m] <= tol:
        sym = Symmetry.Odd if peaks % 2 else Symmetry.Even
    else:
        sym = Symmetry.NonSymmetric
    return sym, peaks, float(r[m]), m


def classify_symmetry(u, grid=None, tol: float = 1e-3, peak_margin: float = 1e-2, gap_fraction: float = 1e-2) -> SymmetryResult:
    """Reflection-symmetry verdict for a periodic profile.

    The best periodic reflection axis decides symmetric vs non-symmetric
    (relative L1 residual <= tol). Symmetric profiles are called Odd or Even by
    the parity of their peak count, where peaks are strict local maxima higher
    than min(u) + peak_margin * (max(u) - min(u)). Aggregations are the
    connected regions above min(u) + gap_fraction * (max(u) - min(u)); each is
    classified on its own with the rest of the domain flattened to min(u).
    """
    u = np.asarray(u, dtype=float)
    if u.size < 8 or not np.all(np.isfinite(u)):
        raise ValueError("profile must be finite with at least 8 cells")
    if np.sum(np.abs(u - u.mean())) < 1e-12 * np.sum(np.abs(u)):
        return SymmetryResult(Symmetry.Even, 0, 0, 0.0, None, [])
    lo, hi = float(u.min()), float(u.max())
    peak_level = lo + peak_margin * (hi - lo)
    sym, peaks, res, m = _symmetry_of(u, tol, peak_level)
    dx = grid.dx if grid is not None else 1.0
    aggs = []
    for idx in _regions(u > lo + gap_fraction * (hi - lo)):
        masked = np.full_like(u, lo)
        masked[idx] = u[idx]
        if idx.size == u.size:
            aggs.append((sym, peaks))
            continue
        s, p, _, _ = _symmetry_of(masked, tol, peak_level)
        aggs.append((s, p))
    return SymmetryResult(sym, peaks, len(aggs), res, 0.5 * m * dx, aggs)
