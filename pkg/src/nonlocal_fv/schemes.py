"""Single-step finite-volume operators for the aggregation model.

All schemes share the signal/rate/source pipeline from :mod:`nonlocal_fv.model`
and act on periodic arrays. ``np.roll(u, 1)[i]`` is u[i-1] and
``np.roll(u, -1)[i]`` is u[i+1].
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import GridSpec, KernelTable, ModelParams, PopulationState, SourceField, sources


class NonFiniteStateError(FloatingPointError):
    def __init__(self, step: int, cell: int, scheme: str = ""):
        self.step = step
        self.cell = cell
        super().__init__(f"non-finite density produced by {scheme or 'scheme'} at step {step}, cell {cell}")


class SchemeId(enum.Enum):
    Upwind = "upwind"
    MacCormack = "maccormack"
    FSM = "fsm"
    QSA = "qsa"
    QSA_Center = "qsa_center"
    QSA_BW = "qsa_bw"
    QSA_LW = "qsa_lw"
    QSA_Minmod = "qsa_minmod"
    QSA_Superbee = "qsa_superbee"
    QSA_MC = "qsa_mc"

    @classmethod
    def parse(cls, name) -> "SchemeId":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for s in cls:
            if key in (s.value, s.name.lower()):
                return s
        valid = ", ".join(s.value for s in cls)
        raise ValueError(f"unknown scheme {name!r}; valid names: {valid}")

    @property
    def is_qsa(self) -> bool:
        return self.value.startswith("qsa")

    def __str__(self) -> str:
        return self.value


@dataclass
class QsaSplit:
    """Half-cell jumps: U^L = U - delta, U^R = U + delta."""

    delta_plus: np.ndarray
    delta_minus: np.ndarray


@dataclass
class SlopeField:
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray


def qsa_split(src: SourceField, params: ModelParams, grid: GridSpec) -> QsaSplit:
    two_gamma = 2.0 * params.gamma
    return QsaSplit(
        delta_plus=grid.dx * src.s_plus / two_gamma,
        delta_minus=-(grid.dx * src.s_minus) / two_gamma,
    )


def _same_sign(a, b):
    return ((a > 0) & (b > 0)) | ((a < 0) & (b < 0))


def _scalar(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def minmod(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return _scalar(np.where(_same_sign(a, b), np.where(np.abs(a) <= np.abs(b), a, b), 0.0))


def maxmod(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return _scalar(np.where(_same_sign(a, b), np.where(np.abs(a) >= np.abs(b), a, b), 0.0))


def mc_limit(c, a2, b2):
    """Three-argument minmod of (centred, 2*upwind, 2*downwind) slopes."""
    c, a2, b2 = (np.asarray(v, dtype=float) for v in (c, a2, b2))
    agree = _same_sign(c, a2) & _same_sign(c, b2)
    pick = np.where(np.abs(c) <= np.abs(a2), c, a2)
    pick = np.where(np.abs(pick) <= np.abs(b2), pick, b2)
    return _scalar(np.where(agree, pick, 0.0))


def interface_jumps(u: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """J[i] = U_i^L - U_{i-1}^R = (u_i - u_{i-1}) - (delta_i + delta_{i-1})."""
    return (u - np.roll(u, 1)) - (delta + np.roll(delta, 1))


def _variant_slopes(scheme: SchemeId, u: np.ndarray, delta: np.ndarray, dx: float, positive: bool):
    j = interface_jumps(u, delta)
    up = j / dx
    down = np.roll(j, -1) / dx
    if scheme is SchemeId.QSA_Center:
        return (j + np.roll(j, -1)) / (2.0 * dx)
    if scheme is SchemeId.QSA_BW:
        return up if positive else down
    if scheme is SchemeId.QSA_LW:
        return down if positive else up
    if scheme is SchemeId.QSA_Minmod:
        return minmod(up, down)
    if scheme is SchemeId.QSA_Superbee:
        return maxmod(minmod(up, 2.0 * down), minmod(2.0 * up, down))
    if scheme is SchemeId.QSA_MC:
        centred = (j + np.roll(j, -1)) / (2.0 * dx)
        return mc_limit(centred, 2.0 * up, 2.0 * down)
    raise ValueError(f"{scheme} has no slope reconstruction")


def compute_slopes(scheme, state: PopulationState, split: QsaSplit, grid: GridSpec) -> SlopeField:
    scheme = SchemeId.parse(scheme)
    if scheme is SchemeId.QSA:
        z = np.zeros(state.nx)
        return SlopeField(z, z.copy())
    return SlopeField(
        sigma_plus=_variant_slopes(scheme, state.u_plus, split.delta_plus, grid.dx, True),
        sigma_minus=_variant_slopes(scheme, state.u_minus, split.delta_minus, grid.dx, False),
    )


def _upwind_transport(up, um, c):
    return up - c * (up - np.roll(up, 1)), um + c * (np.roll(um, -1) - um)


def _upwind(state, params, grid, kernels):
    c = params.gamma * grid.dt / grid.dx
    src = sources(state, kernels, params)
    up = state.u_plus - c * (state.u_plus - np.roll(state.u_plus, 1)) + grid.dt * src.s_plus
    um = state.u_minus + c * (np.roll(state.u_minus, -1) - state.u_minus) + grid.dt * src.s_minus
    return up, um


def _maccormack(state, params, grid, kernels):
    c = params.gamma * grid.dt / grid.dx
    dt = grid.dt
    p1, m1 = _upwind(state, params, grid, kernels)
    star = PopulationState(p1, m1, state.time_index)
    src = sources(star, kernels, params)
    p2 = p1 - c * (np.roll(p1, -1) - p1) + dt * src.s_plus
    m2 = m1 + c * (m1 - np.roll(m1, 1)) + dt * src.s_minus
    return 0.5 * (state.u_plus + p2), 0.5 * (state.u_minus + m2)


def _fsm(state, params, grid, kernels):
    c = params.gamma * grid.dt / grid.dx
    dt = grid.dt
    p1, m1 = _upwind_transport(state.u_plus, state.u_minus, c)
    src = sources(PopulationState(p1, m1, state.time_index), kernels, params)
    p2 = p1 + (dt / 2.0) * src.s_plus
    m2 = m1 + (dt / 2.0) * src.s_minus
    src = sources(PopulationState(p2, m2, state.time_index), kernels, params)
    return p1 + dt * src.s_plus, m1 + dt * src.s_minus


def _qsa(scheme, state, params, grid, kernels):
    c = params.gamma * grid.dt / grid.dx
    dt = grid.dt
    up, um = state.u_plus, state.u_minus
    src = sources(state, kernels, params)
    sp, sm = src.s_plus, src.s_minus
    # U^L_i - U^R_{i-1} = (u_i - u_{i-1}) - (delta_i + delta_{i-1}), and c*delta = dt*s/2
    new_p = up - c * (up - np.roll(up, 1)) + (dt / 2.0) * (sp + np.roll(sp, 1))
    new_m = um + c * (np.roll(um, -1) - um) + (dt / 2.0) * (np.roll(sm, -1) + sm)
    if scheme is not SchemeId.QSA:
        slopes = compute_slopes(scheme, state, qsa_split(src, params, grid), grid)
        k = 0.5 * c * (grid.dx - params.gamma * dt)
        new_p = new_p - k * (slopes.sigma_plus - np.roll(slopes.sigma_plus, 1))
        new_m = new_m - k * (np.roll(slopes.sigma_minus, -1) - slopes.sigma_minus)
    return new_p, new_m


def step(scheme, state: PopulationState, params: ModelParams, grid: GridSpec, kernels: KernelTable) -> PopulationState:
    """Advance ``state`` by one time step with the selected scheme."""
    scheme = SchemeId.parse(scheme)
    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        if scheme is SchemeId.Upwind:
            up, um = _upwind(state, params, grid, kernels)
        elif scheme is SchemeId.MacCormack:
            up, um = _maccormack(state, params, grid, kernels)
        elif scheme is SchemeId.FSM:
            up, um = _fsm(state, params, grid, kernels)
        else:
            up, um = _qsa(scheme, state, params, grid, kernels)
    ok = np.isfinite(up) & np.isfinite(um)
    if not ok.all():
        raise NonFiniteStateError(state.time_index + 1, int(np.argmin(ok)), scheme.value)
    return PopulationState(up, um, state.time_index + 1)
