"""Scheme-independent pieces of the nonlocal hyperbolic aggregation model.

Right-moving (u_plus) and left-moving (u_minus) densities travel at speed
``gamma`` and exchange mass through turning rates that depend on nonlocal
signals built from Gaussian interaction kernels (repulsion, attraction,
alignment). Everything here works on periodic cell arrays.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from . import _kernels

KERNELS = ("r", "a", "al")


class ConfigurationError(ValueError):
    """Raised when parameters or grid spacing cannot be used together."""


@dataclass(frozen=True)
class ModelParams:
    """Model constants. Defaults are the standard aggregation parameter set."""

    gamma: float = 0.1
    lambda1: float = 0.2
    lambda2: float = 0.9
    y0: float = 2.0
    q_a: float = 1.1
    q_r: float = 2.2
    q_al: float = 0.0
    s_a: float = 1.0
    s_r: float = 0.25
    s_al: float = 0.5
    m_a: Optional[float] = None
    m_r: Optional[float] = None
    m_al: Optional[float] = None
    A: float = 2.0
    L: float = 10.0

    def __post_init__(self):
        for j in KERNELS:
            if getattr(self, f"m_{j}") is None:
                object.__setattr__(self, f"m_{j}", getattr(self, f"s_{j}") / 8.0)
        self.validate()

    def validate(self):
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigurationError("turning rates lambda1, lambda2 must be >= 0")
        for j in KERNELS:
            if getattr(self, f"q_{j}") < 0:
                raise ConfigurationError(f"q_{j} must be >= 0")
            if not getattr(self, f"s_{j}") > 0:
                raise ConfigurationError(f"s_{j} must be positive")
            if not getattr(self, f"m_{j}") > 0:
                raise ConfigurationError(f"m_{j} must be positive")
        if not self.A > 0 or not self.L > 0:
            raise ConfigurationError("A and L must be positive")

    def q(self, j: str) -> float:
        return getattr(self, f"q_{j}")

    def s(self, j: str) -> float:
        return getattr(self, f"s_{j}")

    def m(self, j: str) -> float:
        return getattr(self, f"m_{j}")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def _cells(length: float, step: float) -> int:
    # guard floor() against 10/0.01 = 999.9999...
    return int(math.floor(length / step + 1e-9))


@dataclass(frozen=True)
class GridSpec:
    dx: float
    dt: float
    T: float
    L: float = 10.0

    @property
    def nx(self) -> int:
        return _cells(self.L, self.dx)

    @property
    def nt(self) -> int:
        return _cells(self.T, self.dt)

    @property
    def x(self) -> np.ndarray:
        """Cell centres, x_i = i*dx for i = 0..Nx-1."""
        return np.arange(self.nx) * self.dx

    def courant(self, gamma: float) -> float:
        return gamma * self.dt / self.dx

    def to_dict(self) -> dict:
        return asdict(self)


def kernel_count(s_j: float, dx: float) -> int:
    """Number of Simpson intervals covering [0, 2 s_j], rounded to the nearest even integer."""
    return 2 * int(round(s_j / dx))


def validate_grid(params: ModelParams, grid: GridSpec) -> None:
    if not grid.dx > 0 or not grid.dt > 0 or not grid.T > 0:
        raise ConfigurationError("dx, dt and T must be positive")
    if abs(grid.L - params.L) > 1e-12 * params.L:
        raise ConfigurationError(f"grid length {grid.L} differs from model length {params.L}")
    c = grid.courant(params.gamma)
    if c > 1.0 + 1e-12:
        raise ConfigurationError(f"CFL violated: Courant number gamma*dt/dx = {c:.6g} > 1")
    reach = 0
    for j in KERNELS:
        n = kernel_count(params.s(j), grid.dx)
        if n <= 0:
            raise ConfigurationError(
                f"kernel '{j}': 2*s_{j}/dx = {2 * params.s(j) / grid.dx:.4g} rounds to zero Simpson intervals"
            )
        reach = max(reach, n)
    if grid.nx < 2 * reach:
        raise ConfigurationError(f"Nx = {grid.nx} is smaller than twice the kernel reach ({reach} cells)")


def gaussian_kernel(s, s_j, m_j):
    return np.exp(-((s - s_j) ** 2) / (2.0 * m_j**2)) / math.sqrt(2.0 * math.pi * m_j**2)


def simpson_coefficients(n: int) -> np.ndarray:
    """1, 4, 2, 4, ..., 2, 4, 1 for n (even) intervals."""
    if n <= 0 or n % 2:
        raise ConfigurationError(f"Simpson rule needs a positive even interval count, got {n}")
    c = np.full(n + 1, 2.0)
    c[1::2] = 4.0
    c[0] = c[-1] = 1.0
    return c


@dataclass
class KernelTable:
    """Simpson-weighted kernel samples, w_j[k] = c_k * K_j(k dx) * dx / 3."""

    weights: Dict[str, np.ndarray]
    dx: float
    nx: int
    s: Dict[str, float] = field(default_factory=dict)

    def count(self, j: str) -> int:
        return self.weights[j].shape[0] - 1

    def mass(self, j: str) -> float:
        return float(np.sum(self.weights[j]))

    def metadata(self) -> dict:
        """Per-kernel interval count, quadrature mass, and support mismatch from rounding."""
        return {
            j: {
                "n": self.count(j),
                "mass": self.mass(j),
                "mass_defect": 1.0 - self.mass(j),
                "support_defect": self.count(j) * self.dx - 2.0 * self.s[j],
            }
            for j in self.weights
        }


def build_kernel_table(params: ModelParams, grid: GridSpec) -> KernelTable:
    validate_grid(params, grid)
    weights = {}
    for j in KERNELS:
        n = kernel_count(params.s(j), grid.dx)
        k = np.arange(n + 1)
        w = simpson_coefficients(n) * gaussian_kernel(k * grid.dx, params.s(j), params.m(j)) * (grid.dx / 3.0)
        weights[j] = w
    return KernelTable(weights=weights, dx=grid.dx, nx=grid.nx, s={j: params.s(j) for j in KERNELS})


@dataclass
class PopulationState:
    u_plus: np.ndarray
    u_minus: np.ndarray
    time_index: int = 0

    @property
    def total(self) -> np.ndarray:
        return self.u_plus + self.u_minus

    @property
    def nx(self) -> int:
        return self.u_plus.shape[0]

    def mass(self, dx: float) -> float:
        return float(np.sum(self.u_plus + self.u_minus) * dx)

    def copy(self) -> "PopulationState":
        return PopulationState(self.u_plus.copy(), self.u_minus.copy(), self.time_index)

    def roll(self, c: int) -> "PopulationState":
        return PopulationState(np.roll(self.u_plus, c), np.roll(self.u_minus, c), self.time_index)

    def mirror(self) -> "PopulationState":
        """Reflect the grid (i -> Nx-1-i) and swap the two directions."""
        return PopulationState(self.u_minus[::-1].copy(), self.u_plus[::-1].copy(), self.time_index)


@dataclass
class SignalField:
    y_plus: np.ndarray
    y_minus: np.ndarray


@dataclass
class SourceField:
    s_plus: np.ndarray
    s_minus: np.ndarray


def compute_signals(state: PopulationState, kernels: KernelTable, params: ModelParams) -> SignalField:
    """Nonlocal signals perceived by right- and left-moving individuals.

    y_plus[i] = q_r Q_r[i] - q_a Q_a[i] + q_al Q_al[i], where Q_j is the Simpson
    sum of w_j[k] * (u[i+k] - u[i-k]) for repulsion/attraction and of
    w_al[k] * (u_minus[i+k] - u_plus[i-k]) for alignment. The left-moving signal
    uses mirrored offsets, which makes it exactly -y_plus.
    """
    if state.nx != kernels.nx:
        raise ValueError(f"state has {state.nx} cells, kernel table was built for {kernels.nx}")
    u = state.u_plus + state.u_minus
    q_r = _kernels.odd_difference_sums(u, u, kernels.weights["r"])
    q_a = _kernels.odd_difference_sums(u, u, kernels.weights["a"])
    y = params.q_r * q_r - params.q_a * q_a
    if params.q_al != 0.0:
        q_al = _kernels.odd_difference_sums(state.u_minus, state.u_plus, kernels.weights["al"])
        y = y + params.q_al * q_al
    return SignalField(y_plus=y, y_minus=-y)


def turning_function(y, y0):
    return 0.5 + 0.5 * np.tanh(np.asarray(y, dtype=float) - y0)


def turning_rates(signals: SignalField, params: ModelParams):
    """lambda = lambda1 + lambda2 * (0.5 + 0.5 tanh(y - y0)), element-wise."""
    lam_p = _kernels.tanh_rates(np.ascontiguousarray(signals.y_plus, dtype=float), params.lambda1, params.lambda2, params.y0)
    lam_m = _kernels.tanh_rates(np.ascontiguousarray(signals.y_minus, dtype=float), params.lambda1, params.lambda2, params.y0)
    return lam_p, lam_m


def source_terms(state: PopulationState, rates) -> SourceField:
    lam_p, lam_m = rates
    s_plus = -lam_p * state.u_plus + lam_m * state.u_minus
    return SourceField(s_plus=s_plus, s_minus=-s_plus)


def sources(state: PopulationState, kernels: KernelTable, params: ModelParams) -> SourceField:
    """Signals -> rates -> sources for one state."""
    return source_terms(state, turning_rates(compute_signals(state, kernels, params), params))


def homogeneous_steady_state_residual(u_star: float, params: ModelParams) -> float:
    """Right-hand side of the homogeneous steady-state equation for (u*, A - u*)."""
    A, q, l1, l2, y0 = params.A, params.q_al, params.lambda1, params.lambda2, params.y0
    if not -1e-12 <= u_star <= A + 1e-12:
        raise ValueError(f"u_star must lie in [0, A] = [0, {A}]")
    right = l1 + 0.5 * l2 + 0.5 * l2 * math.tanh(A * q - 2.0 * q * u_star - y0)
    left = l1 + 0.5 * l2 + 0.5 * l2 * math.tanh(-A * q + 2.0 * q * u_star - y0)
    return -u_star * right + (A - u_star) * left
