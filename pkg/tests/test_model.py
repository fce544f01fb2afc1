import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_for, random_state
from nonlocal_fv.model import (
    ConfigurationError,
    GridSpec,
    ModelParams,
    PopulationState,
    build_kernel_table,
    compute_signals,
    homogeneous_steady_state_residual,
    kernel_count,
    simpson_coefficients,
    sources,
    turning_rates,
    validate_grid,
)


def brute_signal(u_plus, u_minus, params, dx):
    """Index-by-index Simpson sums written straight from the quadrature definition."""
    n = len(u_plus)
    u = [u_plus[i] + u_minus[i] for i in range(n)]
    y = []
    for i in range(n):
        total = 0.0
        for j, q in (("r", params.q_r), ("a", -params.q_a), ("al", params.q_al)):
            if q == 0.0:
                continue
            s, m = getattr(params, f"s_{j}"), getattr(params, f"m_{j}")
            N = 2 * int(round(s / dx))
            acc = 0.0
            for k in range(N + 1):
                c = 1.0 if k in (0, N) else (4.0 if k % 2 else 2.0)
                K = math.exp(-((k * dx - s) ** 2) / (2 * m * m)) / math.sqrt(2 * math.pi * m * m)
                if j == "al":
                    diff = u_minus[(i + k) % n] - u_plus[(i - k) % n]
                else:
                    diff = u[(i + k) % n] - u[(i - k) % n]
                acc += c * K * dx / 3.0 * diff
            total += q * acc
        y.append(total)
    return np.array(y)


def test_defaults():
    p = ModelParams()
    assert (p.gamma, p.lambda1, p.lambda2, p.y0) == (0.1, 0.2, 0.9, 2.0)
    assert (p.q_a, p.q_r, p.q_al) == (1.1, 2.2, 0.0)
    assert (p.s_a, p.s_r, p.s_al) == (1.0, 0.25, 0.5)
    assert (p.m_a, p.m_r, p.m_al) == (1.0 / 8, 0.25 / 8, 0.5 / 8)
    assert (p.A, p.L) == (2.0, 10.0)


@pytest.mark.parametrize("bad", [{"gamma": 0.0}, {"lambda1": -1.0}, {"q_a": -0.1}, {"s_r": 0.0}, {"L": -1.0}])
def test_invalid_params(bad):
    with pytest.raises(ConfigurationError):
        ModelParams(**bad)


def test_kernel_count_even():
    assert kernel_count(1.0, 2.0**-7) == 256
    assert kernel_count(0.25, 0.07) == 8
    assert all(kernel_count(s, 0.013) % 2 == 0 for s in (0.25, 0.5, 1.0, 0.77))


def test_simpson_coefficients():
    assert simpson_coefficients(4).tolist() == [1, 4, 2, 4, 1]
    with pytest.raises(ConfigurationError):
        simpson_coefficients(3)


def test_grid_sizes():
    g = GridSpec(dx=2.0**-7, dt=2.0**-6, T=2000.0)
    assert g.nx == 1280 and g.nt == 128000
    assert GridSpec(dx=0.01, dt=0.02, T=1.0).nx == 1000
    assert g.courant(0.1) == 0.2


def test_cfl_rejected_with_courant_number():
    with pytest.raises(ConfigurationError, match="10"):
        validate_grid(ModelParams(), GridSpec(dx=0.01, dt=1.0, T=5.0))


def test_kernel_too_coarse_rejected():
    with pytest.raises(ConfigurationError, match="s_r"):
        validate_grid(ModelParams(), GridSpec(dx=1.0, dt=1.0, T=5.0))


def test_kernel_mass_close_to_one():
    # the truncated Gaussian on [0, 2s] with width m = s/8 carries erf(8/sqrt 2) of the mass;
    # Simpson recovers it to rounding once m spans four cells
    exact = math.erf(8.0 / math.sqrt(2.0))
    params = ModelParams()
    for nx in (320, 640, 1280):
        kt = build_kernel_table(params, grid_for(nx))
        for j in ("r", "a", "al"):
            if params.m(j) / kt.dx >= 4.0:
                assert abs(kt.mass(j) - exact) < 1e-14
    coarse = build_kernel_table(params, grid_for(320))
    assert abs(coarse.metadata()["r"]["mass_defect"]) == pytest.approx(4.7946e-3, rel=1e-3)
    assert coarse.metadata()["r"]["support_defect"] == 0.0


def test_signals_match_brute_force():
    rng = np.random.default_rng(7)
    params = ModelParams(q_al=0.7)
    for nx in (64, 160):
        g = grid_for(nx)
        kt = build_kernel_table(params, g)
        st_ = random_state(rng, nx)
        y = compute_signals(st_, kt, params)
        ref = brute_signal(st_.u_plus, st_.u_minus, params, g.dx)
        assert np.max(np.abs(y.y_plus - ref)) <= 1e-13 * max(1.0, np.max(np.abs(ref)))
        assert np.array_equal(y.y_minus, -y.y_plus)


def test_signal_size_mismatch(params, kernels256):
    with pytest.raises(ValueError, match="cells"):
        compute_signals(PopulationState(np.ones(10), np.ones(10)), kernels256, params)


def test_uniform_state_has_zero_signal(params, kernels256):
    st_ = PopulationState(np.ones(256), np.ones(256))
    y = compute_signals(st_, kernels256, params)
    assert np.all(y.y_plus == 0.0)
    src = sources(st_, kernels256, params)
    assert np.all(src.s_plus == 0.0) and np.all(src.s_minus == 0.0)


def test_turning_rate_at_zero_signal(params, kernels256):
    lam = params.lambda1 + params.lambda2 * (0.5 + 0.5 * math.tanh(-2.0))
    assert lam == pytest.approx(0.21618758896, abs=1e-11)
    st_ = PopulationState(np.ones(256), np.ones(256))
    lp, lm = turning_rates(compute_signals(st_, kernels256, params), params)
    assert np.all(lp == lam) and np.all(lm == lam)


def test_homogeneous_residual():
    p = ModelParams()
    assert homogeneous_steady_state_residual(1.0, p) == 0.0
    # with no alignment the equation is linear: (A - 2u) * lambda(0)
    lam0 = p.lambda1 + 0.5 * p.lambda2 + 0.5 * p.lambda2 * math.tanh(-p.y0)
    assert homogeneous_steady_state_residual(0.5, p) == pytest.approx(lam0)
    assert homogeneous_steady_state_residual(1.5, p) < 0
    with pytest.raises(ValueError):
        homogeneous_steady_state_residual(3.0, p)


nx_st = st.sampled_from([64, 96, 128])


@settings(max_examples=25, deadline=None)
@given(nx=nx_st, seed=st.integers(0, 2**32 - 1), shift=st.integers(-200, 200), q_al=st.sampled_from([0.0, 0.6]))
def test_signal_equivariance(nx, seed, shift, q_al):
    params = ModelParams(q_al=q_al)
    kt = build_kernel_table(params, grid_for(nx))
    st_ = random_state(np.random.default_rng(seed), nx)
    y = compute_signals(st_, kt, params).y_plus
    assert np.array_equal(compute_signals(st_.roll(shift), kt, params).y_plus, np.roll(y, shift))
    assert np.array_equal(compute_signals(st_.mirror(), kt, params).y_plus, -y[::-1])


@settings(max_examples=25, deadline=None)
@given(nx=nx_st, seed=st.integers(0, 2**32 - 1))
def test_sources_antisymmetric_and_rates_bounded(nx, seed):
    params = ModelParams()
    kt = build_kernel_table(params, grid_for(nx))
    st_ = random_state(np.random.default_rng(seed), nx)
    src = sources(st_, kt, params)
    assert np.array_equal(src.s_minus, -src.s_plus)
    lp, lm = turning_rates(compute_signals(st_, kt, params), params)
    for lam in (lp, lm):
        assert np.all(lam >= params.lambda1) and np.all(lam <= params.lambda1 + params.lambda2)
