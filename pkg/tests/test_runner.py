import json

import numpy as np
import pytest

from nonlocal_fv.diagnostics import SolutionKind, StopReason, l1_norm
from nonlocal_fv.model import ConfigurationError, GridSpec, ModelParams
from nonlocal_fv.runner import (
    InitialConditionSpec,
    RunConfig,
    Simulation,
    default_amplitudes,
    list_checkpoints,
    make_initial_state,
    run_simulation,
    sweep,
)

COARSE = GridSpec(dx=2.0**-4, dt=2.0**-3, T=40.0)


def cfg(**kw):
    base = dict(grid=COARSE, ic=InitialConditionSpec("sin02", 3.5))
    base.update(kw)
    return RunConfig(**base)


@pytest.mark.parametrize("amp", [0.0, 1.0, 2.5, 5.0, 10.0])
@pytest.mark.parametrize("kind", ["sin02", "sin04"])
def test_initial_mass(kind, amp):
    grid = GridSpec(dx=2.0**-7, dt=2.0**-6, T=1.0)
    st_ = make_initial_state(InitialConditionSpec(kind, amp), grid)
    assert l1_norm(st_.total, grid) == pytest.approx(20.0 + 5.0 * amp, rel=1e-13)
    assert np.array_equal(st_.u_plus, st_.u_minus)


def test_random_ic_seeded():
    grid = GridSpec(dx=0.05, dt=0.1, T=1.0)
    a = make_initial_state(InitialConditionSpec("rand", 1.0), grid, seed=4)
    b = make_initial_state(InitialConditionSpec("rand", 1.0), grid, seed=4)
    c = make_initial_state(InitialConditionSpec("rand", 1.0), grid, seed=5)
    assert np.array_equal(a.total, b.total) and not np.array_equal(a.total, c.total)
    ref = 2.0 + np.random.Generator(np.random.PCG64(4)).random(grid.nx)
    assert np.array_equal(a.total, ref)


def test_file_ic(tmp_path):
    grid = GridSpec(dx=0.5, dt=1.0, T=1.0)
    p = tmp_path / "u.txt"
    np.savetxt(p, np.column_stack([np.arange(20.0), np.ones(20)]))
    st_ = make_initial_state(InitialConditionSpec("file", 0.0, str(p)), grid)
    assert st_.u_plus[3] == 3.0 and st_.u_minus[3] == 1.0
    np.savetxt(p, np.arange(5.0))
    with pytest.raises(ValueError, match="rows"):
        make_initial_state(InitialConditionSpec("file", 0.0, str(p)), grid)


def test_bad_ic():
    with pytest.raises(ValueError):
        InitialConditionSpec("square")
    with pytest.raises(ValueError):
        InitialConditionSpec("sin02", -1.0)


def test_config_hash_ignores_bookkeeping():
    a = cfg()
    assert a.hash == cfg(threads=2, checkpoint_interval=10, snapshot_times=(3.0,)).hash
    assert a.hash != cfg(seed=1).hash
    assert RunConfig.from_dict(json.loads(json.dumps(a.to_dict()))) == a


def test_cfl_rejected():
    with pytest.raises(ConfigurationError, match="10"):
        RunConfig(grid=GridSpec(dx=0.01, dt=1.0, T=1.0)).validate()


def test_zero_amplitude_stops_immediately():
    rec = run_simulation(cfg(ic=InitialConditionSpec("sin02", 0.0)))
    v = rec.verdict
    assert v.stop_reason is StopReason.SteadyStateStop
    assert v.solution_kind is SolutionKind.SteadyState
    assert rec.series.values[0] == 0.0 and rec.series.last_time == 2


def test_run_bookkeeping():
    rec = run_simulation(cfg(snapshot_times=(7.0,)))
    assert rec.verdict.stop_reason is StopReason.FinalTimeReached
    assert rec.series.times == list(range(1, 41))
    assert sorted(rec.snapshots) == [0, 7, 20, 40]
    assert rec.mass_drift < 1e-13
    assert not rec.health["flagged"]
    assert rec.steps == COARSE.nt


def test_deterministic():
    a, b = run_simulation(cfg()), run_simulation(cfg())
    assert np.array_equal(a.final_state.u_plus, b.final_state.u_plus)
    assert a.series.values == b.series.values


def test_thread_count_independent():
    a = run_simulation(cfg(threads=1, scheme="qsa_mc"))
    b = run_simulation(cfg(threads=4, scheme="qsa_mc"))
    assert np.array_equal(a.final_state.u_plus, b.final_state.u_plus)
    assert np.array_equal(a.final_state.u_minus, b.final_state.u_minus)
    assert a.series.values == b.series.values


def test_resume_bit_identical(tmp_path):
    c = cfg(scheme="maccormack", checkpoint_interval=50)
    full = run_simulation(c)
    sim = Simulation(c)
    sim.advance(130)
    path = sim.save_checkpoint(tmp_path)
    assert path == tmp_path / c.hash / "ckpt-130"
    resumed = Simulation.from_checkpoint(path).run()
    assert np.array_equal(resumed.final_state.u_plus, full.final_state.u_plus)
    assert np.array_equal(resumed.final_state.u_minus, full.final_state.u_minus)
    assert resumed.series.values == full.series.values
    assert resumed.verdict.label == full.verdict.label


def test_checkpointed_run_keeps_two(tmp_path):
    c = cfg(checkpoint_interval=40)
    rec = run_simulation(c, checkpoint_dir=tmp_path)
    names = [p.name for p in list_checkpoints(tmp_path / c.hash)]
    assert names == ["ckpt-240", "ckpt-280"]
    again = run_simulation(c, checkpoint_dir=tmp_path)  # resumes from step 280
    assert np.array_equal(again.final_state.u_plus, rec.final_state.u_plus)


def test_checkpoint_for_other_config_rejected(tmp_path):
    sim = Simulation(cfg())
    sim.advance(8)
    path = sim.save_checkpoint(tmp_path)
    with pytest.raises(ValueError, match="belongs"):
        Simulation.from_checkpoint(path, cfg(seed=9))


def test_nan_aborts():
    c = cfg(params=ModelParams(lambda1=1e308), ic=InitialConditionSpec("sin02", 1.0))
    rec = run_simulation(c)
    assert rec.verdict.stop_reason is StopReason.Aborted
    assert rec.health["nonfinite"]["step"] >= 1


def test_sweep_rows_in_order():
    amps = [3.0, 0.0, 1.5, 2.0]
    rows = sweep(cfg(grid=GridSpec(dx=2.0**-4, dt=2.0**-3, T=10.0)), amplitudes=amps, workers=2)
    assert [r["amplitude"] for r in rows] == amps
    assert [r["index"] for r in rows] == [0, 1, 2, 3]
    for r, a in zip(rows, amps):
        assert r["error"] == "" and r["l1_norm"] == pytest.approx(20 + 5 * a)


def test_sweep_isolates_failures():
    rows = sweep(cfg(grid=GridSpec(dx=2.0**-4, dt=2.0**-3, T=5.0)), steps=[(2.0**-4, 2.0**-3), (0.01, 1.0)])
    assert rows[0]["error"] == "" and "CFL" in rows[1]["error"]


def test_default_amplitudes():
    a = default_amplitudes()
    assert len(a) == 361 and a[0] == 0.001 and a[1] == 0.1 and a[-1] == 36.0
