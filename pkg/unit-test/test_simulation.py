import pathlib

import numpy as np
import pytest

import mixflowpy
from mixflowpy import exception as errs
from mixflowpy.solver import simulation as simulation_module

SCENARIOS = pathlib.Path(__file__).resolve().parents[1] / "doc-examples" / "scenarios"

BREACH = dict(
    grid={"n_cells": 32},
    time={"dt": 5e-4, "t_final": 5e-2},
    initial={
        "varrho": {"kind": "uniform", "value": 0.98},
        "v": {"kind": "sine", "amplitude": 5.0}
    }
)


def _assert_free_energy_decays(records, rel_tol=1e-8):
    energies = np.array([record.free_energy for record in records])
    assert energies[-1] < energies[0]
    assert np.max(np.diff(energies)) <= rel_tol * abs(energies[0])


def test_binary_equilibrium_is_preserved(run_config):
    config = run_config(time={"dt": 1e-3, "t_final": 0.1},
                        initial={"varrho": {"kind": "uniform", "value": 0.75}})
    series = mixflowpy.run_simulation(config)
    assert series.termination_reason == 'completed'
    assert len(series.records) == 101
    initial = mixflowpy.Simulation(config).initial_state()
    assert series.final_state.max_deviation(initial) <= 1e-10
    assert all(record.picard_iters == 1 for record in series.records[1:])


def test_ternary_equilibrium_is_preserved(run_config):
    config = run_config(mixture={"vbar": [1.0, 2.0, 4.0]},
                        time={"dt": 1e-3, "t_final": 2e-2},
                        initial={"varrho": {"kind": "uniform", "value": 0.6},
                                 "q": [{"kind": "uniform", "value": 0.2}]})
    series = mixflowpy.run_simulation(config)
    assert series.termination_reason == 'completed'
    initial = mixflowpy.Simulation(config).initial_state()
    assert series.final_state.max_deviation(initial) <= 1e-10


def test_binary_relaxation(run_config):
    config = run_config(time={"dt": 1e-3, "t_final": 2e-2})
    series = mixflowpy.run_simulation(config)
    records = series.records
    assert series.termination_reason == 'completed'
    assert len(records) == config.n_steps + 1 == 21
    assert records[-1].time == pytest.approx(0.02)

    assert max(record.mass_drift for record in records) <= 1e-12
    assert records[-1].zeta_mean_max <= 1e-12
    assert records[-1].volume_residual_max <= 1e-10
    assert max(record.isochoric_residual for record in records) <= 1e-8
    _assert_free_energy_decays(records)
    assert all(record.picard_iters >= 1 for record in records[1:])
    # Cumulative monitors never decrease
    assert [r.M_upper for r in records] == sorted(r.M_upper for r in records)
    assert [r.K_criterion for r in records] == sorted(r.K_criterion for r in records)


def test_ternary_forced_run(run_config):
    config = run_config(mixture={"vbar": [1.0, 2.0, 4.0]},
                        closure={"kind": "maxwell_stefan",
                                 "diffusivities": [[1.0, 1.0, 0.5], [1.0, 1.0, 2.0], [0.5, 2.0, 1.0]]},
                        time={"dt": 1e-3, "t_final": 5e-3},
                        initial={"varrho": {"kind": "bump", "base": 0.55, "amplitude": 0.1},
                                 "q": [{"kind": "cosine", "amplitude": 0.2}]},
                        forces=[{"kind": "sine", "amplitude": 0.5}, {"kind": "zero"},
                                {"kind": "sine", "amplitude": -0.5}],
                        reactions={"kind": "linear_relaxation", "rate": 1.0, "equilibrium": [0.2, 0.1, 0.1]})
    series = mixflowpy.run_simulation(config)
    assert series.termination_reason == 'completed'
    assert max(record.mass_drift for record in series.records) <= 1e-12
    assert series.records[-1].volume_residual_max <= 1e-10
    assert series.final_state.q.shape == (16, 1)


def test_threshold_breach(run_config):
    config = run_config(**BREACH)
    series = mixflowpy.run_simulation(config)
    assert series.termination_reason == 'threshold_breach'
    breach = series.breach
    assert breach['bound'] == 'upper'
    assert breach['x'] > 0.5
    assert breach['time'] > 0
    assert np.max(series.final_state.varrho) < config.spec.varrho_max - 1e-10
    upper = [record.M_upper for record in series.records]
    assert upper[-1] > upper[0]
    assert 'threshold' in series.message


def test_threshold_breach_approaches_monotonically(run_config):
    config = run_config(**{**BREACH, "time": {"dt": 5e-5, "t_final": 5e-2}})
    series = mixflowpy.run_simulation(config)
    assert series.termination_reason == 'threshold_breach'
    assert len(series.records) >= 11
    upper = np.array([record.M_upper for record in series.records[-10:]])
    assert np.all(np.diff(upper) > 0)
    assert np.max(series.final_state.varrho) < config.spec.varrho_max - 1e-10


@pytest.mark.slow
def test_binary_interdiffusion_scenario(tmp_path):
    config = mixflowpy.load_config(SCENARIOS / "binary_interdiffusion.json").with_output(directory=tmp_path)
    assert config.grid.n_cells == 128
    series = mixflowpy.run_simulation(config)
    records = series.records
    assert series.termination_reason == 'completed'
    assert records[-1].time == pytest.approx(0.5)
    assert max(record.mass_drift for record in records) <= 1e-10
    assert max(abs(record.zeta_mean) for record in records) <= 1e-12
    assert max(record.volume_residual for record in records) <= 1e-9
    _assert_free_energy_decays(records)


def test_picard_divergence_ends_the_run(run_config, monkeypatch):
    def diverge(*args, **kwargs):
        raise errs.PicardDivergence("increments kept growing", increments=[1.0, 2.0, 3.0, 4.0])

    monkeypatch.setattr(simulation_module, 'picard_advance', diverge)
    series = mixflowpy.run_simulation(run_config())
    assert series.termination_reason == 'picard_divergence'
    assert len(series.records) == 1
    assert series.breach is None


def test_snapshots_follow_the_cadence(run_config):
    config = run_config(time={"dt": 1e-3, "t_final": 6e-3}, output={"cadence": 2})
    series = mixflowpy.run_simulation(config)
    assert [snapshot.step for snapshot in series.snapshots] == [2, 4, 6]
    snapshot = series.snapshots[0]
    assert snapshot.rho.shape == (16, 2)
    np.testing.assert_allclose(np.sum(snapshot.rho, axis=1), snapshot.state.varrho, atol=1e-10)


def test_event_hooks(run_config):
    simulation = mixflowpy.Simulation(run_config())
    calls = {'start': 0, 'step': 0, 'sweep': 0, 'finish': 0}

    @simulation.event()
    def on_start(state, config):
        calls['start'] += 1
        assert state.time == 0.0

    @simulation.event()
    def on_step(record, state):
        calls['step'] += 1
        assert record.time == pytest.approx(state.time)

    @simulation.event()
    def on_picard_sweep(sweep, increment, energy):
        calls['sweep'] += 1

    @simulation.event()
    def on_finish(series):
        calls['finish'] += 1
        assert series.termination_reason == 'completed'

    series = simulation.run()
    assert simulation.series is series
    assert calls['start'] == 1
    assert calls['step'] == len(series.records) == 4
    assert calls['sweep'] >= 3
    assert calls['finish'] == 1


def test_breach_hook(run_config):
    simulation = mixflowpy.Simulation(run_config(**BREACH))
    breaches = []

    @simulation.event()
    def on_breach(error):
        breaches.append(error)

    simulation.run()
    assert len(breaches) == 1
    assert isinstance(breaches[0], errs.ThresholdBreach)


def test_subclass_hooks(run_config):
    class Recorder(mixflowpy.Simulation):
        def __init__(self, config):
            super().__init__(config)
            self.steps = []

        def on_step(self, record, state):
            self.steps.append(record.step)

    recorder = Recorder(run_config())
    recorder.run()
    assert recorder.steps == [0, 1, 2, 3]


def test_unknown_event_name(run_config):
    simulation = mixflowpy.Simulation(run_config())
    with pytest.raises(ValueError):
        @simulation.event
        def on_message(record, state):
            pass


def test_failing_hook_does_not_stop_run(run_config):
    simulation = mixflowpy.Simulation(run_config())

    @simulation.event
    def on_step(record, state):
        raise RuntimeError("hook failure")

    series = simulation.run()
    assert series.termination_reason == 'completed'
    assert len(series.records) == 4
