import json

import pytest

from mixflowpy.cli import main, build_parser, EXIT_CODES


def _write(tmp_path, document, name='scenario.json'):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding='utf-8')
    return str(path)


def test_simulate_completed(scenario, tmp_path, capsys):
    path = _write(tmp_path, scenario())
    out = tmp_path / 'run'
    assert main(['simulate', path, '--out', str(out), '--quiet']) == 0
    assert (out / 'monitors.csv').exists()
    assert (out / 'fields_000003.csv').exists()
    assert 'completed' in capsys.readouterr().out


def test_simulate_with_config_option(scenario, tmp_path):
    path = _write(tmp_path, scenario())
    out = tmp_path / 'run'
    assert main(['simulate', '--config', path, '--out', str(out), '--cadence', '3', '--quiet']) == 0
    assert sorted(p.name for p in out.glob('fields_*.csv')) == ['fields_000003.csv']


def test_simulate_breach(scenario, tmp_path, capsys):
    document = scenario(grid={"n_cells": 32}, time={"dt": 5e-4, "t_final": 5e-2},
                        initial={"varrho": {"kind": "uniform", "value": 0.98},
                                 "v": {"kind": "sine", "amplitude": 5.0}})
    path = _write(tmp_path, document)
    assert main(['simulate', path, '--out', str(tmp_path / 'run'), '--quiet']) == EXIT_CODES['threshold_breach'] == 2
    assert 'threshold breach' in capsys.readouterr().out


def test_invalid_config(scenario, tmp_path, capsys):
    path = _write(tmp_path, scenario(mixture={"vbar": [2.0, 2.0]}))
    assert main(['simulate', path, '--quiet']) == 64
    assert 'DegenerateVolumes' in capsys.readouterr().err


def test_malformed_config(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"mixture": ', encoding='utf-8')
    assert main(['simulate', str(path), '--quiet']) == 64


def test_missing_config_argument():
    assert main(['simulate', '--quiet']) == 64


def test_sweep_threshold(scenario, tmp_path, capsys):
    path = _write(tmp_path, scenario())
    assert main(['sweep-threshold', path, '--points', '12', '--quiet']) == 0
    output = capsys.readouterr().out
    assert 'ratio_spread' in output
    assert 'pressure_margin' in output


def test_derive_fixtures(capsys):
    assert main(['derive-fixtures', '--quiet']) == 0
    output = capsys.readouterr().out
    for name in ('f(0,0)', 'P(0.75)', 'P_varrho(0.75)', 'm(0.75)', 'z(5)'):
        assert name in output


def test_check_thermo(capsys):
    assert main(['check-thermo', '--samples', '40', '--seed', '7', '--quiet']) == 0
    assert '0 failed (seed 7)' in capsys.readouterr().out


def test_command_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
