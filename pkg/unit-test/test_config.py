import json

import pytest

import mixflowpy
from mixflowpy import exception as errs
from mixflowpy.scenario import parse_config, load_config, config_hash, RunConfig
from mixflowpy.transport import QuasiDiagonalClosure


def _rules(error):
    return " ".join(rule for _, rule in errs.flatten_messages(error.messages))


def test_minimal_document(scenario):
    config = RunConfig.from_dict(scenario())
    assert config.spec.n_species == 2
    assert isinstance(config.closure, QuasiDiagonalClosure)
    assert config.grid.n_cells == 16
    assert config.n_steps == 3
    assert config.viscosity == 1.0
    assert config.picard_tol == 1e-9
    assert config.max_sweeps == 50
    assert config.precision == 17
    assert config.exponent == 6.0
    assert config.alpha == 0.25
    assert config.output_directory == 'output'
    assert config.forces.is_zero
    assert config.reactions.is_zero


def test_hash_is_canonical(scenario):
    document = scenario()
    text = json.dumps(document, indent=4)
    reordered = json.dumps(dict(reversed(list(document.items()))))
    assert parse_config(text).config_hash == parse_config(reordered).config_hash == config_hash(document)
    assert len(config_hash(document)) == 64

    changed = scenario(viscosity=2.0)
    assert config_hash(changed) != config_hash(document)


def test_document_is_kept(scenario):
    document = scenario()
    config = RunConfig.from_dict(document)
    document['grid']['n_cells'] = 99
    assert config.document['grid']['n_cells'] == 16


def test_with_output(scenario, tmp_path):
    config = RunConfig.from_dict(scenario()).with_output(directory=str(tmp_path), cadence=5)
    assert config.output_directory == str(tmp_path)
    assert config.cadence == 5


def test_load_config(scenario, tmp_path):
    path = tmp_path / 'scenario.json'
    path.write_text(json.dumps(scenario()), encoding='utf-8')
    assert load_config(path).grid.n_cells == 16
    assert mixflowpy.load_config(str(path)).config_hash == config_hash(scenario())


def test_missing_file(tmp_path):
    with pytest.raises(errs.ConfigParseError):
        load_config(tmp_path / 'missing.json')


@pytest.mark.parametrize("text", ["{", "[1, 2]", "", "not json"])
def test_malformed_document(text):
    with pytest.raises(errs.ConfigParseError):
        parse_config(text)


@pytest.mark.parametrize("sections, rule", [
    ({"mixture": {"vbar": [2.0, 2.0]}}, "DegenerateVolumes"),
    ({"reactions": {"kind": "constant", "values": [1.0, 0.0]}}, "ReactionAdmissibility"),
    ({"initial": {"varrho": {"kind": "uniform", "value": 1.0}}}, "ThresholdViolation"),
    ({"initial": {"varrho": {"kind": "uniform", "value": 0.75}, "q": [{"kind": "zero"}]}}, "SpeciesCount"),
    ({"initial": {"varrho": {"kind": "tabulated", "values": [0.75] * 10}}}, "GridMismatch"),
    ({"forces": [{"kind": "cosine", "amplitude": 1.0}, {"kind": "zero"}]}, "ForceBoundaryAdmissibility"),
    ({"forces": [{"kind": "tabulated", "values": [0.0] * 16}]}, "ForceProfile"),
    ({"forces": [{"kind": "zero"}] * 3}, "SpeciesCount"),
    ({"closure": {"kind": "maxwell_stefan", "diffusivities": [[1, 1, 1], [1, 1, 1], [1, 1, 1]]}}, "SpeciesCount"),
])
def test_rule_violations(scenario, sections, rule):
    with pytest.raises(errs.InvalidConfigError) as info:
        RunConfig.from_dict(scenario(**sections))
    assert rule in _rules(info.value)
    assert rule in str(info.value)


@pytest.mark.parametrize("sections", [
    {"grid": {"n_cells": 4}},
    {"time": {"dt": 1e-3, "t_final": 1e-4}},
    {"time": {"dt": -1.0, "t_final": 1.0}},
    {"viscosity": 0.0},
    {"output": {"cadence": 0}},
    {"output": {"precision": 30}},
    {"diagnostics": {"exponent": 3.0}},
    {"diagnostics": {"alpha": 0.0}},
    {"picard": {"max_sweeps": 0}},
    {"initial": {"varrho": {"kind": "sine", "base": 0.75}}},
])
def test_section_validation(scenario, sections):
    with pytest.raises(errs.InvalidConfigError):
        RunConfig.from_dict(scenario(**sections))


def test_missing_required_section(scenario):
    document = scenario()
    del document['grid']
    with pytest.raises(errs.InvalidConfigError) as info:
        RunConfig.from_dict(document)
    assert 'grid' in info.value.messages


def test_non_object_document():
    with pytest.raises(errs.ConfigParseError):
        RunConfig.from_dict([1, 2, 3])


def test_bundled_scenarios():
    import pathlib

    directory = pathlib.Path(__file__).resolve().parent.parent / 'doc-examples' / 'scenarios'
    paths = sorted(directory.glob('*.json'))
    assert len(paths) == 3
    for path in paths:
        assert load_config(path).n_steps >= 1
