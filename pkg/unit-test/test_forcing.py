import numpy as np
import pytest
from marshmallow import ValidationError

from mixflowpy.solver import (Profile, ProfileSchema, ForceField, ReactionModel, ReactionSchema,
                              decompose_force, sample_constraint_states)
from mixflowpy.types import Grid1D


class TestProfile:
    def test_kinds(self):
        x = np.array([0.0, 0.25, 0.5])
        np.testing.assert_allclose(Profile('zero').evaluate(x, 1.0), 0.0)
        np.testing.assert_allclose(Profile('constant', value=2.0).evaluate(x, 1.0), 2.0)
        np.testing.assert_allclose(Profile('cosine', base=1.0, amplitude=0.5).evaluate(x, 1.0),
                                   1.0 + 0.5 * np.cos(np.pi * x))
        np.testing.assert_allclose(Profile('sine', amplitude=2.0, mode=2).evaluate(x, 1.0),
                                   2.0 * np.sin(2 * np.pi * x), atol=1e-15)
        bump = Profile('bump', base=0.7, amplitude=0.1, center=0.5, width=0.2).evaluate(x, 1.0)
        assert bump[2] == pytest.approx(0.8)

    def test_frequency(self):
        profile = Profile('cosine', base=1.0, amplitude=1.0, frequency=1.0)
        np.testing.assert_allclose(profile.evaluate(np.array([0.0]), 1.0, t=0.5), 0.0, atol=1e-15)

    def test_tabulated(self):
        grid = Grid1D(8)
        profile = Profile('tabulated', values=np.arange(8.0))
        np.testing.assert_array_equal(profile.evaluate(grid.x, grid.length), np.arange(8.0))
        with pytest.raises(ValueError):
            profile.evaluate(Grid1D(16).x, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Profile('gaussian')

    def test_schema(self):
        profile = ProfileSchema().load({'kind': 'bump', 'base': 0.7, 'amplitude': 0.1})
        assert profile.kind == 'bump'
        assert profile.to_dict()['base'] == 0.7
        with pytest.raises(ValidationError):
            ProfileSchema().load({'kind': 'tabulated'})


class TestForceField:
    def test_single_profile_applies_to_every_species(self, ternary):
        spec, frame = ternary
        forces = ForceField([Profile('constant', value=3.0)], 3)
        b = forces.evaluate(np.array([0.1, 0.9]), 1.0)
        assert b.shape == (2, 3)
        assert forces.boundary_defect(frame, 1.0) <= 1e-12
        b_tilde, b_hat, b_bar = decompose_force(frame, b)
        np.testing.assert_allclose(b_tilde, 0.0, atol=1e-12)
        np.testing.assert_allclose(b_hat, 0.0, atol=1e-12)
        np.testing.assert_allclose(b_bar, 3.0)

    def test_sine_forces_vanish_on_walls(self, ternary):
        _, frame = ternary
        forces = ForceField([Profile('sine', amplitude=1.0), Profile('zero'), Profile('sine', amplitude=-2.0)], 3)
        assert forces.boundary_defect(frame, 1.0, times=np.linspace(0.0, 1.0, 5)) <= 1e-12

    def test_cosine_force_is_not_admissible(self, binary):
        _, frame = binary
        forces = ForceField([Profile('cosine', amplitude=1.0), Profile('zero')], 2)
        assert forces.boundary_defect(frame, 1.0) > 0.1

    def test_empty_is_zero(self):
        assert ForceField([], 3).is_zero
        with pytest.raises(ValueError):
            ForceField([Profile('zero')] * 2, 3)


class TestReactions:
    def test_relaxation_is_admissible(self, quaternary):
        spec, frame = quaternary
        reaction = ReactionModel('linear_relaxation', rate=2.0, equilibrium=[0.3, 0.2, 0.1, 0.05])
        samples = sample_constraint_states(spec.vbar, 64)
        volume, total = reaction.admissibility_defect(frame, samples)
        assert volume <= 1e-12 and total <= 1e-12

    def test_constant_rate_violating_the_constraint(self, binary):
        spec, frame = binary
        reaction = ReactionModel('constant', values=[1.0, 0.0])
        volume, total = reaction.admissibility_defect(frame, sample_constraint_states(spec.vbar, 8))
        assert volume == pytest.approx(1.0)
        assert total == pytest.approx(1.0)

    def test_samples_on_constraint_surface(self, ternary):
        spec, _ = ternary
        samples = sample_constraint_states(spec.vbar, 32, seed=3)
        np.testing.assert_allclose(samples @ spec.vbar, 1.0)
        assert np.all(samples > 0)

    def test_schema(self):
        reaction = ReactionSchema().load({'kind': 'linear_relaxation', 'rate': 1.0, 'equilibrium': [0.5, 0.25]})
        assert reaction.kind == 'linear_relaxation'
        assert not reaction.is_zero
        with pytest.raises(ValidationError):
            ReactionSchema().load({'kind': 'constant'})
