import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import mixflowpy
from mixflowpy import exception as errs
from mixflowpy.thermo import (build_frame, decompose_vector, assemble_vector, dual_solve, hessian_f,
                              gibbs_duhem_residual, free_energy_k, grad_k, hessian_k, barycenter,
                              evaluate_coordinates, to_physical, from_physical, implicit_M, map_R,
                              pressure_P, state_jacobians)
from mixflowpy.types import MixtureSpec, ReducedCoords, ChemicalState

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

VBARS = [(1.0, 2.0), (1.0, 2.0, 4.0), (1.0, 1.5, 2.5, 4.0)]
FRAMES = {vbar: (MixtureSpec(vbar), build_frame(vbar)) for vbar in VBARS}


class TestMixtureSpec:
    def test_thresholds(self):
        spec = MixtureSpec((1.0, 2.0, 4.0))
        assert spec.varrho_min == pytest.approx(0.25)
        assert spec.varrho_max == pytest.approx(1.0)
        assert spec.interval == (spec.varrho_min, spec.varrho_max)

    @pytest.mark.parametrize("vbar", [(2.0, 2.0), (1.0, 1.0, 1.0), (1.0, -2.0), (3.0,)])
    def test_degenerate_volumes(self, vbar):
        with pytest.raises(errs.DegenerateVolumes):
            MixtureSpec(vbar)

    def test_from_dict(self):
        spec = MixtureSpec.from_dict({'vbar': [1, 2], 'theta_kb': 2.0})
        assert spec.theta_kb == 2.0
        assert spec.to_dict()['vbar'] == [1.0, 2.0]

    def test_from_dict_rejects_parallel_volumes(self):
        with pytest.raises(errs.InvalidConfigError) as info:
            MixtureSpec.from_dict({'vbar': [2, 2]})
        assert 'DegenerateVolumes' in str(info.value)

    def test_margin(self, binary):
        spec, _ = binary
        assert spec.margin(0.75) == pytest.approx(0.25)


class TestBasis:
    def test_biorthogonality(self, mixture):
        spec, frame = mixture
        assert frame.biorthogonality_residual <= 1e-12
        np.testing.assert_allclose(frame.xi[-1], np.ones(spec.n_species))
        np.testing.assert_allclose(frame.xi[-2], spec.vbar)
        assert frame.n_free == spec.n_species - 2

    def test_free_vectors_orthogonal_to_span(self, mixture):
        spec, frame = mixture
        free = frame.xi[:frame.n_free]
        np.testing.assert_allclose(free @ np.ones(spec.n_species), 0.0, atol=1e-12)
        np.testing.assert_allclose(free @ spec.vbar, 0.0, atol=1e-12)

    def test_deterministic(self):
        first = build_frame((1.0, 2.0, 4.0))
        second = build_frame((1.0, 2.0, 4.0))
        assert np.array_equal(first.xi, second.xi)

    def test_decompose_assemble(self, quaternary, rng):
        _, frame = quaternary
        w = rng.standard_normal((20, 4))
        q_part, vbar_part, ones_part = decompose_vector(frame, w)
        np.testing.assert_allclose(assemble_vector(frame, q_part, vbar_part, ones_part), w, atol=1e-12)

    def test_species_count_mismatch(self):
        with pytest.raises(ValueError):
            build_frame((1.0, 2.0), n_species=3)

    def test_parallel_volumes(self):
        with pytest.raises(errs.DegenerateVolumes):
            build_frame((1.5, 1.5, 1.5))


class TestFreeEnergy:
    def test_gradient_against_differences(self, ternary, rng):
        spec, _ = ternary
        rho = rng.uniform(0.1, 1.0, size=3)
        h = 1e-6
        fd = np.array([(free_energy_k(spec, rho + h * e) - free_energy_k(spec, rho - h * e)) / (2 * h)
                       for e in np.eye(3)])
        np.testing.assert_allclose(grad_k(spec, rho), fd, rtol=1e-6, atol=1e-8)

    def test_hessian_singular_along_rho(self, ternary, rng):
        spec, _ = ternary
        rho = rng.uniform(0.1, 1.0, size=(5, 3))
        np.testing.assert_allclose(np.einsum('bij,bj->bi', hessian_k(spec, rho), rho), 0.0, atol=1e-10)

    def test_nonpositive_density(self, binary):
        spec, _ = binary
        with pytest.raises(errs.NonpositiveDensity):
            free_energy_k(spec, np.array([0.5, 0.0]))


class TestConjugate:
    def test_golden_ratio_fixture(self, binary):
        spec, _ = binary
        p, rho = dual_solve(spec, np.zeros(2))
        assert float(p) == pytest.approx(-math.log(GOLDEN), abs=1e-9)
        np.testing.assert_allclose(rho, [1.0 / math.sqrt(5.0), (1.0 - 1.0 / math.sqrt(5.0)) / 2.0], atol=1e-9)

    def test_barycenter_on_surface(self, mixture):
        spec, _ = mixture
        assert barycenter(spec) @ spec.vbar == pytest.approx(1.0)

    def test_duality(self, mixture, rng):
        spec, _ = mixture
        mu = rng.uniform(-5.0, 5.0, size=(200, spec.n_species))
        p, rho = dual_solve(spec, mu)
        stationarity = mu - spec.vbar * p[:, None] - spec.free_energy.gradient(rho)
        assert np.max(np.abs(stationarity)) <= 1e-9
        assert np.max(np.abs(rho @ spec.vbar - 1.0)) <= 1e-10
        assert np.all(rho > 0)

    def test_shift_law(self, ternary, rng):
        spec, _ = ternary
        mu = rng.uniform(-3.0, 3.0, size=(50, 3))
        shift = rng.uniform(-2.0, 2.0, size=50)
        p, rho = dual_solve(spec, mu)
        p_shifted, rho_shifted = dual_solve(spec, mu + shift[:, None] * spec.vbar)
        np.testing.assert_allclose(p_shifted, p + shift, atol=1e-10)
        np.testing.assert_allclose(rho_shifted, rho, atol=1e-10)

    def test_hessian_kernel_and_symmetry(self, mixture, rng):
        spec, _ = mixture
        mu = rng.uniform(-5.0, 5.0, size=(100, spec.n_species))
        hess = hessian_f(spec, mu)
        assert np.max(np.abs(hess @ spec.vbar)) <= 1e-9
        np.testing.assert_allclose(hess, np.swapaxes(hess, -1, -2), atol=1e-12)
        assert np.min(np.linalg.eigvalsh(hess)) >= -1e-10

    def test_hessian_against_differences(self, ternary, rng):
        spec, _ = ternary
        mu = rng.uniform(-2.0, 2.0, size=3)
        h = 1e-5
        fd = np.stack([(dual_solve(spec, mu + h * e)[1] - dual_solve(spec, mu - h * e)[1]) / (2 * h)
                       for e in np.eye(3)], axis=-1)
        exact = hessian_f(spec, mu)
        assert np.max(np.abs(exact - fd)) / np.max(np.abs(exact)) <= 1e-5

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(min_value=-4.0, max_value=4.0), min_size=3, max_size=3))
    def test_gibbs_duhem(self, mu):
        spec = MixtureSpec((1.0, 2.0, 4.0))
        dmu = 1e-3 * np.array([0.3, -0.7, 0.5])
        assert float(gibbs_duhem_residual(spec, np.array(mu), dmu)) <= 1e-7


class TestCoordinates:
    def test_binary_pressure_fixture(self, binary):
        spec, frame = binary
        evaluation = evaluate_coordinates(spec, frame, np.array([0.75]))
        assert float(evaluation.P[0]) == pytest.approx(math.log(2.0), abs=1e-10)
        assert float(evaluation.P_varrho[0]) == pytest.approx(8.0, abs=1e-7)
        np.testing.assert_allclose(evaluation.rho[0], [0.5, 0.25], atol=1e-10)

    def test_implicit_M_defines_varrho(self, mixture, rng):
        spec, frame = mixture
        low, high = spec.interval
        varrho = low + (high - low) * rng.uniform(0.05, 0.95, size=100)
        q = rng.uniform(-2.0, 2.0, size=(100, frame.n_free))
        evaluation = evaluate_coordinates(spec, frame, varrho, q)
        np.testing.assert_allclose(np.sum(evaluation.rho, axis=1), varrho, atol=1e-10)
        np.testing.assert_allclose(evaluation.rho @ spec.vbar, 1.0, atol=1e-10)

    def test_pointwise_maps(self, binary):
        spec, frame = binary
        varrho = np.array([0.75])
        assert float(pressure_P(spec, frame, varrho)[0]) == pytest.approx(math.log(2.0), abs=1e-10)
        rho, R = map_R(spec, frame, varrho)
        np.testing.assert_allclose(rho[0], [0.5, 0.25], atol=1e-10)
        assert R.shape == (1, 0)
        jacobians = state_jacobians(spec, frame, varrho)
        assert set(jacobians) == {'R_q', 'R_varrho', 'P_q', 'P_varrho'}
        assert float(jacobians['P_varrho'][0]) == pytest.approx(8.0, abs=1e-7)

    def test_implicit_M_is_the_shift(self, ternary, rng):
        spec, frame = ternary
        varrho = np.array([0.4, 0.7])
        q = rng.uniform(-1.0, 1.0, size=(2, 1))
        M = implicit_M(spec, frame, varrho, q)
        rho = map_R(spec, frame, varrho, q)[0]
        # shifting μ along 1ᴺ by 𝓜 lands on the prescribed ϱ
        for k in range(2):
            mu = q[k] @ frame.xi[:1] + M[k]
            _, rho_mu = dual_solve(spec, mu)
            np.testing.assert_allclose(rho_mu, rho[k], atol=1e-9)
            assert np.sum(rho_mu) == pytest.approx(varrho[k], abs=1e-10)

    @pytest.mark.parametrize("vbar", VBARS)
    @settings(max_examples=1000, deadline=None)
    @given(fraction=st.floats(min_value=0.02, max_value=0.98),
           free=st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=2, max_size=2),
           zeta=st.floats(min_value=-2.0, max_value=2.0))
    def test_roundtrip_from_coordinates(self, vbar, fraction, free, zeta):
        spec, frame = FRAMES[vbar]
        low, high = spec.interval
        coords = ReducedCoords(low + (high - low) * fraction, free[:frame.n_free], zeta)
        back = from_physical(spec, frame, to_physical(spec, frame, coords))
        assert back.varrho == pytest.approx(coords.varrho, abs=1e-9)
        assert back.zeta == pytest.approx(coords.zeta, abs=1e-9)
        np.testing.assert_allclose(back.q, coords.q, atol=1e-9)

    @pytest.mark.parametrize("vbar", VBARS)
    @settings(max_examples=1000, deadline=None)
    @given(mu=st.lists(st.floats(min_value=-5.0, max_value=5.0), min_size=4, max_size=4))
    def test_roundtrip_from_physical(self, vbar, mu):
        spec, frame = FRAMES[vbar]
        mu = np.array(mu[:spec.n_species])
        p, rho = dual_solve(spec, mu)
        state = ChemicalState(mu, float(p), rho)
        back = to_physical(spec, frame, from_physical(spec, frame, state))
        np.testing.assert_allclose(back.mu, state.mu, atol=1e-9)
        assert back.p == pytest.approx(state.p, abs=1e-9)
        np.testing.assert_allclose(back.rho, state.rho, atol=1e-9)

    def test_binary_implicit_M(self, binary):
        spec, frame = binary
        assert float(implicit_M(spec, frame, np.array([0.75]))[0]) == pytest.approx(math.log(4.0 / 3.0), abs=1e-10)
        assert float(pressure_P(spec, frame, 0.75)) == pytest.approx(math.log(2.0), abs=1e-10)

    def test_pressure_jacobian_against_differences(self, ternary):
        spec, frame = ternary
        varrho, q, h = np.array([0.6]), np.array([[0.3]]), 1e-6
        evaluation = evaluate_coordinates(spec, frame, varrho, q)
        plus = evaluate_coordinates(spec, frame, varrho + h, q).P
        minus = evaluate_coordinates(spec, frame, varrho - h, q).P
        assert float(evaluation.P_varrho[0]) == pytest.approx(float((plus - minus)[0] / (2 * h)), rel=1e-6)
        plus = evaluate_coordinates(spec, frame, varrho, q + h).P
        minus = evaluate_coordinates(spec, frame, varrho, q - h).P
        assert float(evaluation.P_q[0, 0]) == pytest.approx(float((plus - minus)[0] / (2 * h)), rel=1e-5, abs=1e-8)

    def test_R_jacobian_symmetric_positive(self, quaternary, rng):
        spec, frame = quaternary
        varrho = rng.uniform(0.3, 0.9, size=30)
        q = rng.uniform(-1.0, 1.0, size=(30, 2))
        R_q = evaluate_coordinates(spec, frame, varrho, q).R_q
        np.testing.assert_allclose(R_q, np.swapaxes(R_q, -1, -2), atol=1e-12)
        assert np.min(np.linalg.eigvalsh(R_q)) > 0

    @pytest.mark.parametrize("varrho", [0.5, 1.0, 0.2, 1.3, math.nan])
    def test_outside_interval(self, binary, varrho):
        spec, frame = binary
        with pytest.raises(errs.ThresholdViolation):
            evaluate_coordinates(spec, frame, np.array([varrho]))

    def test_threshold_tolerance(self, binary, monkeypatch):
        spec, frame = binary
        with pytest.raises(errs.ThresholdViolation):
            evaluate_coordinates(spec, frame, np.array([0.75, 1.0 - 1e-13]))
        with pytest.raises(errs.ThresholdViolation):
            evaluate_coordinates(spec, frame, np.array([0.5 + 1e-13]))

        monkeypatch.setenv("THRESHOLD_TOL", "1e-2")
        with pytest.raises(errs.ThresholdViolation):
            evaluate_coordinates(spec, frame, np.array([0.995]))
        assert evaluate_coordinates(spec, frame, np.array([0.98])).M.shape == (1,)

    def test_package_exports(self):
        assert mixflowpy.thermo.evaluate_coordinates is evaluate_coordinates
