import numpy as np
import pytest

from mixflowpy import exception as errs
from mixflowpy.solver import (face_average, face_gradient, divergence, central_gradient, face_velocity,
                              velocity_gradient, step_continuity, check_guard_band, solve_zeta,
                              solve_momentum, solve_q_zeta, isochoric_flux_residual, zeta_face_source)
from mixflowpy.thermo import evaluate_coordinates
from mixflowpy.transport import QuasiDiagonalClosure, onsager_M, reduce_onsager
from mixflowpy.types import Grid1D


def _order(errors, sizes):
    return float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])


class TestStencils:
    def test_divergence_telescopes(self, rng):
        flux = rng.standard_normal(15)
        assert abs(np.sum(divergence(flux, 0.1)) * 0.1) <= 1e-13

    def test_linear_field(self):
        grid = Grid1D(10)
        u = 3.0 * grid.x + 1.0
        np.testing.assert_allclose(face_gradient(u, grid.dx), 3.0)
        np.testing.assert_allclose(central_gradient(u, grid.dx)[1:-1], 3.0)
        np.testing.assert_allclose(face_average(u), 3.0 * grid.faces[1:-1] + 1.0)

    def test_velocity_vanishes_on_walls(self, rng):
        v = rng.standard_normal(12)
        faces = face_velocity(v)
        assert faces.shape == (13,)
        assert faces[0] == 0.0 and faces[-1] == 0.0
        assert np.sum(velocity_gradient(v, 0.1)) == pytest.approx(0.0, abs=1e-12)

    def test_vector_fields(self, rng):
        q = rng.standard_normal((9, 2))
        assert face_gradient(q, 0.5).shape == (8, 2)
        assert divergence(face_gradient(q, 0.5), 0.5).shape == (9, 2)


class TestContinuity:
    def test_mass_conservation(self, rng):
        grid = Grid1D(64)
        varrho = 0.75 + 0.1 * rng.uniform(-1.0, 1.0, size=64)
        v = rng.uniform(-1.0, 1.0, size=64)
        dt = 0.5 * grid.dx
        updated = step_continuity(varrho, v, dt, grid.dx)
        assert abs(np.sum(updated) - np.sum(varrho)) * grid.dx <= 1e-14

    def test_zero_velocity(self, rng):
        varrho = rng.uniform(0.6, 0.9, size=16)
        np.testing.assert_array_equal(step_continuity(varrho, np.zeros(16), 0.01, 1.0 / 16), varrho)

    def test_upwind_direction(self):
        dx, dt = 0.1, 0.01
        varrho = np.linspace(0.6, 0.9, 10)
        v = np.ones(10)
        updated = step_continuity(varrho, v, dt, dx)
        # Positive face velocities take the left cell on every interior face
        expected = varrho[5] - dt / dx * (varrho[5] - varrho[4])
        assert updated[5] == pytest.approx(expected)
        assert updated[0] == pytest.approx(varrho[0] - dt / dx * varrho[0])

    def test_upwind_first_order(self):
        """ v = c sin(πx) moves ϱ along tan(πx/2) = tan(πx₀/2)e^{cπt} """
        c, t_final = 0.5, 0.1
        sizes, errors = [], []
        for n in (64, 128, 256, 512):
            grid = Grid1D(n)
            steps = n // 8
            dt = t_final / steps
            varrho = 0.75 + 0.05 * np.cos(np.pi * grid.x)
            v = c * np.sin(np.pi * grid.x)
            for _ in range(steps):
                varrho = step_continuity(varrho, v, dt, grid.dx)

            x0 = 2.0 / np.pi * np.arctan(np.tan(np.pi * grid.x / 2.0) * np.exp(-c * np.pi * t_final))
            stretch = np.exp(-c * np.pi * t_final) * (np.cos(np.pi * x0 / 2.0) / np.cos(np.pi * grid.x / 2.0)) ** 2
            exact = (0.75 + 0.05 * np.cos(np.pi * x0)) * stretch
            sizes.append(grid.dx)
            errors.append(np.sum(np.abs(varrho - exact)) * grid.dx)
        assert 0.7 <= _order(errors, sizes) <= 1.3

    def test_cfl_violation(self):
        with pytest.raises(errs.CflViolation):
            step_continuity(np.full(10, 0.75), np.full(10, 10.0), 0.1, 0.1)

    def test_guard_band(self, binary):
        spec, _ = binary
        varrho = np.full(10, 0.75)
        varrho[3] = 1.0 - 1e-11
        x = Grid1D(10).x
        with pytest.raises(errs.ThresholdBreach) as info:
            check_guard_band(varrho, spec, x=x, time=0.5)
        assert info.value.cell == 3
        assert info.value.bound == 'upper'
        assert info.value.x == pytest.approx(x[3])
        assert info.value.time == 0.5

    def test_guard_band_lower(self, binary):
        spec, _ = binary
        varrho = np.full(10, 0.75)
        varrho[7] = 0.4
        with pytest.raises(errs.ThresholdBreach) as info:
            check_guard_band(varrho, spec)
        assert info.value.bound == 'lower'
        assert info.value.cell == 7


class TestZetaBlock:
    def test_zero_mean(self, rng):
        d = rng.uniform(0.5, 2.0, size=32)
        zeta = solve_zeta(d, rng.standard_normal(31), 1.0 / 32)
        assert abs(np.mean(zeta)) <= 1e-12

    def test_face_flux_matches_source(self, rng):
        dx = 1.0 / 40
        d = rng.uniform(0.5, 2.0, size=40)
        source = rng.standard_normal(39)
        zeta = solve_zeta(d, source, dx)
        np.testing.assert_allclose(face_average(d) * face_gradient(zeta, dx), source, atol=1e-9)

    def test_manufactured_solution_order(self):
        """ ζ = cos(πx) with d = 1 + x converges with second order """
        sizes, errors = [], []
        for n in (32, 64, 128):
            grid = Grid1D(n)
            d = 1.0 + grid.x
            faces = grid.faces[1:-1]
            source = face_average(d) * (-np.pi * np.sin(np.pi * faces))
            zeta = solve_zeta(d, source, grid.dx)
            exact = np.cos(np.pi * grid.x)
            exact -= np.mean(exact)
            sizes.append(grid.dx)
            errors.append(np.max(np.abs(zeta - exact)))
        assert 1.7 <= _order(errors, sizes) <= 2.3

    def test_nonpositive_coefficient(self):
        d = np.ones(10)
        d[4] = 0.0
        with pytest.raises(errs.DegenerateClosure):
            solve_zeta(d, np.zeros(9), 0.1)


class TestMomentumBlock:
    def test_against_dense_solve(self, rng):
        n, dt, dx, eta = 20, 1e-2, 0.05, 0.7
        varrho = rng.uniform(0.6, 0.9, size=n)
        zeta = rng.standard_normal(n)
        f = rng.standard_normal(n)
        v_n = rng.standard_normal(n)
        v = solve_momentum(varrho, zeta, f, v_n, dt, dx, eta)

        coef = eta / dx ** 2
        matrix = np.diag(varrho / dt + 2.0 * coef) - coef * (np.eye(n, k=1) + np.eye(n, k=-1))
        matrix[0, 0] += coef
        matrix[-1, -1] += coef
        zeta_faces = np.pad(face_gradient(zeta, dx), (1, 1))
        rhs = varrho * v_n / dt + f - 0.5 * (zeta_faces[1:] + zeta_faces[:-1])
        np.testing.assert_allclose(v, np.linalg.solve(matrix, rhs), rtol=1e-10, atol=1e-12)

    def test_manufactured_solution_order(self):
        """ Steady −ηv_xx = f with v = sin(πx) """
        sizes, errors = [], []
        eta = 0.5
        for n in (32, 64, 128):
            grid = Grid1D(n)
            exact = np.sin(np.pi * grid.x)
            f = eta * np.pi ** 2 * exact
            v = solve_momentum(np.ones(n), np.zeros(n), f, np.zeros(n), 1e12, grid.dx, eta)
            sizes.append(grid.dx)
            errors.append(np.max(np.abs(v - exact)))
        assert 1.7 <= _order(errors, sizes) <= 2.3

    def test_sine_mode_decay(self):
        """ sin(πx) is a discrete eigenmode of the wall condition, it decays like exp(−ηπ²t/ϱ) """
        n, dt, eta, varrho = 128, 1e-4, 0.5, 0.75
        grid = Grid1D(n)
        mode = np.sin(np.pi * grid.x)
        eigenvalue = 4.0 / grid.dx ** 2 * np.sin(np.pi * grid.dx / 2.0) ** 2

        v = solve_momentum(np.full(n, varrho), np.zeros(n), np.zeros(n), mode, dt, grid.dx, eta)
        np.testing.assert_allclose(v, mode / (1.0 + eta * eigenvalue * dt / varrho), rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(v, mode * np.exp(-eta * np.pi ** 2 * dt / varrho), rtol=1e-6, atol=1e-14)

        for _ in range(99):
            v = solve_momentum(np.full(n, varrho), np.zeros(n), np.zeros(n), v, dt, grid.dx, eta)
        np.testing.assert_allclose(v, mode * np.exp(-eta * np.pi ** 2 * 100 * dt / varrho), rtol=1e-4, atol=1e-14)

    def test_viscosity_must_be_positive(self):
        with pytest.raises(ValueError):
            solve_momentum(np.ones(10), np.zeros(10), np.zeros(10), np.zeros(10), 0.1, 0.1, 0.0)


class TestCoupledBlock:
    def test_ternary_block_closes_the_volume_flux(self, ternary, rng):
        spec, frame = ternary
        grid = Grid1D(24)
        varrho = 0.6 + 0.1 * np.cos(np.pi * grid.x)
        q_n = 0.3 * np.cos(np.pi * grid.x)[:, None]
        evaluation = evaluate_coordinates(spec, frame, varrho, q_n)
        reduced = reduce_onsager(frame, onsager_M(QuasiDiagonalClosure(), evaluation.rho))
        v_star = 0.2 * np.sin(np.pi * grid.x)
        g = 0.1 * rng.standard_normal((24, 1))
        h = 0.1 * rng.standard_normal(24)

        q, zeta = solve_q_zeta(evaluation.R_q, reduced.m_tilde, reduced.a_vec, reduced.d_scal,
                               g, h, v_star, q_n, 1e-3, grid.dx)
        assert q.shape == (24, 1)
        assert abs(np.mean(zeta)) <= 1e-12
        residual = isochoric_flux_residual(reduced.d_scal, reduced.a_vec, q, zeta, v_star, h, grid.dx)
        assert np.max(np.abs(residual)) <= 1e-9

    def test_manufactured_solution_order(self):
        """ q = cos(πx) and v* = β sin(πx) with constant coefficients, both q and ζ converge with second order """
        r, m_t, a, d, beta, dt = 2.0, 1.5, 0.5, 1.0, 0.3, 0.1
        k = m_t - a * a / d
        sizes, q_errors, zeta_errors = [], [], []
        for n in (32, 64, 128):
            grid = Grid1D(n)
            cos = np.cos(np.pi * grid.x)
            g = ((r / dt + k * np.pi ** 2) - a / d * beta * np.pi) * cos
            q, zeta = solve_q_zeta(np.full((n, 1, 1), r), np.full((n, 1, 1), m_t), np.full((n, 1), a), np.full(n, d),
                                   g[:, None], np.zeros(n), beta * np.sin(np.pi * grid.x), np.zeros((n, 1)),
                                   dt, grid.dx)
            exact_zeta = -(beta + a * np.pi) * cos / (np.pi * d)
            exact_zeta -= np.mean(exact_zeta)
            sizes.append(grid.dx)
            q_errors.append(np.max(np.abs(q[:, 0] - cos)))
            zeta_errors.append(np.max(np.abs(zeta - exact_zeta)))
        assert 1.8 <= _order(q_errors, sizes) <= 2.3
        assert 1.8 <= _order(zeta_errors, sizes) <= 2.3

    def test_binary_block_keeps_no_q(self, binary):
        spec, frame = binary
        grid = Grid1D(16)
        varrho = np.full(16, 0.75)
        evaluation = evaluate_coordinates(spec, frame, varrho)
        reduced = reduce_onsager(frame, onsager_M(QuasiDiagonalClosure(), evaluation.rho))
        q, zeta = solve_q_zeta(evaluation.R_q, reduced.m_tilde, reduced.a_vec, reduced.d_scal,
                               np.zeros((16, 0)), np.zeros(16), np.zeros(16), np.zeros((16, 0)), 1e-3, grid.dx)
        assert q.shape == (16, 0)
        np.testing.assert_allclose(zeta, 0.0, atol=1e-14)

    def test_face_source_without_q(self):
        source = zeta_face_source(np.zeros((5, 0)), np.zeros((5, 0)), np.ones(5), np.ones(5), 0.2)
        np.testing.assert_allclose(source, 2.0)
