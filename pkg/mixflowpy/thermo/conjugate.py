"""
Convex conjugate f(μ) = max{μ·ρ − k(ρ) : ρ·V̄ = 1} of the free energy restricted to the volume
constraint surface, its gradient ∇f(μ) = ρ and its Hessian.
"""
import logging
import typing

import numpy as np

from .free_energy import check_density
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('dual_solve', 'conjugate_f', 'gradient_f', 'hessian_f', 'barycenter', 'gibbs_duhem_residual')

_ARMIJO = 1e-4
_MAX_HALVINGS = 60


def barycenter(spec) -> np.ndarray:
    """ ρ⁰ᵢ = 1/(N·V̄ᵢ), always on the constraint surface """
    return 1.0 / (spec.n_species * spec.vbar)


def _residual(spec, mu, rho, p):
    stationarity = mu - spec.vbar * p[:, None] - spec.free_energy.gradient(rho)
    constraint = rho @ spec.vbar - 1.0
    return np.concatenate([stationarity, constraint[:, None]], axis=1)


def _newton_matrix(spec, rho):
    b, n = rho.shape
    jac = np.zeros((b, n + 1, n + 1))
    jac[:, :n, :n] = -spec.free_energy.hessian(rho)
    jac[:, :n, n] = -spec.vbar
    jac[:, n, :n] = spec.vbar
    return jac


def dual_solve(spec,
               mu,
               *,
               rho_guess: typing.Optional[np.ndarray] = None,
               p_guess: typing.Optional[np.ndarray] = None) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Solves μ = V̄p + ∇k(ρ), ρ·V̄ = 1 for (p, ρ) by damped Newton

    The step is halved until ρ stays strictly positive and the squared residual decreases by the
    Armijo factor. Stacked potentials of shape (..., N) are solved together.

    :param spec: MixtureSpec
    :param mu: Chemical potentials (..., N)
    :param rho_guess: Optional warm start on the constraint surface, defaults to the barycenter
    :param p_guess: Optional warm start for the pressure, defaults to 0
    :return: (p (...), rho (..., N)) with p = f(μ) and rho = ∇f(μ)
    :raises NewtonDivergence: If a state does not reach NEWTON_ACCEPT_TOL in NEWTON_MAX_ITER iterations
    """
    mu = np.asarray(mu, dtype=float)
    n = spec.n_species
    if mu.shape[-1] != n:
        raise ValueError(f"Expected {n} chemical potentials, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)):
        raise errs.NewtonDivergence("Chemical potentials must be finite")

    batch_shape = mu.shape[:-1]
    mu = mu.reshape(-1, n)
    size = mu.shape[0]

    if rho_guess is None:
        rho = np.tile(barycenter(spec), (size, 1))
    else:
        rho = np.array(np.broadcast_to(rho_guess, (size, n)), dtype=float)
        if np.any(rho <= 0):
            rho = np.tile(barycenter(spec), (size, 1))
    p = np.zeros(size) if p_guess is None else np.array(np.broadcast_to(p_guess, (size,)), dtype=float)

    tol = settings.get_float("NEWTON_TOL")
    accept_tol = settings.get_float("NEWTON_ACCEPT_TOL")
    max_iter = settings.get_int("NEWTON_MAX_ITER")

    residual = _residual(spec, mu, rho, p)
    norm = np.max(np.abs(residual), axis=1)
    stalled = np.zeros(size, dtype=bool)

    iteration = 0
    while iteration < max_iter:
        active = (norm > tol) & ~stalled
        if not np.any(active):
            break
        iteration += 1

        idx = np.flatnonzero(active)
        jac = _newton_matrix(spec, rho[idx])
        try:
            step = np.linalg.solve(jac, -residual[idx][..., None])[..., 0]
        except np.linalg.LinAlgError as e:
            logger.error(f"[THERMO] Singular Newton matrix in the dual solve: {e}")
            raise errs.NewtonDivergence(f"Singular Newton matrix in the dual solve: {e}") from e

        merit = np.sum(residual[idx] ** 2, axis=1)
        t = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        new_rho = rho[idx].copy()
        new_p = p[idx].copy()
        new_res = residual[idx].copy()
        for _ in range(_MAX_HALVINGS):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            trial_rho = rho[idx[sub]] + t[sub, None] * step[sub, :n]
            trial_p = p[idx[sub]] + t[sub] * step[sub, n]
            positive = np.all(trial_rho > 0, axis=1)

            safe_rho = np.where(positive[:, None], trial_rho, rho[idx[sub]])
            trial_res = _residual(spec, mu[idx[sub]], safe_rho, trial_p)
            decrease = np.sum(trial_res ** 2, axis=1) <= (1.0 - _ARMIJO * t[sub]) * merit[sub]
            ok = positive & decrease

            done = sub[ok]
            new_rho[done] = trial_rho[ok]
            new_p[done] = trial_p[ok]
            new_res[done] = trial_res[ok]
            pending[done] = False
            t[sub[~ok]] *= 0.5

        # States without an acceptable step keep their iterate and are judged at the end
        stalled[idx[pending]] = True
        rho[idx] = new_rho
        p[idx] = new_p
        residual[idx] = new_res
        norm[idx] = np.max(np.abs(new_res), axis=1)

    worst = float(np.max(norm)) if norm.size else 0.0
    if worst > accept_tol:
        logger.error(f"[THERMO] Dual solve did not converge after {iteration} iterations, residual={worst:.3e}")
        raise errs.NewtonDivergence(f"Dual solve residual {worst:.3e} above {accept_tol:.0e} "
                                    f"after {iteration} iterations")
    logger.debug(f"[THERMO] Dual solve converged in {iteration} iterations, residual={worst:.3e}")

    check_density(spec, rho)
    return p.reshape(batch_shape), rho.reshape(batch_shape + (n,))


def conjugate_f(spec, mu) -> np.ndarray:
    """ f(μ), the pressure as function of the chemical potentials """
    p, _ = dual_solve(spec, mu)
    return p


def gradient_f(spec, mu) -> np.ndarray:
    """ ∇f(μ), the partial densities on the constraint surface """
    _, rho = dual_solve(spec, mu)
    return rho


def hessian_f(spec, mu, *, rho: typing.Optional[np.ndarray] = None) -> np.ndarray:
    """
    D²f(μ) from the implicit function theorem applied to the stationarity system

    With W an orthonormal basis of {V̄}⊥, D²f = W (Wᵀ D²k(ρ) W)⁻¹ Wᵀ, which is symmetric positive
    semi-definite with kernel span{V̄}.

    :param spec: MixtureSpec
    :param mu: Chemical potentials (..., N)
    :param rho: Optional ∇f(μ) if already known
    :return: Hessians of shape (..., N, N)
    """
    if rho is None:
        _, rho = dual_solve(spec, mu)
    rho = np.asarray(rho, dtype=float)
    basis = spec.tangent_basis
    hess_k = spec.free_energy.hessian(rho)
    reduced = np.swapaxes(basis, -1, -2) @ hess_k @ basis
    rhs = np.broadcast_to(basis.T, reduced.shape[:-2] + basis.T.shape)
    hess = basis @ np.linalg.solve(reduced, rhs)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def gibbs_duhem_residual(spec, mu, dmu) -> np.ndarray:
    """
    |f(μ + dμ) − f(μ − dμ) − 2ρ·dμ|, of third order in |dμ| since dp = ρ·dμ on the constraint surface
    """
    mu = np.asarray(mu, dtype=float)
    dmu = np.asarray(dmu, dtype=float)
    _, rho = dual_solve(spec, mu)
    p_plus, _ = dual_solve(spec, mu + dmu, rho_guess=rho)
    p_minus, _ = dual_solve(spec, mu - dmu, rho_guess=rho)
    return np.abs(p_plus - p_minus - 2.0 * np.sum(rho * dmu, axis=-1))
