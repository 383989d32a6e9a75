"""
Change of variables between the physical state (ρ, μ, p) and the coordinates (ϱ, q, ζ)

μ = Σ qℓ ξℓ + ζ V̄ + 𝓜(ϱ, q) 1ᴺ, where 𝓜 is fixed implicitly by 1ᴺ·∇f(Σ qℓ ξℓ + 𝓜 1ᴺ) = ϱ.
Then ρ = ℛ(ϱ, q) = ∇f(Σ qℓ ξℓ + 𝓜 1ᴺ) and p = P(ϱ, q) + ζ with P = f(Σ qℓ ξℓ + 𝓜 1ᴺ).
"""
import logging
import typing

import numpy as np

from .basis import decompose_vector
from .conjugate import dual_solve, hessian_f
from ..types.coordinates import ReducedCoords, ChemicalState
from ..types.mixflow_object import MixflowObject
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('CoordinateEvaluation', 'evaluate_coordinates', 'implicit_M', 'map_R', 'pressure_P',
           'state_jacobians', 'to_physical', 'from_physical', 'check_interval')


class CoordinateEvaluation(MixflowObject):
    """
    Everything the solver needs at a set of states (ϱ, q), evaluated in one pass

    Arrays carry the batch shape of the inputs in front.
    """

    def __init__(self, **kwargs):
        self.M = kwargs['M']
        self.rho = kwargs['rho']
        self.P = kwargs['P']
        self.R = kwargs['R']
        self.R_q = kwargs['R_q']
        self.R_varrho = kwargs['R_varrho']
        self.P_q = kwargs['P_q']
        self.P_varrho = kwargs['P_varrho']
        self.hessian = kwargs['hessian']

    def __repr__(self) -> str:
        return f"<CoordinateEvaluation shape={np.shape(self.M)}>"

    def take(self, index) -> 'CoordinateEvaluation':
        """ Returns the evaluation restricted to the passed batch index """
        return CoordinateEvaluation(**{key: value[index] for key, value in self.__dict__.items()})


def check_interval(spec, varrho) -> np.ndarray:
    """
    Rejects ϱ outside of (ϱ_min, ϱ_max) and ϱ closer than THRESHOLD_TOL (relative) to either threshold,
    where 𝓜 is unbounded and the Newton solve loses all accuracy

    :raises ThresholdViolation: If any ϱ fails the test
    """
    varrho = np.asarray(varrho, dtype=float)
    low, high = spec.interval
    tol = settings.get_float("THRESHOLD_TOL")
    outside = ~((varrho > low * (1.0 + tol)) & (varrho < high * (1.0 - tol)))
    if np.any(outside):
        bad = varrho[outside].reshape(-1)[0]
        logger.error(f"[THERMO] Total mass density {bad} outside of ({low}, {high})")
        raise errs.ThresholdViolation(f"Total mass density {bad} outside of the admissible interval ({low}, {high})")
    return varrho


def _solve_M(spec, varrho, nu, guess_M, guess_rho, guess_p):
    """ Scalar Newton on F(𝓜) = ϱ − 1·∇f(ν + 𝓜1), with bisection inside the sign-change bracket """
    size, n = nu.shape
    tol = settings.get_float("IMPLICIT_M_TOL")
    accept_tol = settings.get_float("NEWTON_ACCEPT_TOL")
    max_iter = settings.get_int("NEWTON_MAX_ITER")
    cap = 2.0 * spec.theta_kb / float(np.min(spec.molar_mass))

    M = np.zeros(size) if guess_M is None else np.array(np.broadcast_to(guess_M, (size,)), dtype=float)
    rho = None if guess_rho is None else np.array(np.broadcast_to(guess_rho, (size, n)), dtype=float)
    p = None if guess_p is None else np.array(np.broadcast_to(guess_p, (size,)), dtype=float)
    lo = np.full(size, -np.inf)
    hi = np.full(size, np.inf)

    p, rho = dual_solve(spec, nu + M[:, None], rho_guess=rho, p_guess=p)
    residual = varrho - np.sum(rho, axis=1)
    stalled = np.zeros(size, dtype=bool)

    for iteration in range(max_iter):
        active = (np.abs(residual) > tol) & ~stalled
        if not np.any(active):
            break
        idx = np.flatnonzero(active)

        # F is decreasing in 𝓜
        lo[idx] = np.where(residual[idx] > 0, np.maximum(lo[idx], M[idx]), lo[idx])
        hi[idx] = np.where(residual[idx] < 0, np.minimum(hi[idx], M[idx]), hi[idx])

        hess = hessian_f(spec, None, rho=rho[idx])
        slope = np.sum(hess, axis=(1, 2))
        with np.errstate(divide='ignore', invalid='ignore'):
            step = residual[idx] / slope
        step = np.where(np.isfinite(step), step, np.sign(residual[idx]) * cap)
        step = np.clip(step, -cap, cap)
        candidate = M[idx] + step

        bracketed = np.isfinite(lo[idx]) & np.isfinite(hi[idx])
        outside = bracketed & ~((candidate > lo[idx]) & (candidate < hi[idx]))
        candidate = np.where(outside, 0.5 * (lo[idx] + hi[idx]), candidate)

        M[idx] = candidate
        previous = np.abs(residual[idx])
        p[idx], rho[idx] = dual_solve(spec, nu[idx] + candidate[:, None], rho_guess=rho[idx], p_guess=p[idx])
        residual[idx] = varrho[idx] - np.sum(rho[idx], axis=1)
        # Round-off floor of the inner solve reached
        stalled[idx] = (np.abs(residual[idx]) >= 0.5 * previous) & (np.abs(residual[idx]) <= accept_tol)

    worst = float(np.max(np.abs(residual))) if residual.size else 0.0
    if worst > accept_tol:
        logger.error(f"[THERMO] Implicit function 𝓜 did not converge, residual={worst:.3e}")
        raise errs.NewtonDivergence(f"Implicit function 𝓜 residual {worst:.3e} above {accept_tol:.0e}")
    return M, p, rho


def evaluate_coordinates(spec,
                         frame,
                         varrho,
                         q=None,
                         guess: typing.Optional[CoordinateEvaluation] = None) -> CoordinateEvaluation:
    """
    Evaluates 𝓜, ℛ, P and their Jacobians at stacked states (ϱ, q)

    With H = D²f(Σ qℓ ξℓ + 𝓜1ᴺ) and c = H1ᴺ·1ᴺ:
    R_q = ΠᵀHΠ − (ΠᵀH1ᴺ)⊗(ΠᵀH1ᴺ)/c, R_ϱ = ΠᵀH1ᴺ/c, P_ϱ = ϱ/c and P_q = R − ϱΠᵀH1ᴺ/c.

    :param spec: MixtureSpec
    :param frame: Frame built from spec.vbar
    :param varrho: Total mass densities, shape (...)
    :param q: Coordinates of shape (..., N−2), may be omitted for binary mixtures
    :param guess: Previous evaluation at the same batch shape used as warm start
    :return: The CoordinateEvaluation
    """
    varrho = check_interval(spec, varrho)
    batch_shape = varrho.shape
    n, m = spec.n_species, frame.n_free
    if q is None:
        q = np.zeros(batch_shape + (m,))
    q = np.asarray(q, dtype=float).reshape(batch_shape + (m,))

    flat_varrho = varrho.reshape(-1)
    flat_q = q.reshape(flat_varrho.size, m)
    nu = flat_q @ frame.xi[:m] if m else np.zeros((flat_varrho.size, n))

    if guess is not None and np.shape(guess.M) == batch_shape:
        M, p, rho = _solve_M(spec, flat_varrho, nu, np.reshape(guess.M, -1),
                             np.reshape(guess.rho, (-1, n)), np.reshape(guess.P, -1))
    else:
        M, p, rho = _solve_M(spec, flat_varrho, nu, None, None, None)

    hess = hessian_f(spec, None, rho=rho)
    h_ones = np.sum(hess, axis=2)
    c = np.sum(h_ones, axis=1)
    pi = frame.pi_matrix
    pt_h1 = h_ones @ pi
    R = rho @ pi
    R_q = pi.T @ hess @ pi - pt_h1[:, :, None] * pt_h1[:, None, :] / c[:, None, None]
    R_varrho = pt_h1 / c[:, None]
    P_varrho = flat_varrho / c
    P_q = R - flat_varrho[:, None] * pt_h1 / c[:, None]

    return CoordinateEvaluation(
        M=M.reshape(batch_shape),
        rho=rho.reshape(batch_shape + (n,)),
        P=p.reshape(batch_shape),
        R=R.reshape(batch_shape + (m,)),
        R_q=R_q.reshape(batch_shape + (m, m)),
        R_varrho=R_varrho.reshape(batch_shape + (m,)),
        P_q=P_q.reshape(batch_shape + (m,)),
        P_varrho=P_varrho.reshape(batch_shape),
        hessian=hess.reshape(batch_shape + (n, n))
    )


def implicit_M(spec, frame, varrho, q=None) -> np.ndarray:
    """ 𝓜(ϱ, q) with |ϱ − 1ᴺ·∇f(Σ qℓ ξℓ + 𝓜1ᴺ)| ≤ 1e−10 """
    return evaluate_coordinates(spec, frame, varrho, q).M


def map_R(spec, frame, varrho, q=None) -> typing.Tuple[np.ndarray, np.ndarray]:
    """ (ρ, R) with ρ = ℛ(ϱ, q) on the constraint surface and R = Πᵀρ """
    evaluation = evaluate_coordinates(spec, frame, varrho, q)
    return evaluation.rho, evaluation.R


def pressure_P(spec, frame, varrho, q=None) -> np.ndarray:
    """ ζ-free part P(ϱ, q) of the pressure, p = P + ζ """
    return evaluate_coordinates(spec, frame, varrho, q).P


def state_jacobians(spec, frame, varrho, q=None) -> typing.Dict[str, np.ndarray]:
    """ R_q, R_varrho, P_q and P_varrho at (ϱ, q) """
    evaluation = evaluate_coordinates(spec, frame, varrho, q)
    return {
        'R_q': evaluation.R_q,
        'R_varrho': evaluation.R_varrho,
        'P_q': evaluation.P_q,
        'P_varrho': evaluation.P_varrho
    }


def to_physical(spec, frame, coords: ReducedCoords) -> ChemicalState:
    """
    Maps (ϱ, q, ζ) to (μ, p, ρ) with μ = Σ qℓ ξℓ + ζ V̄ + 𝓜 1ᴺ and p = P + ζ
    """
    evaluation = evaluate_coordinates(spec, frame, coords.varrho, coords.q)
    nu = coords.q @ frame.xi[:frame.n_free] if frame.n_free else np.zeros(spec.n_species)
    mu = nu + coords.zeta * spec.vbar + float(evaluation.M)
    return ChemicalState(mu=mu, p=float(evaluation.P) + coords.zeta, rho=evaluation.rho)


def from_physical(spec, frame, state: ChemicalState) -> ReducedCoords:
    """
    Maps (μ, p, ρ) to (ϱ, q, ζ); q and ζ are the dual-basis coordinates of μ

    :raises ConstraintViolation: If |ρ·V̄ − 1| > 1e−8
    :raises ThresholdViolation: If Σρᵢ lies outside of the admissible interval
    """
    rho = np.asarray(state.rho, dtype=float)
    deviation = abs(float(rho @ spec.vbar) - 1.0)
    if deviation > 1e-8:
        logger.error(f"[THERMO] Volume constraint violated by {deviation:.3e}")
        raise errs.ConstraintViolation(f"Volume constraint rho·V̄ = 1 violated by {deviation:.3e}")
    varrho = float(np.sum(rho))
    check_interval(spec, varrho)
    q, zeta, _ = decompose_vector(frame, state.mu)
    return ReducedCoords(varrho=varrho, q=q, zeta=float(zeta))
