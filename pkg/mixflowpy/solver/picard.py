"""
Picard iteration of one time step

Every sweep freezes (q*, v*), moves ϱ with v*, evaluates the coefficients at (ϱ, q*), solves the
(q, ζ) block and then the momentum equation. The sweep map is iterated to a fixed point.
"""
import logging
import math
import typing

import numpy as np

from .blocks import solve_q_zeta, solve_momentum, isochoric_flux_residual
from .continuity import step_continuity
from .forcing import ForceField, ReactionModel, decompose_force
from .stencils import face_average, face_gradient, divergence, central_gradient, velocity_gradient
from ..thermo.coordinates import evaluate_coordinates, CoordinateEvaluation
from ..transport.closure import ClosureModel, onsager_M, reduce_onsager, ReducedCoefficients
from ..types.mixflow_object import MixflowObject
from ..types.records import PicardReport
from ..types.state import DiscreteState, Grid1D
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('ProblemSetup', 'SweepCoefficients', 'assemble_rhs', 'picard_advance', 'contraction_threshold')


class ProblemSetup(MixflowObject):
    """
    Everything a time step needs besides the state

    Holds the warm start of the coordinate evaluation, so one setup serves one run at a time.
    """

    def __init__(self,
                 spec,
                 frame,
                 closure: ClosureModel,
                 grid: Grid1D,
                 viscosity: float = 1.0,
                 forces: typing.Optional[ForceField] = None,
                 reactions: typing.Optional[ReactionModel] = None,
                 picard_tol: typing.Optional[float] = None,
                 max_sweeps: typing.Optional[int] = None,
                 divergence_sweeps: typing.Optional[int] = None):
        if not viscosity > 0:
            raise ValueError("The viscosity must be positive")
        self.spec = spec
        self.frame = frame
        self.closure = closure
        self.grid = grid
        self.viscosity = float(viscosity)
        self.forces = forces if forces is not None else ForceField([], spec.n_species)
        self.reactions = reactions if reactions is not None else ReactionModel('zero')
        self.picard_tol = settings.get_float("PICARD_TOL") if picard_tol is None else float(picard_tol)
        self.max_sweeps = settings.get_int("PICARD_MAX_SWEEPS") if max_sweeps is None else int(max_sweeps)
        self.divergence_sweeps = settings.get_int("PICARD_DIVERGENCE_SWEEPS") \
            if divergence_sweeps is None else int(divergence_sweeps)
        self.cache: typing.Optional[CoordinateEvaluation] = None

    def __repr__(self) -> str:
        info = [
            ('n_species', self.spec.n_species),
            ('n_cells', self.grid.n_cells),
            ('closure', self.closure.kind),
            ('viscosity', self.viscosity),
            ('picard_tol', self.picard_tol)
        ]
        return '<ProblemSetup {}>'.format(' '.join('%s=%s' % t for t in info))

    def coefficients(self, varrho, q) -> 'SweepCoefficients':
        """ Coordinate maps and reduced mobilities at (ϱ, q), warm-started from the previous call """
        evaluation = evaluate_coordinates(self.spec, self.frame, varrho, q, guess=self.cache)
        self.cache = evaluation
        reduced = reduce_onsager(self.frame, onsager_M(self.closure, evaluation.rho))
        return SweepCoefficients(evaluation, reduced)

    def force_parts(self, t: float):
        """ (b̃, b̂, b̄) in the cells at time t """
        b = self.forces.evaluate(self.grid.x, self.grid.length, t)
        return decompose_force(self.frame, b)


class SweepCoefficients(MixflowObject):
    """ Coefficient fields of one sweep """

    def __init__(self, evaluation: CoordinateEvaluation, reduced: ReducedCoefficients):
        self.evaluation = evaluation
        self.reduced = reduced

    def __repr__(self) -> str:
        return f"<SweepCoefficients n_cells={np.shape(self.reduced.d_scal)[0]}>"


def assemble_rhs(setup: ProblemSetup,
                 varrho: np.ndarray,
                 q_star: np.ndarray,
                 v_star: np.ndarray,
                 coeffs: SweepCoefficients,
                 t: float) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sources (g, h, f) of the linearised blocks at (ϱ, q*, v*)

    g = (R_ϱϱ − R)v*_x − R_q v* q*_x − D[M̃b̃ + Ab̂] + Πᵀr(ρ)
    h = d b̂ + A·b̃
    f = −P_ϱϱ_x − P_q·q*_x − ϱv*v*_x + R·b̃ + b̂ + ϱb̄
    """
    dx = setup.grid.dx
    ev = coeffs.evaluation
    red = coeffs.reduced
    b_tilde, b_hat, b_bar = setup.force_parts(t)

    v_x = velocity_gradient(v_star, dx)
    varrho_x = central_gradient(varrho, dx)
    q_x = central_gradient(q_star, dx)

    g = (ev.R_varrho * varrho[:, None] - ev.R) * v_x[:, None] \
        - np.einsum('iab,ib->ia', ev.R_q, q_x) * v_star[:, None]
    if not setup.forces.is_zero:
        force_flux = np.einsum('iab,ib->ia', red.m_tilde, b_tilde) + red.a_vec * b_hat[:, None]
        g = g - divergence(face_average(force_flux), dx)
    if not setup.reactions.is_zero:
        g = g + setup.reactions.evaluate(setup.frame, ev.rho) @ setup.frame.pi_matrix

    h = red.d_scal * b_hat + np.sum(red.a_vec * b_tilde, axis=1)
    f = -ev.P_varrho * varrho_x - np.sum(ev.P_q * q_x, axis=1) - varrho * v_star * v_x \
        + np.sum(ev.R * b_tilde, axis=1) + b_hat + varrho * b_bar
    return g, h, f


def _increment(q, v, q_prev, v_prev) -> float:
    change = float(np.max(np.abs(v - v_prev)))
    size = float(np.max(np.abs(v)))
    if q.size:
        change = max(change, float(np.max(np.abs(q - q_prev))))
        size = max(size, float(np.max(np.abs(q))))
    return change / max(size, 1.0)


def _energy(dx: float, dt: float, dq, dv, dvarrho) -> float:
    """ Weighted L² size of the change between two sweeps, gradients weighted with dt """
    values = float(np.sum(dq ** 2) + np.sum(dv ** 2) + np.sum(dvarrho ** 2)) * dx
    gradients = float(np.sum(face_gradient(dq, dx) ** 2) + np.sum(face_gradient(dv, dx) ** 2)) * dx
    return values + dt * gradients


def picard_advance(state_n: DiscreteState,
                   dt: float,
                   setup: ProblemSetup,
                   *,
                   time: typing.Optional[float] = None,
                   on_sweep: typing.Optional[typing.Callable[[int, float, float], typing.Any]] = None
                   ) -> typing.Tuple[DiscreteState, PicardReport]:
    """
    Advances the state by dt with the Picard sweep map

    Sweeps stop when the relative max-norm increment of (q, v) drops to picard_tol; after
    max_sweeps the last iterate is returned with converged=False.

    :param state_n: State at the old time level
    :param dt: Time step
    :param setup: ProblemSetup of the run
    :param time: New time level, state_n.time + dt by default
    :param on_sweep: Called with (sweep, increment, energy) after every sweep
    :return: (new state, PicardReport)
    :raises ThresholdBreach: If a sweep moves ϱ into the guard band
    :raises PicardDivergence: If the increment grows on divergence_sweeps consecutive sweeps
    """
    grid = setup.grid
    dx = grid.dx
    t_new = state_n.time + dt if time is None else float(time)

    q_star = state_n.q
    v_star = state_n.v
    varrho_prev = state_n.varrho
    increments: typing.List[float] = []
    energies: typing.List[float] = []
    growth = 0
    converged = False
    result = None
    residual = 0.0

    for sweep in range(1, setup.max_sweeps + 1):
        varrho = step_continuity(state_n.varrho, v_star, dt, dx, spec=setup.spec, x=grid.x, time=t_new)
        coeffs = setup.coefficients(varrho, q_star)
        g, h, f = assemble_rhs(setup, varrho, q_star, v_star, coeffs, t_new)

        red = coeffs.reduced
        q, zeta = solve_q_zeta(coeffs.evaluation.R_q, red.m_tilde, red.a_vec, red.d_scal,
                               g, h, v_star, state_n.q, dt, dx)
        v = solve_momentum(varrho, zeta, f, state_n.v, dt, dx, setup.viscosity)

        increment = _increment(q, v, q_star, v_star)
        energy = _energy(dx, dt, q - q_star, v - v_star, varrho - varrho_prev)
        residual_faces = isochoric_flux_residual(red.d_scal, red.a_vec, q, zeta, v_star, h, dx)
        residual = float(np.max(np.abs(divergence(residual_faces, dx)))) / max(1.0, float(np.max(np.abs(v_star))))
        increments.append(increment)
        energies.append(energy)
        logger.debug(f"[PICARD] t={t_new:.6g} sweep {sweep}: increment={increment:.3e} energy={energy:.3e}")
        if on_sweep is not None:
            on_sweep(sweep, increment, energy)

        result = (varrho, q, zeta, v, v_star)
        if increment <= setup.picard_tol:
            converged = True
            break

        if len(increments) > 1 and increment > increments[-2]:
            growth += 1
        else:
            growth = 0
        if growth >= setup.divergence_sweeps:
            logger.error(f"[PICARD] Increments grew on {growth} consecutive sweeps at t={t_new:.6g}: "
                         f"{increments[-growth - 1:]}")
            raise errs.PicardDivergence(f"Picard iteration diverged at t={t_new:.6g} after {sweep} sweeps, "
                                        f"increments {increments[-growth - 1:]}", increments=increments)

        q_star, v_star, varrho_prev = q, v, varrho

    if not converged:
        logger.warning(f"[PICARD] No convergence within {setup.max_sweeps} sweeps at t={t_new:.6g}, "
                       f"last increment {increments[-1]:.3e}")

    varrho, q, zeta, v, v_used = result
    state = DiscreteState(varrho=varrho, q=q, zeta=zeta, v=v, time=t_new)
    report = PicardReport(n_iterations=len(increments),
                          final_increment=increments[-1],
                          energy_sequence=energies,
                          converged=converged,
                          increments=increments,
                          transport_velocity=v_used,
                          isochoric_residual=residual)
    return state, report


def contraction_threshold(state: DiscreteState,
                          setup: ProblemSetup,
                          dt_candidates: typing.Sequence[float],
                          ratio_limit: float = 0.5) -> typing.Tuple[float, typing.Dict[float, float]]:
    """
    Largest candidate time step whose measured Picard energy ratios all stay below ratio_limit

    :param state: State the trial steps start from
    :param setup: ProblemSetup, its warm start is restored afterwards
    :param dt_candidates: Time steps to try
    :return: (dt₀, worst ratio per candidate); dt₀ is nan if no candidate contracts
    """
    worst: typing.Dict[float, float] = {}
    cache = setup.cache
    for dt in sorted((float(c) for c in dt_candidates), reverse=True):
        setup.cache = None
        try:
            _, report = picard_advance(state, dt, setup)
        except (errs.PicardDivergence, errs.CflViolation, errs.ThresholdBreach) as e:
            logger.info(f"[PICARD] Candidate dt={dt:.3e} rejected: {e}")
            worst[dt] = math.inf
            continue
        ratios = report.ratios()
        worst[dt] = max(ratios) if ratios else 0.0
    setup.cache = cache

    admissible = [dt for dt, ratio in worst.items() if ratio <= ratio_limit]
    dt0 = max(admissible) if admissible else math.nan
    logger.info(f"[PICARD] Contraction threshold dt0={dt0:.3e} from {len(worst)} candidates")
    return dt0, worst
