"""
Onsager mobility M(ρ) closing the diffusion fluxes J = −M(∇μ − b) and its reduced coefficients

M̃ = ΠᵀMΠ, A = ΠᵀMV̄, d = V̄·MV̄ and the parabolic core K = M̃ − A⊗A/d describe the mobility in
the (q, ζ) coordinates.
"""
import abc
import logging
import sys
import typing

import numpy as np
from marshmallow import Schema, fields, post_load, validates_schema, ValidationError, EXCLUDE
from marshmallow.validate import OneOf, Range

from ..thermo.coordinates import evaluate_coordinates, check_interval
from ..types.mixflow_object import MixflowObject, frozen
from .. import utils
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('ClosureModel', 'QuasiDiagonalClosure', 'MaxwellStefanClosure', 'ClosureSchema',
           'ReducedCoefficients', 'DegenerationReport', 'onsager_M', 'reduce_onsager', 'reduce_closure',
           'matrix_B', 'degeneration_monitor', 'closure_from_dict')


class ClosureModel(MixflowObject, abc.ABC):
    """
    Immutable generator of symmetric positive semi-definite mobilities with kernel span{1ᴺ}
    """
    kind: str = ""

    @abc.abstractmethod
    def onsager(self, rho: np.ndarray) -> np.ndarray:
        """ M(ρ) for stacked positive densities (..., N) """
        ...

    @abc.abstractmethod
    def to_dict(self) -> dict:
        ...

    @property
    def n_species(self) -> typing.Optional[int]:
        return None


class QuasiDiagonalClosure(ClosureModel):
    """
    M = D₀(diag(ρ) − ρ⊗ρ/ϱ), the default closure
    """
    kind = 'quasi_diagonal'

    def __init__(self, mobility_scale: float = 1.0):
        if not mobility_scale > 0:
            raise ValueError("mobility_scale must be positive")
        self._mobility_scale = float(mobility_scale)

    @property
    def mobility_scale(self) -> float:
        return self._mobility_scale

    def onsager(self, rho: np.ndarray) -> np.ndarray:
        varrho = np.sum(rho, axis=-1, keepdims=True)[..., None]
        mobility = -rho[..., :, None] * rho[..., None, :] / varrho
        idx = np.arange(rho.shape[-1])
        mobility[..., idx, idx] += rho
        return self._mobility_scale * mobility

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'mobility_scale': self._mobility_scale}


class MaxwellStefanClosure(ClosureModel):
    """
    Pseudo-inverse on {1ᴺ}⊥ of the Maxwell-Stefan friction operator

    Ãᵢⱼ = −1/(ϱĐᵢⱼ) for i ≠ j and Ãᵢᵢ = Σ_{k≠i} ρₖ/(ϱĐᵢₖρᵢ); M = 𝒫(𝒫Ã𝒫 + 1⊗1/N)⁻¹𝒫.
    """
    kind = 'maxwell_stefan'

    def __init__(self, diffusivities):
        diffusivities = np.array(diffusivities, dtype=float)
        n = diffusivities.shape[0]
        if diffusivities.ndim != 2 or diffusivities.shape != (n, n) or n < 2:
            raise ValueError("diffusivities must be a square matrix")
        off = ~np.eye(n, dtype=bool)
        if not np.allclose(diffusivities, diffusivities.T, rtol=1e-12, atol=0):
            raise ValueError("Binary diffusivities must be symmetric")
        if np.any(diffusivities[off] <= 0):
            raise ValueError("Binary diffusivities must be positive")
        np.fill_diagonal(diffusivities, 1.0)
        self._diffusivities = frozen(diffusivities)
        self._n = n
        self._proj = frozen(np.eye(n) - np.ones((n, n)) / n)

    @property
    def diffusivities(self) -> np.ndarray:
        return self._diffusivities

    @property
    def n_species(self) -> int:
        return self._n

    def friction(self, rho: np.ndarray) -> np.ndarray:
        """ Ã(ρ) for stacked densities """
        n = self._n
        varrho = np.sum(rho, axis=-1, keepdims=True)[..., None]
        inv_d = 1.0 / self._diffusivities
        off = ~np.eye(n, dtype=bool)
        friction = np.where(off, -inv_d, 0.0) / varrho
        # Σ_{k≠i} ρₖ/Đᵢₖ with the diagonal of inv_d excluded
        weights = (np.where(off, inv_d, 0.0) @ rho[..., None])[..., 0]
        idx = np.arange(n)
        friction[..., idx, idx] = weights / (varrho[..., 0] * rho)
        return friction

    def onsager(self, rho: np.ndarray) -> np.ndarray:
        if rho.shape[-1] != self._n:
            raise ValueError(f"Closure defined for {self._n} species, got densities of shape {rho.shape}")
        proj = self._proj
        regular = proj @ self.friction(rho) @ proj + np.ones((self._n, self._n)) / self._n
        rhs = np.broadcast_to(proj, regular.shape)
        mobility = proj @ np.linalg.solve(regular, rhs)
        return 0.5 * (mobility + np.swapaxes(mobility, -1, -2))

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'diffusivities': self._diffusivities.tolist()}


class ClosureSchema(Schema):
    kind = fields.Str(load_default='quasi_diagonal', validate=OneOf(['quasi_diagonal', 'maxwell_stefan']))
    mobility_scale = fields.Float(load_default=1.0, validate=Range(min=0, min_inclusive=False))
    diffusivities = fields.List(fields.List(fields.Float()), load_default=None)

    @validates_schema
    def check_diffusivities(self, data, **kwargs):
        if data['kind'] != 'maxwell_stefan':
            return
        if data.get('diffusivities') is None:
            raise ValidationError("A Maxwell-Stefan closure requires binary diffusivities",
                                  field_name='diffusivities')
        try:
            MaxwellStefanClosure(data['diffusivities'])
        except ValueError as e:
            raise ValidationError(str(e), field_name='diffusivities')

    @post_load
    def make(self, data, **kwargs):
        if data['kind'] == 'maxwell_stefan':
            return MaxwellStefanClosure(data['diffusivities'])
        return QuasiDiagonalClosure(data['mobility_scale'])


# Creating a Global Schema for reuse-purposes
GLOBAL_SCHEMA = ClosureSchema()


def closure_from_dict(data: dict) -> ClosureModel:
    """
    Creates a closure from its configuration section

    :param data: Dict with 'kind' and the parameters of the closure
    :return: The ClosureModel
    """
    try:
        return GLOBAL_SCHEMA.load(data, unknown=EXCLUDE)

    except ValidationError as e:
        utils.log_validation_traceback(ClosureModel, e)
        raise errs.InvalidConfigError("Failed to perform validation in 'ClosureModel'",
                                      messages=e.messages) from e

    except Exception as e:
        utils.log_traceback(msg="Traceback in 'ClosureModel' Validation:",
                            suffix=f"Failed to initialise ClosureModel due to exception:\n"
                                   f"{sys.exc_info()[0].__name__}: {e}!")
        raise errs.ConfigError(f"Failed to initialise ClosureModel due to exception:\n"
                               f"{sys.exc_info()[0].__name__}: {e}!") from e


class ReducedCoefficients(MixflowObject):
    """
    Mobility in (q, ζ) coordinates; arrays carry the batch shape in front
    """

    def __init__(self, m_tilde, a_vec, d_scal, k_core):
        self.m_tilde = m_tilde
        self.a_vec = a_vec
        self.d_scal = d_scal
        self.k_core = k_core

    def __repr__(self) -> str:
        return f"<ReducedCoefficients shape={np.shape(self.d_scal)} n_free={np.shape(self.a_vec)[-1]}>"


def _check_positive(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        logger.error(f"[CLOSURE] Non-positive partial density, min={np.min(rho)}")
        raise errs.NonpositiveDensity(f"Partial mass densities must be strictly positive, min={np.min(rho)}")
    return rho


def onsager_M(closure: ClosureModel, rho) -> np.ndarray:
    """
    Evaluates the mobility M(ρ)

    :param closure: ClosureModel
    :param rho: Positive densities (..., N)
    :return: Symmetric PSD matrices (..., N, N) with M·1ᴺ = 0
    :raises NonpositiveDensity: If any ρᵢ ≤ 0
    """
    return closure.onsager(_check_positive(rho))


def reduce_onsager(frame, mobility) -> ReducedCoefficients:
    """
    Projects given mobilities onto the (q, ζ) coordinates

    :raises DegenerateClosure: If any d = V̄·MV̄ is not positive
    """
    mobility = np.asarray(mobility, dtype=float)
    pi = frame.pi_matrix
    vbar = frame.vbar
    m_tilde = pi.T @ mobility @ pi
    a_vec = (pi.T @ mobility @ vbar[:, None])[..., 0]
    d_scal = (vbar[None, :] @ mobility @ vbar[:, None])[..., 0, 0]
    if np.any(d_scal <= 0) or not np.all(np.isfinite(d_scal)):
        worst = float(np.min(d_scal))
        logger.error(f"[CLOSURE] Closure yields d = V̄·M·V̄ = {worst:.3e}")
        raise errs.DegenerateClosure(f"The closure yields d = V̄·M·V̄ = {worst:.3e} <= 0")
    k_core = m_tilde - a_vec[..., :, None] * a_vec[..., None, :] / d_scal[..., None, None]
    return ReducedCoefficients(m_tilde, a_vec, d_scal, k_core)


def reduce_closure(closure: ClosureModel, frame, spec, varrho, q=None, *, evaluation=None) -> ReducedCoefficients:
    """
    M̃, A, d and K at the states ρ = ℛ(ϱ, q)

    :param evaluation: Already computed CoordinateEvaluation at (ϱ, q)
    :raises ThresholdViolation: If ϱ lies outside of the admissible interval
    :raises DegenerateClosure: If d ≤ 0
    """
    if evaluation is None:
        evaluation = evaluate_coordinates(spec, frame, varrho, q)
    return reduce_onsager(frame, onsager_M(closure, evaluation.rho))


def matrix_B(closure: ClosureModel, rho) -> typing.Tuple[np.ndarray, float]:
    """
    Bᵢⱼ = Mᵢⱼ/ρⱼ together with max over i, j, k of |Bᵢⱼ| + ρₖ|∂ρₖBᵢⱼ|

    The derivative is a central difference with relative step FD_STEP.

    :param closure: ClosureModel
    :param rho: One positive composition
    :return: (B, bound)
    """
    rho = _check_positive(np.reshape(rho, -1))
    n = rho.size
    b_matrix = closure.onsager(rho) / rho[None, :]

    step = settings.get_float("FD_STEP") * rho
    shift = np.diag(step)
    plus = rho[None, :] + shift
    minus = rho[None, :] - shift
    b_plus = closure.onsager(plus) / plus[:, None, :]
    b_minus = closure.onsager(minus) / minus[:, None, :]
    # derivative[k] = ∂ρₖB
    derivative = (b_plus - b_minus) / (2.0 * step[:, None, None])
    weighted = np.max(rho[:, None, None] * np.abs(derivative), axis=0)
    bound = float(np.max(np.abs(b_matrix) + weighted))
    logger.debug(f"[CLOSURE] B-boundedness {bound:.6g} for N={n}")
    return b_matrix, bound


class DegenerationReport(MixflowObject):
    """
    Coefficient degeneration along a sweep of total mass densities

    rows[:, 2] is (|d| + |A| + |d_q| + |A_q|)/m(ϱ) and rows[:, 3] is |d_ϱ| + |A_ϱ|.
    """
    COLUMNS = ('varrho', 'margin', 'ratio', 'derivative', 'pressure_margin')

    def __init__(self, rows):
        self._rows = frozen(rows)

    def __repr__(self) -> str:
        return f"<DegenerationReport points={len(self._rows)} max_ratio={self.max_ratio:.6g}>"

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def ratios(self) -> np.ndarray:
        return self._rows[:, 2]

    @property
    def derivatives(self) -> np.ndarray:
        return self._rows[:, 3]

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios))

    @property
    def max_derivative(self) -> float:
        return float(np.max(self.derivatives))


def degeneration_monitor(closure: ClosureModel, frame, spec, sweep, q=None) -> DegenerationReport:
    """
    Reports how d and A scale with the threshold margin m(ϱ) along a ϱ-sweep at fixed q

    Derivatives are central differences with steps FD_STEP·ϱ and FD_STEP·max(1, |q|).

    :param sweep: Total mass densities strictly inside the admissible interval
    :param q: Fixed q-coordinates, zero by default
    :return: DegenerationReport
    :raises ThresholdViolation: If a sweep value or its perturbation leaves the interval
    """
    sweep = check_interval(spec, np.reshape(sweep, -1))
    m = frame.n_free
    q = np.zeros(m) if q is None else np.reshape(np.asarray(q, dtype=float), m)
    n_points = sweep.size
    fd = settings.get_float("FD_STEP")

    h_rho = fd * sweep
    h_q = fd * max(1.0, float(np.max(np.abs(q)))) if m else 0.0

    # Stencil: centre, ϱ ± h, then q ± h eℓ for every ℓ
    varrho_pts = [sweep, sweep + h_rho, sweep - h_rho]
    q_pts = [np.tile(q, (n_points, 1))] * 3
    for ell in range(m):
        for sign in (1.0, -1.0):
            shifted = q.copy()
            shifted[ell] += sign * h_q
            varrho_pts.append(sweep)
            q_pts.append(np.tile(shifted, (n_points, 1)))
    varrho_all = np.concatenate(varrho_pts)
    q_all = np.concatenate(q_pts).reshape(varrho_all.size, m)

    evaluation = evaluate_coordinates(spec, frame, varrho_all, q_all)
    coeffs = reduce_onsager(frame, onsager_M(closure, evaluation.rho))
    d_all = coeffs.d_scal.reshape(len(varrho_pts), n_points)
    a_all = coeffs.a_vec.reshape(len(varrho_pts), n_points, m)

    d = d_all[0]
    a = a_all[0]
    d_rho = (d_all[1] - d_all[2]) / (2.0 * h_rho)
    a_rho = (a_all[1] - a_all[2]) / (2.0 * h_rho[:, None])
    if m:
        d_q = np.stack([(d_all[3 + 2 * ell] - d_all[4 + 2 * ell]) / (2.0 * h_q) for ell in range(m)], axis=-1)
        a_q = np.stack([(a_all[3 + 2 * ell] - a_all[4 + 2 * ell]) / (2.0 * h_q) for ell in range(m)], axis=-1)
        size_q = np.linalg.norm(d_q, axis=-1) + np.linalg.norm(a_q, axis=(-2, -1))
    else:
        size_q = np.zeros(n_points)

    margin = spec.margin(sweep)
    ratio = (np.abs(d) + np.linalg.norm(a, axis=-1) + size_q) / margin
    derivative = np.abs(d_rho) + np.linalg.norm(a_rho, axis=-1)
    pressure_margin = evaluation.P_varrho[:n_points] * margin

    rows = np.column_stack([sweep, margin, ratio, derivative, pressure_margin])
    report = DegenerationReport(rows)
    logger.info(f"[CLOSURE] Degeneration sweep over {n_points} points: max ratio {report.max_ratio:.6g}, "
                f"median ratio {report.median_ratio:.6g}, max |d_varrho|+|A_varrho| {report.max_derivative:.6g}")
    return report
