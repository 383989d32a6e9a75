import logging
import math
import typing

import numpy as np

from ..solver.blocks import isochoric_flux_residual
from ..solver.stencils import divergence
from ..thermo.coordinates import evaluate_coordinates
from ..transport.closure import onsager_M, reduce_onsager
from ..types.mixflow_object import MixflowObject
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('threshold_monitor', 'ThresholdTracker', 'ConstraintResiduals', 'constraint_residuals',
           'free_energy_total', 'characteristic_threshold_bound', 'existence_window')


def _branches(varrho, spec) -> typing.Tuple[float, float]:
    varrho = np.asarray(varrho, dtype=float)
    if varrho.size == 0:
        raise ValueError("threshold_monitor needs a nonempty field")
    lower = float(np.min(varrho / spec.varrho_min - 1.0))
    upper = float(np.min(1.0 - varrho / spec.varrho_max))
    return lower, upper


def threshold_monitor(varrho, spec) -> typing.Tuple[float, float]:
    """
    m = min over cells of min{ϱ/ϱ_min − 1, 1 − ϱ/ϱ_max} and M = max of the reciprocals of both infima

    :raises ThresholdBreach: If m ≤ 0
    """
    lower, upper = _branches(varrho, spec)
    m = min(lower, upper)
    if not m > 0:
        bound = 'lower' if lower <= upper else 'upper'
        logger.error(f"[MONITOR] Threshold functional m={m!r} is not positive")
        raise errs.ThresholdBreach(f"Total mass density reached the {bound} threshold, m={m!r}",
                                   bound=bound, varrho=float(np.max(varrho) if bound == 'upper' else np.min(varrho)))
    return m, max(1.0 / lower, 1.0 / upper)


class ThresholdTracker(MixflowObject):
    """
    Running infimum of m and supremum of M over all fields passed so far
    """

    def __init__(self, spec):
        self._spec = spec
        self._m = math.inf
        self._M = 0.0

    def __repr__(self) -> str:
        return f"<ThresholdTracker m={self._m} M={self._M}>"

    def update(self, varrho) -> typing.Tuple[float, float]:
        m, M = threshold_monitor(varrho, self._spec)
        self._m = min(self._m, m)
        self._M = max(self._M, M)
        return self._m, self._M

    @property
    def m_lower(self) -> float:
        return self._m

    @property
    def M_upper(self) -> float:
        return self._M


class ConstraintResiduals(MixflowObject):
    """
    Cellwise maxima of the constraint defects of a state
    """

    def __init__(self, volume: float, density_sum: float, zeta_mean: float, isochoric: float):
        self.volume = float(volume)
        self.density_sum = float(density_sum)
        self.zeta_mean = float(zeta_mean)
        self.isochoric = float(isochoric)

    def as_dict(self) -> dict:
        return {
            'volume': self.volume,
            'density_sum': self.density_sum,
            'zeta_mean': self.zeta_mean,
            'isochoric': self.isochoric
        }


def constraint_residuals(state,
                         spec,
                         frame,
                         *,
                         setup=None,
                         transport_velocity=None,
                         evaluation=None) -> ConstraintResiduals:
    """
    max|ℛ·V̄ − 1|, max|Σℛⱼ − ϱ|, |mean ζ| and the volume-production residual of a state

    The volume-production residual needs the ProblemSetup of the run; it is the cell divergence of
    w − dGζ − A·Gq relative to max(1, max|v*|), with v* the transport velocity (state.v by default).
    """
    if evaluation is None:
        evaluation = evaluate_coordinates(spec, frame, state.varrho, state.q)
    rho = evaluation.rho
    volume = float(np.max(np.abs(rho @ spec.vbar - 1.0)))
    density_sum = float(np.max(np.abs(np.sum(rho, axis=1) - state.varrho)))
    zeta_mean = abs(float(np.mean(state.zeta)))

    isochoric = 0.0
    if setup is not None:
        dx = setup.grid.dx
        reduced = reduce_onsager(frame, onsager_M(setup.closure, rho))
        b_tilde, b_hat, _ = setup.force_parts(state.time)
        h = reduced.d_scal * b_hat + np.sum(reduced.a_vec * b_tilde, axis=1)
        velocity = state.v if transport_velocity is None else np.asarray(transport_velocity, dtype=float)
        faces = isochoric_flux_residual(reduced.d_scal, reduced.a_vec, state.q, state.zeta, velocity, h, dx)
        isochoric = float(np.max(np.abs(divergence(faces, dx)))) / max(1.0, float(np.max(np.abs(velocity))))

    return ConstraintResiduals(volume, density_sum, zeta_mean, isochoric)


def free_energy_total(state, spec, frame, dx: float, *, evaluation=None) -> float:
    """ Σ(k(ℛ(ϱᵢ, qᵢ)) + ½ϱᵢvᵢ²)dx """
    if evaluation is None:
        evaluation = evaluate_coordinates(spec, frame, state.varrho, state.q)
    helmholtz = spec.free_energy.value(evaluation.rho)
    kinetic = 0.5 * state.varrho * state.v ** 2
    return float(np.sum(helmholtz + kinetic) * dx)


def existence_window(M0: float, t: float, v_norm: float, p: float, c: float = 1.0) -> float:
    """ c·M₀·t^{1−1/p}·𝒱·exp(c·t^{1−1/p}·𝒱); the characteristic bound holds while this is below 1 """
    scaled = c * t ** (1.0 - 1.0 / p) * v_norm
    try:
        return M0 * scaled * math.exp(scaled)
    except OverflowError:
        return math.inf


def characteristic_threshold_bound(M0: float, t: float, v_norm: float, p: float, c: float = 1.0) -> float:
    """ M₀/(1 − existence_window), infinite once the window closes """
    window = existence_window(M0, t, v_norm, p, c)
    if not window < 1.0:
        return math.inf
    return M0 / (1.0 - window)
