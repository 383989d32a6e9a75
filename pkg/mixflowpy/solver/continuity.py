import logging
import typing

import numpy as np

from .stencils import face_velocity
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('step_continuity', 'check_guard_band')


def check_guard_band(varrho: np.ndarray,
                     spec,
                     *,
                     x: typing.Optional[np.ndarray] = None,
                     time: typing.Optional[float] = None) -> None:
    """
    Raises if any cell is within THRESHOLD_GUARD of ϱ_min or ϱ_max (or beyond them)

    :raises ThresholdBreach: With the first offending cell, its position and the reached bound
    """
    guard = settings.get_float("THRESHOLD_GUARD")
    low, high = spec.interval
    below = varrho <= low + guard
    above = varrho >= high - guard
    bad = ~np.isfinite(varrho) | below | above
    if not np.any(bad):
        return

    cell = int(np.flatnonzero(bad)[0])
    bound = 'lower' if below[cell] else 'upper'
    position = None if x is None else float(x[cell])
    value = float(varrho[cell])
    logger.error(f"[CONTINUITY] Threshold breach at t={time}: cell {cell} (x={position}) "
                 f"varrho={value!r} reached the {bound} guard band")
    raise errs.ThresholdBreach(cell=cell, x=position, varrho=value, bound=bound, time=time)


def step_continuity(varrho_n,
                    v_star,
                    dt: float,
                    dx: float,
                    *,
                    spec=None,
                    x: typing.Optional[np.ndarray] = None,
                    time: typing.Optional[float] = None) -> np.ndarray:
    """
    One explicit upwind step of ∂tϱ + (ϱv*)_x = 0

    The face flux is F_{i+½} = v⁺ϱᵢ + v⁻ϱᵢ₊₁ with v the averaged face velocity; both wall fluxes
    vanish so Σϱᵢdx is preserved up to round-off.

    :param varrho_n: Total mass density at the old time level
    :param v_star: Transport velocity in the cells
    :param dt: Time step
    :param dx: Cell width
    :param spec: MixtureSpec, enables the threshold guard band check
    :param x: Cell centers, reported on a breach
    :param time: New time level, reported on a breach
    :return: The updated total mass density
    :raises CflViolation: If dt·max|v*|/dx exceeds CFL_LIMIT
    :raises ThresholdBreach: If spec is passed and an updated value reaches the guard band
    """
    varrho_n = np.asarray(varrho_n, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    courant = dt * float(np.max(np.abs(v_star))) / dx
    limit = settings.get_float("CFL_LIMIT")
    if not courant <= limit:
        logger.error(f"[CONTINUITY] Courant number {courant:.6g} above {limit}")
        raise errs.CflViolation(f"Time step violates the CFL restriction: dt·max|v|/dx = {courant:.6g} > {limit}")

    faces = face_velocity(v_star)[1:-1]
    flux = np.maximum(faces, 0.0) * varrho_n[:-1] + np.minimum(faces, 0.0) * varrho_n[1:]
    full = np.pad(flux, (1, 1))
    varrho = varrho_n - dt / dx * (full[1:] - full[:-1])

    if spec is not None:
        check_guard_band(varrho, spec, x=x, time=time)
    return varrho
