"""
Sweeps of the total mass density towards the thresholds

Drives the degeneration monitor of the closure and the logarithmic blow-up of the pressure P(ϱ, q)
near ϱ_max (and its counterpart near ϱ_min).
"""
import logging
import typing

import numpy as np

from ..thermo.coordinates import evaluate_coordinates
from ..transport.closure import degeneration_monitor, DegenerationReport
from ..types.mixflow_object import MixflowObject

logger = logging.getLogger(__name__)

__all__ = ('sweep_points', 'pressure_window', 'log_pressure_slope', 'ThresholdSweep', 'run_threshold_sweep')


def sweep_points(spec, count: int = 50, approach: float = 1e-3) -> np.ndarray:
    """
    Total mass densities clustered towards both thresholds

    Cosine spacing between ϱ_min(1 + approach) and ϱ_max(1 − approach).
    """
    if count < 2:
        raise ValueError("A sweep needs at least two points")
    if not 0 < approach < 1:
        raise ValueError("approach must lie in (0, 1)")
    low = spec.varrho_min * (1.0 + approach)
    high = spec.varrho_max * (1.0 - approach)
    if not low < high:
        raise ValueError(f"approach {approach} leaves no room inside the admissible interval")
    s = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, count)))
    return low + (high - low) * s


def pressure_window(spec, side: str = 'upper', count: int = 40,
                    widest: float = 5e-2, narrowest: float = 1e-3) -> np.ndarray:
    """ ϱ_max(1 − s) or ϱ_min(1 + s) for s geometrically spaced from widest to narrowest """
    margins = np.geomspace(widest, narrowest, count)
    if side == 'upper':
        return spec.varrho_max * (1.0 - margins)
    if side == 'lower':
        return spec.varrho_min * (1.0 + margins)
    raise ValueError(f"side must be 'upper' or 'lower', got '{side}'")


def log_pressure_slope(spec, frame, varrho_values, q=None, side: str = 'upper') -> float:
    """
    Least-squares slope of P(ϱ, q) against −ln(ϱ_max − ϱ), or against ln(ϱ − ϱ_min) for side='lower'

    A slope near 1 is the logarithmic blow-up of the pressure at the threshold.

    :param varrho_values: At least two total mass densities inside the admissible interval
    :param q: Fixed q-coordinates, zero by default
    :return: The fitted slope
    """
    varrho_values = np.asarray(varrho_values, dtype=float).reshape(-1)
    if varrho_values.size < 2:
        raise ValueError("A slope needs at least two densities")
    m = frame.n_free
    q_fixed = np.zeros(m) if q is None else np.reshape(np.asarray(q, dtype=float), m)
    pressure = evaluate_coordinates(spec, frame, varrho_values, np.tile(q_fixed, (varrho_values.size, 1))).P

    if side == 'upper':
        abscissa = -np.log(spec.varrho_max - varrho_values)
    elif side == 'lower':
        abscissa = np.log(varrho_values - spec.varrho_min)
    else:
        raise ValueError(f"side must be 'upper' or 'lower', got '{side}'")
    slope = float(np.polyfit(abscissa, pressure, 1)[0])
    logger.debug(f"[MONITOR] Log-pressure slope ({side}) {slope:.6g} over {varrho_values.size} points")
    return slope


class ThresholdSweep(MixflowObject):
    """
    Outcome of run_threshold_sweep
    """

    def __init__(self, degeneration: DegenerationReport, upper_slope: float, lower_slope: float):
        self.degeneration = degeneration
        self.upper_slope = float(upper_slope)
        self.lower_slope = float(lower_slope)

    def __repr__(self) -> str:
        info = [
            ('points', len(self.degeneration.rows)),
            ('max_ratio', self.degeneration.max_ratio),
            ('upper_slope', self.upper_slope),
            ('lower_slope', self.lower_slope)
        ]
        return '<ThresholdSweep {}>'.format(' '.join('%s=%s' % t for t in info))

    @property
    def ratio_spread(self) -> float:
        """ max/median of the degeneration ratios """
        return self.degeneration.max_ratio / self.degeneration.median_ratio

    def summary(self) -> typing.Dict[str, float]:
        return {
            'points': len(self.degeneration.rows),
            'max_ratio': self.degeneration.max_ratio,
            'median_ratio': self.degeneration.median_ratio,
            'ratio_spread': self.ratio_spread,
            'max_derivative': self.degeneration.max_derivative,
            'upper_slope': self.upper_slope,
            'lower_slope': self.lower_slope
        }


def run_threshold_sweep(spec, frame, closure, count: int = 50, q=None) -> ThresholdSweep:
    """
    Degeneration monitor on a cosine-clustered sweep plus the log-pressure slopes at both thresholds
    """
    report = degeneration_monitor(closure, frame, spec, sweep_points(spec, count), q)
    upper = log_pressure_slope(spec, frame, pressure_window(spec, 'upper'), q, side='upper')
    lower = log_pressure_slope(spec, frame, pressure_window(spec, 'lower'), q, side='lower')
    result = ThresholdSweep(report, upper, lower)
    logger.info(f"[MONITOR] Threshold sweep: ratio spread {result.ratio_spread:.4g}, "
                f"pressure slopes {upper:.4g} (upper) {lower:.4g} (lower)")
    return result
