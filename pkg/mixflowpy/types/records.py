import math
import typing

import numpy as np

from .mixflow_object import MixflowObject, frozen
from .state import DiscreteState

__all__ = ('PicardReport', 'MonitorReport', 'Snapshot', 'TimeSeries', 'TERMINATION_REASONS')

TERMINATION_REASONS = ('completed', 'threshold_breach', 'picard_divergence')


class PicardReport(MixflowObject):
    """
    Outcome of one Picard-advanced time step

    energy_sequence holds the weighted L² size of the increments between consecutive sweeps.
    """

    def __init__(self,
                 n_iterations: int,
                 final_increment: float,
                 energy_sequence: typing.Sequence[float],
                 converged: bool,
                 increments: typing.Sequence[float] = (),
                 transport_velocity=None,
                 isochoric_residual: float = 0.0):
        self._n_iterations = int(n_iterations)
        self._final_increment = float(final_increment)
        self._energy_sequence = tuple(float(e) for e in energy_sequence)
        self._converged = bool(converged)
        self._increments = tuple(float(i) for i in increments)
        self._transport_velocity = None if transport_velocity is None else frozen(transport_velocity)
        self._isochoric_residual = float(isochoric_residual)

        if any(e < 0 for e in self._energy_sequence):
            raise ValueError("Picard energies are nonnegative")

    def __repr__(self) -> str:
        info = [
            ('n_iterations', self.n_iterations),
            ('final_increment', self.final_increment),
            ('converged', self.converged)
        ]
        return '<PicardReport {}>'.format(' '.join('%s=%s' % t for t in info))

    @property
    def n_iterations(self) -> int:
        return self._n_iterations

    @property
    def final_increment(self) -> float:
        return self._final_increment

    @property
    def energy_sequence(self) -> typing.Tuple[float, ...]:
        return self._energy_sequence

    @property
    def converged(self) -> bool:
        return self._converged

    @property
    def increments(self) -> typing.Tuple[float, ...]:
        return self._increments

    @property
    def transport_velocity(self) -> typing.Optional[np.ndarray]:
        """ Velocity v* of the last sweep, the one the returned zeta and varrho were computed with """
        return self._transport_velocity

    @property
    def isochoric_residual(self) -> float:
        """ Cell residual of the volume-production identity in the last sweep, relative to max(1, max|v*|) """
        return self._isochoric_residual

    def ratios(self, floor: float = 1e-28) -> typing.List[float]:
        """
        Ratios of consecutive energies E^{k+1}/E^k, skipping pairs whose denominator is below floor

        :param floor: Energies below this are treated as converged to round-off
        :return: List of ratios
        """
        energies = self._energy_sequence
        return [energies[k + 1] / energies[k]
                for k in range(len(energies) - 1) if energies[k] > floor]

    @property
    def last_ratio(self) -> float:
        ratios = self.ratios()
        return ratios[-1] if ratios else math.nan


class MonitorReport(MixflowObject):
    """
    Diagnostics of one recorded step

    m_lower/M_upper, the *_max fields and the criteria are cumulative over [0, time].
    """
    COLUMNS = ('step', 'time', 'mass', 'm_lower', 'M_upper', 'zeta_mean', 'volume_residual',
               'picard_iters', 'picard_ratio', 'N_crit', 'K_crit', 'free_energy')

    def __init__(self, **kwargs):
        self._step = int(kwargs.get('step', 0))
        self._time = float(kwargs.get('time', 0.0))
        self._mass = float(kwargs.get('mass', 0.0))
        self._mass_drift = float(kwargs.get('mass_drift', 0.0))
        self._m_lower = float(kwargs.get('m_lower'))
        self._M_upper = float(kwargs.get('M_upper'))
        self._zeta_mean = float(kwargs.get('zeta_mean', 0.0))
        self._zeta_mean_max = float(kwargs.get('zeta_mean_max', 0.0))
        self._volume_residual = float(kwargs.get('volume_residual', 0.0))
        self._volume_residual_max = float(kwargs.get('volume_residual_max', 0.0))
        self._isochoric_residual = float(kwargs.get('isochoric_residual', 0.0))
        self._picard_iters = int(kwargs.get('picard_iters', 0))
        self._picard_ratio = float(kwargs.get('picard_ratio', math.nan))
        self._N_criterion = float(kwargs.get('N_criterion', 0.0))
        self._K_criterion = float(kwargs.get('K_criterion', 0.0))
        self._picard_energies = tuple(kwargs.get('picard_energies', ()))
        self._free_energy = float(kwargs.get('free_energy', 0.0))
        self._existence_window = float(kwargs.get('existence_window', 0.0))

    def __repr__(self) -> str:
        info = [
            ('step', self.step),
            ('time', self.time),
            ('m_lower', self.m_lower),
            ('M_upper', self.M_upper)
        ]
        return '<MonitorReport {}>'.format(' '.join('%s=%s' % t for t in info))

    def row(self) -> tuple:
        """ Values in the order of COLUMNS """
        return (self._step, self._time, self._mass, self._m_lower, self._M_upper, self._zeta_mean,
                self._volume_residual, self._picard_iters, self._picard_ratio, self._N_criterion,
                self._K_criterion, self._free_energy)

    @property
    def step(self) -> int:
        return self._step

    @property
    def time(self) -> float:
        return self._time

    @property
    def mass(self) -> float:
        return self._mass

    @property
    def mass_drift(self) -> float:
        return self._mass_drift

    @property
    def m_lower(self) -> float:
        return self._m_lower

    @property
    def M_upper(self) -> float:
        return self._M_upper

    @property
    def zeta_mean(self) -> float:
        return self._zeta_mean

    @property
    def zeta_mean_max(self) -> float:
        return self._zeta_mean_max

    @property
    def volume_residual(self) -> float:
        return self._volume_residual

    @property
    def volume_residual_max(self) -> float:
        return self._volume_residual_max

    @property
    def isochoric_residual(self) -> float:
        return self._isochoric_residual

    @property
    def picard_iters(self) -> int:
        return self._picard_iters

    @property
    def picard_ratio(self) -> float:
        return self._picard_ratio

    @property
    def N_criterion(self) -> float:
        return self._N_criterion

    @property
    def K_criterion(self) -> float:
        return self._K_criterion

    @property
    def picard_energies(self) -> tuple:
        return self._picard_energies

    @property
    def free_energy(self) -> float:
        return self._free_energy

    @property
    def existence_window(self) -> float:
        return self._existence_window


class Snapshot(MixflowObject):
    """
    Field values written at the output cadence
    """

    def __init__(self, step: int, state: DiscreteState, x, rho, pressure):
        self._step = int(step)
        self._state = state
        self._x = frozen(x)
        self._rho = frozen(rho)
        self._pressure = frozen(pressure)

    def __repr__(self) -> str:
        return f"<Snapshot step={self.step} time={self.time}>"

    @property
    def step(self) -> int:
        return self._step

    @property
    def time(self) -> float:
        return self._state.time

    @property
    def state(self) -> DiscreteState:
        return self._state

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    @property
    def pressure(self) -> np.ndarray:
        return self._pressure


class TimeSeries(MixflowObject):
    """
    Monitor rows, field snapshots and run metadata of one simulation
    """

    def __init__(self, config_hash: str = ""):
        self._records: typing.List[MonitorReport] = []
        self._snapshots: typing.List[Snapshot] = []
        self._config_hash = config_hash
        self._termination_reason = None
        self._breach = None
        self._message = ""
        self._final_state = None

    def __repr__(self) -> str:
        info = [
            ('records', len(self._records)),
            ('snapshots', len(self._snapshots)),
            ('termination_reason', self._termination_reason)
        ]
        return '<TimeSeries {}>'.format(' '.join('%s=%s' % t for t in info))

    def add_record(self, record: MonitorReport) -> None:
        if self._records and not record.time > self._records[-1].time:
            raise ValueError(f"Records must be strictly increasing in time, got {record.time} "
                             f"after {self._records[-1].time}")
        self._records.append(record)

    def add_snapshot(self, snapshot: Snapshot) -> None:
        if self._snapshots and not snapshot.time > self._snapshots[-1].time:
            raise ValueError("Snapshots must be strictly increasing in time")
        self._snapshots.append(snapshot)

    def terminate(self, reason: str, final_state: DiscreteState, message: str = "", breach: dict = None) -> None:
        if reason not in TERMINATION_REASONS:
            raise ValueError(f"Unknown termination reason '{reason}'")
        self._termination_reason = reason
        self._final_state = final_state
        self._message = message
        self._breach = breach

    @property
    def records(self) -> typing.List[MonitorReport]:
        return self._records

    @property
    def snapshots(self) -> typing.List[Snapshot]:
        return self._snapshots

    @property
    def config_hash(self) -> str:
        return self._config_hash

    @property
    def termination_reason(self) -> typing.Optional[str]:
        return self._termination_reason

    @property
    def breach(self) -> typing.Optional[dict]:
        return self._breach

    @property
    def message(self) -> str:
        return self._message

    @property
    def final_state(self) -> typing.Optional[DiscreteState]:
        return self._final_state
