import logging
import math
import typing

import numpy as np

from .blocks import solve_zeta, zeta_face_source
from .picard import ProblemSetup, picard_advance
from ..diagnostics.monitors import ThresholdTracker, constraint_residuals, free_energy_total, existence_window
from ..diagnostics.norms import CriteriaTracker
from ..events import EventHandler
from ..thermo.coordinates import evaluate_coordinates
from ..types.records import MonitorReport, Snapshot, TimeSeries, PicardReport
from ..types.state import DiscreteState
from .. import exception as errs

__all__ = ('Simulation', 'run_simulation')

logger = logging.getLogger(__name__)


class Simulation(EventHandler):
    """
    Marches a validated scenario from t = 0 to t_final

    The simulation is its own event handler: hooks registered with @simulation.event
    (on_start, on_step, on_picard_sweep, on_breach, on_finish) are called from the time loop.
    A threshold breach or a diverging Picard iteration ends the run with the matching
    termination reason instead of raising.
    """

    def __init__(self, config, *, call_obj: typing.Optional[object] = None):
        """
        Object Instance Construction

        :param config: Validated RunConfig
        :param call_obj: Object the event hooks are looked up on. Defaults to the simulation itself
        """
        # Calling super to make the simulation its own event_handler
        super().__init__(call_obj)

        self._config = config
        self._setup = ProblemSetup(spec=config.spec,
                                   frame=config.frame,
                                   closure=config.closure,
                                   grid=config.grid,
                                   viscosity=config.viscosity,
                                   forces=config.forces,
                                   reactions=config.reactions,
                                   picard_tol=config.picard_tol,
                                   max_sweeps=config.max_sweeps)
        self._series: typing.Optional[TimeSeries] = None
        self._thresholds = None
        self._criteria = None
        self._initial_mass = None
        self._initial_M = None
        self._zeta_mean_max = 0.0
        self._volume_residual_max = 0.0
        self._window_warned = False

    def __repr__(self) -> str:
        info = [
            ('n_species', self._config.spec.n_species),
            ('n_cells', self._config.grid.n_cells),
            ('dt', self._config.dt),
            ('n_steps', self._config.n_steps)
        ]
        return '<Simulation {}>'.format(' '.join('%s=%s' % t for t in info))

    @property
    def config(self):
        return self._config

    @property
    def setup(self) -> ProblemSetup:
        return self._setup

    @property
    def series(self) -> typing.Optional[TimeSeries]:
        return self._series

    def initial_state(self) -> DiscreteState:
        """
        Builds (ϱ⁰, q⁰, ζ⁰, v⁰) from the initial profiles

        The boundary cells of q⁰ are copied from their neighbours so that the discrete normal
        derivative vanishes; ζ⁰ solves the Neumann problem with the initial coefficients.
        """
        config = self._config
        grid = config.grid
        varrho, q, v = config.initial.fields(grid, config.frame.n_free)
        if q.shape[1]:
            q[0] = q[1]
            q[-1] = q[-2]

        coeffs = self._setup.coefficients(varrho, q)
        b_tilde, b_hat, _ = self._setup.force_parts(0.0)
        red = coeffs.reduced
        h = red.d_scal * b_hat + np.sum(red.a_vec * b_tilde, axis=1)
        zeta = solve_zeta(red.d_scal, zeta_face_source(red.a_vec, q, v, h, grid.dx), grid.dx)
        return DiscreteState(varrho=varrho, q=q, zeta=zeta, v=v, time=0.0)

    def _record(self, step: int, state: DiscreteState, report: typing.Optional[PicardReport]) -> MonitorReport:
        config = self._config
        spec, frame, dx = config.spec, config.frame, config.grid.dx

        evaluation = evaluate_coordinates(spec, frame, state.varrho, state.q, guess=self._setup.cache)
        m_lower, M_upper = self._thresholds.update(state.varrho)
        residuals = constraint_residuals(state, spec, frame, evaluation=evaluation)
        self._zeta_mean_max = max(self._zeta_mean_max, residuals.zeta_mean)
        self._volume_residual_max = max(self._volume_residual_max, residuals.volume)

        mass = state.mass(dx)
        if self._initial_mass is None:
            self._initial_mass = mass
            self._initial_M = M_upper
        drift = abs(mass - self._initial_mass) / abs(self._initial_mass)

        N_value, K_value = self._criteria.update(state)
        window = existence_window(self._initial_M, state.time, self._criteria.norms.v_norm,
                                  self._criteria.exponent)
        if window >= 1.0 and not self._window_warned:
            self._window_warned = True
            logger.warning(f"[SIMULATION] Existence-window quantity reached {window:.4g} >= 1 at "
                           f"t={state.time:.6g}, the characteristic threshold bound no longer applies")

        record = MonitorReport(step=step,
                               time=state.time,
                               mass=mass,
                               mass_drift=drift,
                               m_lower=m_lower,
                               M_upper=M_upper,
                               zeta_mean=residuals.zeta_mean,
                               zeta_mean_max=self._zeta_mean_max,
                               volume_residual=residuals.volume,
                               volume_residual_max=self._volume_residual_max,
                               isochoric_residual=report.isochoric_residual if report is not None else 0.0,
                               picard_iters=report.n_iterations if report is not None else 0,
                               picard_ratio=report.last_ratio if report is not None else math.nan,
                               N_criterion=N_value,
                               K_criterion=K_value,
                               picard_energies=report.energy_sequence if report is not None else (),
                               free_energy=free_energy_total(state, spec, frame, dx, evaluation=evaluation),
                               existence_window=window)
        self._series.add_record(record)

        if step > 0 and step % config.cadence == 0:
            self._series.add_snapshot(Snapshot(step, state, config.grid.x, evaluation.rho,
                                               evaluation.P + state.zeta))
        logger.debug(f"[SIMULATION] step {step} t={state.time:.6g} m={m_lower:.4g} M={M_upper:.4g} "
                     f"mass drift {drift:.2e}")
        self.dispatch_on_step(record, state)
        return record

    def run(self) -> TimeSeries:
        """
        Runs the scenario

        :return: The TimeSeries with one record per step, including the initial state
        :raises CflViolation: If the velocity outgrows the CFL restriction of the time step
        :raises SingularBlock: If a linear block cannot be solved
        """
        config = self._config
        self._series = TimeSeries(config.config_hash)
        self._thresholds = ThresholdTracker(config.spec)
        self._criteria = CriteriaTracker(config.grid.dx, config.exponent, config.alpha)
        self._initial_mass = None
        self._initial_M = None
        self._zeta_mean_max = 0.0
        self._volume_residual_max = 0.0
        self._window_warned = False
        self._setup.cache = None

        state = self.initial_state()
        logger.info(f"[SIMULATION] Starting {self!r}")
        self.dispatch_on_start(state, config)
        self._record(0, state, None)

        for step in range(1, config.n_steps + 1):
            try:
                state_new, report = picard_advance(state, config.dt, self._setup,
                                                   time=step * config.dt,
                                                   on_sweep=self.dispatch_on_picard_sweep)
                self._record(step, state_new, report)

            except errs.ThresholdBreach as e:
                logger.warning(f"[SIMULATION] Threshold breach in step {step}: {e}")
                self.dispatch_on_breach(e)
                breach = {
                    'time': e.time,
                    'cell': e.cell,
                    'x': e.x,
                    'varrho': e.varrho,
                    'bound': e.bound
                }
                self._series.terminate('threshold_breach', state, str(e), breach=breach)
                break

            except errs.PicardDivergence as e:
                logger.warning(f"[SIMULATION] Picard divergence in step {step}: {e}")
                self._series.terminate('picard_divergence', state, str(e))
                break

            state = state_new
        else:
            self._series.terminate('completed', state)

        logger.info(f"[SIMULATION] Finished with '{self._series.termination_reason}' at t={state.time:.6g} "
                    f"after {len(self._series.records) - 1} steps")
        self.dispatch_on_finish(self._series)
        return self._series


def run_simulation(config) -> TimeSeries:
    """ Runs the scenario with a fresh Simulation """
    return Simulation(config).run()
