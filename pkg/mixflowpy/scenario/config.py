"""
Scenario documents

A run is described by one JSON document. Every section is validated by its own marshmallow schema;
the cross-section rules (initial data inside the admissible interval, force and reaction
admissibility, matching species counts) run in RunConfigSchema.check_run after all sections loaded.
"""
import copy
import hashlib
import json
import logging
import math
import pathlib
import sys
import typing

import numpy as np
from marshmallow import Schema, fields, post_load, validates_schema, ValidationError, EXCLUDE
from marshmallow.validate import Range

from ..solver.forcing import Profile, ProfileSchema, ForceField, ReactionSchema, sample_constraint_states
from ..thermo.basis import build_frame
from ..transport.closure import ClosureSchema, MaxwellStefanClosure
from ..types.mixflow_object import MixflowObject
from ..types.mixture import MixtureSpecSchema
from ..types.state import GridSchema, Grid1D
from .. import settings
from .. import utils
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('RunConfig', 'RunConfigSchema', 'InitialData', 'parse_config', 'load_config', 'config_hash')

VARRHO_KINDS = ('uniform', 'constant', 'bump', 'cosine', 'tabulated')
Q_KINDS = ('zero', 'uniform', 'constant', 'cosine', 'tabulated')
V_KINDS = ('zero', 'sine', 'tabulated')

ADMISSIBILITY_TOL = 1e-12
REACTION_SAMPLES = 64


def config_hash(document: dict) -> str:
    """ SHA-256 of the canonical JSON (sorted keys, compact separators) of a document """
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=True)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class InitialData(MixflowObject):
    """
    Initial profiles of ϱ, q and v
    """

    def __init__(self, varrho: Profile, q: typing.Sequence[Profile] = (), v: typing.Optional[Profile] = None):
        self.varrho = varrho
        self.q = tuple(q)
        self.v = v if v is not None else Profile('zero')

    def __repr__(self) -> str:
        return f"<InitialData varrho={self.varrho.kind} q={[p.kind for p in self.q]} v={self.v.kind}>"

    def fields(self, grid: Grid1D, n_free: int) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (ϱ⁰, q⁰, v⁰) in the cells of the grid

        Missing q-components are zero.
        """
        x, length = grid.x, grid.length
        varrho = self.varrho.evaluate(x, length)
        q = np.zeros((grid.n_cells, n_free))
        for ell, profile in enumerate(self.q[:n_free]):
            q[:, ell] = profile.evaluate(x, length)
        v = self.v.evaluate(x, length)
        return varrho, q, v


class TimeSchema(Schema):
    dt = fields.Float(required=True, validate=Range(min=0, min_inclusive=False))
    t_final = fields.Float(required=True, validate=Range(min=0, min_inclusive=False))

    @validates_schema
    def check_horizon(self, data, **kwargs):
        if data['t_final'] < data['dt']:
            raise ValidationError(f"t_final={data['t_final']} is shorter than one time step dt={data['dt']}",
                                  field_name='t_final')


class PicardSchema(Schema):
    tol = fields.Float(load_default=lambda: settings.get_float("PICARD_TOL"),
                       validate=Range(min=0, min_inclusive=False))
    max_sweeps = fields.Int(load_default=lambda: settings.get_int("PICARD_MAX_SWEEPS"), validate=Range(min=1))


class InitialDataSchema(Schema):
    varrho = fields.Nested(ProfileSchema, required=True)
    q = fields.List(fields.Nested(ProfileSchema), load_default=list)
    v = fields.Nested(ProfileSchema, load_default=None)

    @validates_schema
    def check_kinds(self, data, **kwargs):
        errors = {}
        if data['varrho'].kind not in VARRHO_KINDS:
            errors['varrho'] = [f"Initial varrho profile must be one of {VARRHO_KINDS}, got '{data['varrho'].kind}'"]
        bad_q = [p.kind for p in data['q'] if p.kind not in Q_KINDS]
        if bad_q:
            errors['q'] = [f"Initial q profiles must be one of {Q_KINDS}, got {bad_q}"]
        if data.get('v') is not None and data['v'].kind not in V_KINDS:
            errors['v'] = [f"Initial v profile must be one of {V_KINDS}, got '{data['v'].kind}'"]
        if errors:
            raise ValidationError(errors)

    @post_load
    def make(self, data, **kwargs):
        return InitialData(**data)


class OutputSchema(Schema):
    directory = fields.Str(load_default='output')
    cadence = fields.Int(load_default=1, validate=Range(min=1))
    precision = fields.Int(load_default=lambda: settings.get_int("OUTPUT_PRECISION"), validate=Range(min=1, max=17))


class DiagnosticsSchema(Schema):
    exponent = fields.Float(load_default=lambda: settings.get_float("NORM_EXPONENT"),
                            validate=Range(min=3, min_inclusive=False))
    alpha = fields.Float(load_default=lambda: settings.get_float("HOLDER_ALPHA"),
                         validate=Range(min=0, max=1, min_inclusive=False))


class RunConfigSchema(Schema):
    # Sections that are missing in the document fall back to their schema defaults
    mixture = fields.Nested(MixtureSpecSchema, required=True, unknown=EXCLUDE)
    closure = fields.Nested(ClosureSchema, load_default=lambda: ClosureSchema().load({}), unknown=EXCLUDE)
    grid = fields.Nested(GridSchema, required=True, unknown=EXCLUDE)
    time = fields.Nested(TimeSchema, required=True, unknown=EXCLUDE)
    picard = fields.Nested(PicardSchema, load_default=lambda: PicardSchema().load({}), unknown=EXCLUDE)
    viscosity = fields.Float(load_default=1.0, validate=Range(min=0, min_inclusive=False))
    initial = fields.Nested(InitialDataSchema, required=True, unknown=EXCLUDE)
    forces = fields.List(fields.Nested(ProfileSchema, unknown=EXCLUDE), load_default=list)
    reactions = fields.Nested(ReactionSchema, load_default=lambda: ReactionSchema().load({}), unknown=EXCLUDE)
    output = fields.Nested(OutputSchema, load_default=lambda: OutputSchema().load({}), unknown=EXCLUDE)
    diagnostics = fields.Nested(DiagnosticsSchema, load_default=lambda: DiagnosticsSchema().load({}),
                                unknown=EXCLUDE)

    @validates_schema
    def check_run(self, data, **kwargs):
        spec = data['mixture']
        grid = data['grid']
        n = spec.n_species
        errors: typing.Dict[str, typing.List[str]] = {}

        try:
            frame = build_frame(spec.vbar)
        except errs.ThermoError as e:
            raise ValidationError({'mixture': {'vbar': [str(e)]}})

        closure = data['closure']
        if isinstance(closure, MaxwellStefanClosure) and closure.n_species != n:
            errors['closure.diffusivities'] = [f"SpeciesCount: {closure.n_species}x{closure.n_species} "
                                               f"diffusivities for a mixture of {n} species"]

        initial = data['initial']
        if len(initial.q) > frame.n_free:
            errors['initial.q'] = [f"SpeciesCount: {len(initial.q)} q-profiles given, "
                                   f"a mixture of {n} species has {frame.n_free}"]
        try:
            varrho, q, v = initial.fields(grid, frame.n_free)
        except ValueError as e:
            errors['initial'] = [f"GridMismatch: {e}"]
        else:
            low, high = spec.interval
            inside = (varrho > low) & (varrho < high)
            if not np.all(inside):
                worst = float(varrho[~inside][0])
                errors['initial.varrho'] = [f"ThresholdViolation: initial varrho={worst!r} lies outside of the "
                                            f"open interval ({low!r}, {high!r})"]
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
                errors.setdefault('initial', []).append("NonFinite: initial q and v must be finite")

        profiles = data['forces']
        if any(p.kind == 'tabulated' for p in profiles):
            errors['forces'] = ["ForceProfile: forces are prescribed by named profiles, tabulated forces "
                                "cannot be evaluated on the walls"]
        elif len(profiles) not in (0, 1, n):
            errors['forces'] = [f"SpeciesCount: expected 1 or {n} force profiles, got {len(profiles)}"]
        else:
            forces = ForceField(profiles, n)
            t_final = data['time']['t_final']
            times = np.linspace(0.0, t_final, 9)
            defect = forces.boundary_defect(frame, grid.length, times)
            if defect > ADMISSIBILITY_TOL:
                errors['forces'] = [f"ForceBoundaryAdmissibility: the force must be parallel to the ones vector "
                                    f"on the walls, |P b| = {defect:.3e}"]

        reactions = data['reactions']
        if not reactions.is_zero:
            try:
                samples = sample_constraint_states(spec.vbar, REACTION_SAMPLES)
                volume, total = reactions.admissibility_defect(frame, samples)
            except ValueError as e:
                errors['reactions'] = [f"SpeciesCount: {e}"]
            else:
                if volume > ADMISSIBILITY_TOL or total > ADMISSIBILITY_TOL:
                    errors['reactions'] = [f"ReactionAdmissibility: rates must lie in the orthogonal complement "
                                           f"of the ones vector and V̄, max|r·V̄| = {volume:.3e}, "
                                           f"max|r·1| = {total:.3e}"]

        if errors:
            raise ValidationError(errors)

    @post_load
    def make(self, data, **kwargs):
        return RunConfig(**data)


# Creating a Global Schema for reuse-purposes
GLOBAL_SCHEMA = RunConfigSchema()


class RunConfig(MixflowObject):
    """
    A fully validated scenario

    document holds the JSON document the config was loaded from, the base of config_hash.
    """

    def __init__(self, **kwargs):
        self._spec = kwargs['mixture']
        self._frame = build_frame(self._spec.vbar)
        self._closure = kwargs['closure']
        self._grid = kwargs['grid']
        self._dt = float(kwargs['time']['dt'])
        self._t_final = float(kwargs['time']['t_final'])
        self._picard_tol = float(kwargs['picard']['tol'])
        self._max_sweeps = int(kwargs['picard']['max_sweeps'])
        self._viscosity = float(kwargs['viscosity'])
        self._initial = kwargs['initial']
        self._forces = ForceField(kwargs.get('forces') or [], self._spec.n_species)
        self._reactions = kwargs['reactions']
        self._output = dict(kwargs['output'])
        self._diagnostics = dict(kwargs['diagnostics'])
        self._document = None
        self._hash = ""

    def __repr__(self) -> str:
        info = [
            ('n_species', self._spec.n_species),
            ('n_cells', self._grid.n_cells),
            ('dt', self._dt),
            ('n_steps', self.n_steps),
            ('hash', self._hash[:12])
        ]
        return '<RunConfig {}>'.format(' '.join('%s=%s' % t for t in info))

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        """
        Validates a scenario document and creates the RunConfig

        :param data: The decoded document
        :return: The newly constructed RunConfig
        :raises InvalidConfigError: If a validation rule is violated, messages are keyed by path
        """
        if not isinstance(data, dict):
            raise errs.ConfigParseError(f"The scenario document must be an object, got {type(data).__name__}")
        try:
            instance = GLOBAL_SCHEMA.load(data, unknown=EXCLUDE)

        except ValidationError as e:
            utils.log_validation_traceback(cls, e)
            raise errs.InvalidConfigError(f"Failed to perform validation in '{cls.__name__}'",
                                          messages=e.messages) from e

        except errs.MixflowError:
            raise

        except Exception as e:
            utils.log_traceback(msg=f"Traceback in '{cls.__name__}' Validation:",
                                suffix=f"Failed to initialise {cls.__name__} due to exception:\n"
                                       f"{sys.exc_info()[0].__name__}: {e}!")
            raise errs.ConfigError(f"Failed to initialise {cls.__name__} due to exception:\n"
                                   f"{sys.exc_info()[0].__name__}: {e}!") from e

        instance._document = copy.deepcopy(data)
        instance._hash = config_hash(data)
        logger.debug(f"[CONFIG] Loaded {instance!r}")
        return instance

    def with_output(self, directory: typing.Optional[str] = None,
                    cadence: typing.Optional[int] = None) -> 'RunConfig':
        """ Returns the config with the output directory or cadence replaced """
        document = copy.deepcopy(self._document)
        output = document.setdefault('output', {})
        if directory is not None:
            output['directory'] = str(directory)
        if cadence is not None:
            output['cadence'] = int(cadence)
        return RunConfig.from_dict(document)

    @property
    def spec(self):
        return self._spec

    @property
    def frame(self):
        return self._frame

    @property
    def closure(self):
        return self._closure

    @property
    def grid(self) -> Grid1D:
        return self._grid

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def t_final(self) -> float:
        return self._t_final

    @property
    def n_steps(self) -> int:
        """ Number of steps of size dt reaching t_final, the last one may end slightly past it """
        return max(1, int(math.ceil(self._t_final / self._dt - 1e-9)))

    @property
    def picard_tol(self) -> float:
        return self._picard_tol

    @property
    def max_sweeps(self) -> int:
        return self._max_sweeps

    @property
    def viscosity(self) -> float:
        return self._viscosity

    @property
    def initial(self) -> InitialData:
        return self._initial

    @property
    def forces(self) -> ForceField:
        return self._forces

    @property
    def reactions(self):
        return self._reactions

    @property
    def output_directory(self) -> str:
        return self._output['directory']

    @property
    def cadence(self) -> int:
        return int(self._output['cadence'])

    @property
    def precision(self) -> int:
        return int(self._output['precision'])

    @property
    def exponent(self) -> float:
        return float(self._diagnostics['exponent'])

    @property
    def alpha(self) -> float:
        return float(self._diagnostics['alpha'])

    @property
    def document(self) -> dict:
        return copy.deepcopy(self._document) if self._document is not None else {}

    @property
    def config_hash(self) -> str:
        return self._hash


def parse_config(text: typing.Union[str, bytes]) -> RunConfig:
    """
    Parses and validates a JSON scenario document

    :param text: The document
    :return: The validated RunConfig
    :raises ConfigParseError: If the text is not a JSON object
    :raises InvalidConfigError: If a validation rule is violated
    """
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, TypeError) as e:
        logger.error(f"[CONFIG] Malformed scenario document: {e}")
        raise errs.ConfigParseError(f"Malformed scenario document: {e}") from e
    return RunConfig.from_dict(data)


def load_config(path: typing.Union[str, pathlib.Path]) -> RunConfig:
    """ Reads the file at path and parses it with parse_config """
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"[CONFIG] Could not read {path}: {e}")
        raise errs.ConfigParseError(f"Could not read the scenario document {path}: {e}") from e
    logger.info(f"[CONFIG] Loading scenario {path}")
    return parse_config(text)
