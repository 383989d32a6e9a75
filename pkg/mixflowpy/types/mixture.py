import logging
import sys
import typing

import numpy as np
from marshmallow import Schema, fields, post_load, validates_schema, ValidationError, EXCLUDE
from marshmallow.validate import Length, Range

from .mixflow_object import MixflowObject, frozen
from .. import utils
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('MixtureSpec', 'MixtureSpecSchema', 'check_volumes')


def check_volumes(vbar: np.ndarray) -> None:
    """
    Rejects partial specific volumes that are not strictly positive or that are parallel to 1ᴺ

    :param vbar: Partial specific volumes
    :raises DegenerateVolumes: If max|V̄ᵢ/V̄₁ − 1| is below the parallelism tolerance
    """
    vbar = np.asarray(vbar, dtype=float)
    if vbar.ndim != 1 or vbar.size < 2:
        raise errs.DegenerateVolumes("DegenerateVolumes: at least two partial specific volumes are required")
    if np.any(vbar <= 0) or not np.all(np.isfinite(vbar)):
        raise errs.DegenerateVolumes("DegenerateVolumes: partial specific volumes must be finite and positive")
    if np.max(np.abs(vbar / vbar[0] - 1.0)) <= settings.get_float("PARALLEL_TOL"):
        raise errs.DegenerateVolumes(f"DegenerateVolumes: V̄={vbar.tolist()} is parallel to the ones vector, "
                                     f"the admissible density interval would be empty")


class MixtureSpecSchema(Schema):
    # Validations to check for the datatype and that it's passed correctly =>
    # will throw exception 'ValidationError' in case of an faulty data parsing

    vbar = fields.List(fields.Float(validate=Range(min=0, min_inclusive=False)),
                       required=True, validate=Length(min=2))
    molar_mass = fields.List(fields.Float(validate=Range(min=0, min_inclusive=False)), load_default=None)
    mu_ref = fields.List(fields.Float(), load_default=None)
    theta_kb = fields.Float(load_default=1.0, validate=Range(min=0, min_inclusive=False))
    n_species = fields.Int(load_default=None)

    @validates_schema
    def check_species(self, data, **kwargs):
        n = len(data['vbar'])
        errors = {}
        if data.get('n_species') is not None and data['n_species'] != n:
            errors['n_species'] = [f"n_species={data['n_species']} does not match len(vbar)={n}"]
        for key in ('molar_mass', 'mu_ref'):
            if data.get(key) is not None and len(data[key]) != n:
                errors[key] = [f"Expected {n} entries, got {len(data[key])}"]
        try:
            check_volumes(data['vbar'])
        except errs.DegenerateVolumes as e:
            errors['vbar'] = [str(e)]
        if errors:
            raise ValidationError(errors)

    @post_load
    def make(self, data, **kwargs):
        """
        Returns an instance of the class using the loaded data

        :param data: Dictionary that will be passed to the initialisation
        :param kwargs: Additional Data that can be passed
        :return: A new MixtureSpec Object
        """
        data.pop('n_species', None)
        return MixtureSpec(**data)


# Creating a Global Schema for reuse-purposes
GLOBAL_SCHEMA = MixtureSpecSchema()


class MixtureSpec(MixflowObject):
    """
    Represents the constituents of an isothermal incompressible mixture

    Immutable; the thresholds of the total mass density follow from the volumes as
    varrho_min = 1/max V̄ and varrho_max = 1/min V̄.
    """

    def __init__(self,
                 vbar: typing.Sequence[float],
                 molar_mass: typing.Optional[typing.Sequence[float]] = None,
                 mu_ref: typing.Optional[typing.Sequence[float]] = None,
                 theta_kb: float = 1.0):
        check_volumes(vbar)
        self._vbar = frozen(vbar)
        n = self._vbar.size
        self._molar_mass = frozen(np.ones(n) if molar_mass is None else molar_mass)
        self._mu_ref = frozen(np.zeros(n) if mu_ref is None else mu_ref)
        self._theta_kb = float(theta_kb)

        if self._molar_mass.shape != (n,) or np.any(self._molar_mass <= 0):
            raise ValueError("molar_mass must hold one positive entry per species")
        if self._mu_ref.shape != (n,):
            raise ValueError("mu_ref must hold one entry per species")
        if not self._theta_kb > 0:
            raise ValueError("theta_kb must be positive")

        self._free_energy = None
        self._tangent_basis = None

    def __repr__(self) -> str:
        info = [
            ('n_species', self.n_species),
            ('vbar', self.vbar.tolist()),
            ('theta_kb', self.theta_kb)
        ]
        return '<MixtureSpec {}>'.format(' '.join('%s=%s' % t for t in info))

    @classmethod
    def from_dict(cls, data: dict):
        """
        Creates an instance of the MixtureSpec Class with the passed data

        :param data: Dict for the data that should be passed
        :return: The newly constructed MixtureSpec Instance
        """
        try:
            instance = GLOBAL_SCHEMA.load(data, unknown=EXCLUDE)

        except ValidationError as e:
            utils.log_validation_traceback(cls, e)
            raise errs.InvalidConfigError(f"Failed to perform validation in '{cls.__name__}'",
                                          messages=e.messages) from e

        except Exception as e:
            utils.log_traceback(msg=f"Traceback in '{cls.__name__}' Validation:",
                                suffix=f"Failed to initialise {cls.__name__} due to exception:\n"
                                       f"{sys.exc_info()[0].__name__}: {e}!")
            raise errs.ConfigError(f"Failed to initialise {cls.__name__} due to exception:\n"
                                   f"{sys.exc_info()[0].__name__}: {e}!") from e
        else:
            return instance

    def to_dict(self) -> dict:
        return {
            'vbar': self.vbar.tolist(),
            'molar_mass': self.molar_mass.tolist(),
            'mu_ref': self.mu_ref.tolist(),
            'theta_kb': self.theta_kb
        }

    @property
    def n_species(self) -> int:
        return int(self._vbar.size)

    @property
    def vbar(self) -> np.ndarray:
        return self._vbar

    @property
    def molar_mass(self) -> np.ndarray:
        return self._molar_mass

    @property
    def mu_ref(self) -> np.ndarray:
        return self._mu_ref

    @property
    def theta_kb(self) -> float:
        return self._theta_kb

    @property
    def varrho_min(self) -> float:
        return float(1.0 / np.max(self._vbar))

    @property
    def varrho_max(self) -> float:
        return float(1.0 / np.min(self._vbar))

    @property
    def interval(self) -> typing.Tuple[float, float]:
        return self.varrho_min, self.varrho_max

    @property
    def free_energy(self):
        """ The free energy k behind the FreeEnergy interface, the ideal mixture form by default """
        if self._free_energy is None:
            from ..thermo.free_energy import IdealMixtureEnergy
            self._free_energy = IdealMixtureEnergy(self._molar_mass, self._mu_ref, self._theta_kb)
        return self._free_energy

    @property
    def tangent_basis(self) -> np.ndarray:
        """ N×(N−1) orthonormal basis of {V̄}⊥ """
        if self._tangent_basis is None:
            from scipy.linalg import null_space
            basis = null_space(self._vbar[None, :])
            basis.setflags(write=False)
            self._tangent_basis = basis
        return self._tangent_basis

    def margin(self, varrho) -> np.ndarray:
        """
        Distance to the thresholds m(ϱ) = min{1 − ϱ/ϱ_max, ϱ/ϱ_min − 1}

        :param varrho: Scalar or array of total mass densities
        :return: Array of the same shape
        """
        varrho = np.asarray(varrho, dtype=float)
        return np.minimum(1.0 - varrho / self.varrho_max, varrho / self.varrho_min - 1.0)
