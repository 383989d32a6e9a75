"""
Named spatial profiles, body forces b(x, t) and reaction models r(ρ)

Forces are split along the frame as b = Σ b̃ℓ ξℓ + b̂ V̄ + b̄ 1ᴺ; reactions take values in
{1ᴺ, V̄}⊥ and enter the q-equation as Πᵀr.
"""
import logging
import typing

import numpy as np
from marshmallow import Schema, fields, post_load, validates_schema, ValidationError
from marshmallow.validate import OneOf, Range

from ..thermo.basis import decompose_vector
from ..types.mixflow_object import MixflowObject, frozen

logger = logging.getLogger(__name__)

__all__ = ('Profile', 'ProfileSchema', 'ForceField', 'ReactionModel', 'ReactionSchema',
           'decompose_force', 'sample_constraint_states', 'PROFILE_KINDS', 'REACTION_KINDS')

PROFILE_KINDS = ('zero', 'constant', 'uniform', 'bump', 'cosine', 'sine', 'tabulated')
REACTION_KINDS = ('zero', 'constant', 'linear_relaxation')


class Profile(MixflowObject):
    """
    Scalar profile u(x, t) on [0, L]

    zero, constant/uniform (value), bump (base + amplitude·exp(−((x − center)/width)²)),
    cosine (base + amplitude·cos(mode·πx/L)), sine (base + amplitude·sin(mode·πx/L)) and
    tabulated (one value per cell). A nonzero frequency multiplies the varying part by cos(2π·frequency·t).
    """

    def __init__(self,
                 kind: str = 'zero',
                 value: float = 0.0,
                 base: float = 0.0,
                 amplitude: float = 0.0,
                 center: float = 0.5,
                 width: float = 0.1,
                 mode: int = 1,
                 frequency: float = 0.0,
                 values: typing.Optional[typing.Sequence[float]] = None):
        if kind not in PROFILE_KINDS:
            raise ValueError(f"Unknown profile kind '{kind}'")
        if kind == 'tabulated' and values is None:
            raise ValueError("A tabulated profile needs values")
        self._kind = kind
        self._value = float(value)
        self._base = float(base)
        self._amplitude = float(amplitude)
        self._center = float(center)
        self._width = float(width)
        self._mode = int(mode)
        self._frequency = float(frequency)
        self._values = None if values is None else frozen(values)

    def __repr__(self) -> str:
        return f"<Profile kind={self._kind}>"

    @property
    def kind(self) -> str:
        return self._kind

    def evaluate(self, x: np.ndarray, length: float, t: float = 0.0) -> np.ndarray:
        """
        Evaluates the profile at the points x

        :raises ValueError: If a tabulated profile does not match the number of points
        """
        x = np.asarray(x, dtype=float)
        factor = np.cos(2.0 * np.pi * self._frequency * t) if self._frequency else 1.0
        if self._kind == 'zero':
            return np.zeros_like(x)
        if self._kind in ('constant', 'uniform'):
            return np.full_like(x, self._value * factor)
        if self._kind == 'bump':
            return self._base + factor * self._amplitude * np.exp(-((x - self._center) / self._width) ** 2)
        if self._kind == 'cosine':
            return self._base + factor * self._amplitude * np.cos(self._mode * np.pi * x / length)
        if self._kind == 'sine':
            return self._base + factor * self._amplitude * np.sin(self._mode * np.pi * x / length)

        if self._values.shape != x.shape:
            raise ValueError(f"Tabulated profile holds {self._values.size} values, expected {x.size}")
        return self._values * factor

    def to_dict(self) -> dict:
        data = {'kind': self._kind}
        if self._kind in ('constant', 'uniform'):
            data['value'] = self._value
        elif self._kind == 'tabulated':
            data['values'] = self._values.tolist()
        elif self._kind != 'zero':
            data.update(base=self._base, amplitude=self._amplitude, mode=self._mode)
            if self._kind == 'bump':
                data.update(center=self._center, width=self._width)
        if self._frequency:
            data['frequency'] = self._frequency
        return data


class ProfileSchema(Schema):
    kind = fields.Str(load_default='zero', validate=OneOf(PROFILE_KINDS))
    value = fields.Float(load_default=0.0)
    base = fields.Float(load_default=0.0)
    amplitude = fields.Float(load_default=0.0)
    center = fields.Float(load_default=0.5)
    width = fields.Float(load_default=0.1, validate=Range(min=0, min_inclusive=False))
    mode = fields.Int(load_default=1, validate=Range(min=0))
    frequency = fields.Float(load_default=0.0)
    values = fields.List(fields.Float(), load_default=None)

    @validates_schema
    def check_values(self, data, **kwargs):
        if data['kind'] == 'tabulated' and not data.get('values'):
            raise ValidationError("A tabulated profile needs a non-empty list of values", field_name='values')

    @post_load
    def make(self, data, **kwargs):
        return Profile(**data)


class ForceField(MixflowObject):
    """
    Body force per species, one Profile each
    """

    def __init__(self, profiles: typing.Sequence[Profile], n_species: int):
        profiles = list(profiles)
        if not profiles:
            profiles = [Profile('zero')]
        if len(profiles) == 1:
            profiles = profiles * n_species
        if len(profiles) != n_species:
            raise ValueError(f"Expected 1 or {n_species} force profiles, got {len(profiles)}")
        self._profiles = tuple(profiles)
        self._n_species = int(n_species)

    def __repr__(self) -> str:
        return f"<ForceField kinds={[p.kind for p in self._profiles]}>"

    @property
    def profiles(self) -> typing.Tuple[Profile, ...]:
        return self._profiles

    @property
    def is_zero(self) -> bool:
        return all(p.kind == 'zero' for p in self._profiles)

    def evaluate(self, x: np.ndarray, length: float, t: float = 0.0) -> np.ndarray:
        """ b(x, t) with shape (len(x), N) """
        return np.stack([p.evaluate(x, length, t) for p in self._profiles], axis=-1)

    def boundary_defect(self, frame, length: float, times=(0.0,)) -> float:
        """ max |𝒫_{1⊥} b| on both walls; admissible forces are parallel to 1ᴺ there """
        walls = np.array([0.0, length])
        return max(float(np.max(np.abs(self.evaluate(walls, length, t) @ frame.proj_perp_ones))) for t in times)

    def to_list(self) -> list:
        return [p.to_dict() for p in self._profiles]


def decompose_force(frame, b: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ (b̃, b̂, b̄) of stacked forces (..., N) """
    return decompose_vector(frame, b)


class ReactionModel(MixflowObject):
    """
    Reaction rates r(ρ) with values in {1ᴺ, V̄}⊥

    zero; constant (fixed vector); linear_relaxation (r = −rate·𝒫(ρ − equilibrium) with 𝒫 the
    orthogonal projection onto {1ᴺ, V̄}⊥).
    """

    def __init__(self,
                 kind: str = 'zero',
                 values: typing.Optional[typing.Sequence[float]] = None,
                 rate: float = 0.0,
                 equilibrium: typing.Optional[typing.Sequence[float]] = None):
        if kind not in REACTION_KINDS:
            raise ValueError(f"Unknown reaction kind '{kind}'")
        self._kind = kind
        self._values = None if values is None else frozen(values)
        self._rate = float(rate)
        self._equilibrium = None if equilibrium is None else frozen(equilibrium)
        if kind == 'constant' and self._values is None:
            raise ValueError("A constant reaction needs values")
        if kind == 'linear_relaxation' and self._equilibrium is None:
            raise ValueError("A relaxation reaction needs an equilibrium composition")

    def __repr__(self) -> str:
        return f"<ReactionModel kind={self._kind}>"

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def is_zero(self) -> bool:
        return self._kind == 'zero'

    def evaluate(self, frame, rho: np.ndarray) -> np.ndarray:
        """ r(ρ) for stacked densities (..., N) """
        rho = np.asarray(rho, dtype=float)
        if self._kind == 'zero':
            return np.zeros_like(rho)
        if self._kind == 'constant':
            return np.broadcast_to(self._values, rho.shape).copy()
        return -self._rate * (rho - self._equilibrium) @ frame.proj_perp_ones_vbar

    def admissibility_defect(self, frame, samples: np.ndarray) -> typing.Tuple[float, float]:
        """ (max |r·V̄|, max |r·1ᴺ|) over the sampled states """
        rates = self.evaluate(frame, samples)
        return float(np.max(np.abs(rates @ frame.vbar))), float(np.max(np.abs(np.sum(rates, axis=-1))))

    def to_dict(self) -> dict:
        data = {'kind': self._kind}
        if self._values is not None:
            data['values'] = self._values.tolist()
        if self._kind == 'linear_relaxation':
            data.update(rate=self._rate, equilibrium=self._equilibrium.tolist())
        return data


class ReactionSchema(Schema):
    kind = fields.Str(load_default='zero', validate=OneOf(REACTION_KINDS))
    values = fields.List(fields.Float(), load_default=None)
    rate = fields.Float(load_default=0.0, validate=Range(min=0))
    equilibrium = fields.List(fields.Float(validate=Range(min=0, min_inclusive=False)), load_default=None)

    @validates_schema
    def check_parameters(self, data, **kwargs):
        if data['kind'] == 'constant' and data.get('values') is None:
            raise ValidationError("A constant reaction needs values", field_name='values')
        if data['kind'] == 'linear_relaxation' and data.get('equilibrium') is None:
            raise ValidationError("A relaxation reaction needs an equilibrium composition", field_name='equilibrium')

    @post_load
    def make(self, data, **kwargs):
        return ReactionModel(**data)


def sample_constraint_states(vbar, count: int = 64, seed: int = 0) -> np.ndarray:
    """
    Deterministic positive compositions on ρ·V̄ = 1

    :param vbar: Partial specific volumes
    :param count: Number of samples
    :param seed: Seed of the generator
    :return: Array (count, N)
    """
    vbar = np.asarray(vbar, dtype=float)
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.05, 1.0, size=(count, vbar.size))
    return raw / (raw @ vbar)[:, None]
