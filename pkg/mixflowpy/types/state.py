import typing

import numpy as np
from marshmallow import Schema, fields, post_load
from marshmallow.validate import Range

from .mixflow_object import MixflowObject, frozen

__all__ = ('Grid1D', 'GridSchema', 'DiscreteState')


class GridSchema(Schema):
    n_cells = fields.Int(required=True, validate=Range(min=8))
    length = fields.Float(load_default=1.0, validate=Range(min=0, min_inclusive=False))

    @post_load
    def make(self, data, **kwargs):
        return Grid1D(**data)


class Grid1D(MixflowObject):
    """
    Uniform cell-centered grid on the interval [0, L]
    """

    def __init__(self, n_cells: int, length: float = 1.0):
        if int(n_cells) < 8:
            raise ValueError("A grid needs at least 8 cells")
        if not length > 0:
            raise ValueError("The domain length must be positive")
        self._n_cells = int(n_cells)
        self._length = float(length)
        self._dx = self._length / self._n_cells
        self._x = frozen((np.arange(self._n_cells) + 0.5) * self._dx)

    @property
    def n_cells(self) -> int:
        return self._n_cells

    @property
    def length(self) -> float:
        return self._length

    @property
    def dx(self) -> float:
        return self._dx

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self._n_cells + 1) * self._dx

    def to_dict(self) -> dict:
        return {'n_cells': self._n_cells, 'length': self._length}


class DiscreteState(MixflowObject):
    """
    Grid fields (varrho, q, zeta, v) at time t

    q has shape (n_cells, N−2); every array is stored read-only, so states can be shared freely.
    """

    def __init__(self, varrho, q, zeta, v, time: float = 0.0):
        self._varrho = frozen(varrho)
        n = self._varrho.size
        q = np.asarray(q, dtype=float)
        self._q = frozen(q.reshape(n, -1) if q.size else np.zeros((n, 0)))
        self._zeta = frozen(zeta)
        self._v = frozen(v)
        self._time = float(time)

        if self._zeta.shape != (n,) or self._v.shape != (n,):
            raise ValueError("varrho, zeta and v must have one entry per cell")

    def __repr__(self) -> str:
        info = [
            ('time', self.time),
            ('n_cells', self.n_cells),
            ('n_q', self.q.shape[1])
        ]
        return '<DiscreteState {}>'.format(' '.join('%s=%s' % t for t in info))

    @property
    def varrho(self) -> np.ndarray:
        return self._varrho

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def zeta(self) -> np.ndarray:
        return self._zeta

    @property
    def v(self) -> np.ndarray:
        return self._v

    @property
    def time(self) -> float:
        return self._time

    @property
    def n_cells(self) -> int:
        return int(self._varrho.size)

    def replace(self, **kwargs) -> 'DiscreteState':
        """ Returns a new state with the passed fields exchanged """
        data = {
            'varrho': self._varrho,
            'q': self._q,
            'zeta': self._zeta,
            'v': self._v,
            'time': self._time
        }
        data.update(kwargs)
        return DiscreteState(**data)

    def mass(self, dx: float) -> float:
        return float(np.sum(self._varrho) * dx)

    def max_deviation(self, other: 'DiscreteState') -> float:
        """ Largest absolute difference over all fields """
        parts: typing.List[float] = [
            float(np.max(np.abs(self._varrho - other.varrho))),
            float(np.max(np.abs(self._zeta - other.zeta))),
            float(np.max(np.abs(self._v - other.v)))
        ]
        if self._q.size:
            parts.append(float(np.max(np.abs(self._q - other.q))))
        return max(parts)
