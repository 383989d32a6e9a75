"""
Finite-difference surrogates of the space-time norms of a run

For a field f with snapshots fᵏ at times tₖ, weights wₖ = tₖ − tₖ₋₁ (t₋₁ = 0) and cell width dx:

    lp        (Σₖ wₖ Σᵢ dx|fᵢᵏ|ᵖ)^{1/p}
    grad_lp   same for the face differences (fᵢ₊₁ − fᵢ)/dx
    hess_lp   same for the second differences (fᵢ₊₁ − 2fᵢ + fᵢ₋₁)/dx² at interior cells
    dt_lp     same for the time differences (fᵏ − fᵏ⁻¹)/wₖ
    sup_lp    maxₖ (Σᵢ dx|fᵢᵏ|ᵖ)^{1/p}
    sup_grad_lp  maxₖ of the spatial norm of the face differences

Vector fields use the Euclidean norm per cell. Every quantity is a running sum or maximum, so it
never decreases when further snapshots are added.
"""
import logging
import typing

import numpy as np

from ..types.mixflow_object import MixflowObject
from .. import settings

logger = logging.getLogger(__name__)

__all__ = ('FieldNorms', 'StateNorms', 'state_norms', 'criterion_exponent', 'CriteriaTracker',
           'extension_criteria')

FIELDS = ('q', 'zeta', 'v')


def _magnitude(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.abs(values)
    return np.linalg.norm(values, axis=-1)


def _holder(values: np.ndarray, positions: np.ndarray, alpha: float) -> float:
    """ max over pairs i ≠ j of |fᵢ − fⱼ|/|xᵢ − xⱼ|^α """
    if len(values) < 2:
        return 0.0
    values = np.asarray(values, dtype=float).reshape(len(values), -1)
    diff = np.linalg.norm(values[:, None, :] - values[None, :, :], axis=-1)
    dist = np.abs(positions[:, None] - positions[None, :])
    off = dist > 0
    return float(np.max(diff[off] / dist[off] ** alpha))


class FieldNorms(MixflowObject):
    """
    Running norm accumulators of one field
    """

    def __init__(self, dx: float, p: float):
        self._dx = float(dx)
        self._p = float(p)
        self._sum_lp = 0.0
        self._sum_grad = 0.0
        self._sum_hess = 0.0
        self._sum_dt = 0.0
        self._sup_lp = 0.0
        self._sup_grad = 0.0
        self._time = 0.0
        self._previous = None

    def __repr__(self) -> str:
        return f"<FieldNorms lp={self.lp:.6g} sup_lp={self.sup_lp:.6g}>"

    def _space(self, magnitude: np.ndarray) -> float:
        return float(np.sum(magnitude ** self._p) * self._dx)

    def update(self, time: float, values) -> None:
        values = np.asarray(values, dtype=float)
        weight = time - self._time
        if weight < 0:
            raise ValueError("Snapshots must be passed in increasing time order")
        dx = self._dx

        space = self._space(_magnitude(values))
        grad = self._space(_magnitude((values[1:] - values[:-1]) / dx)) if len(values) > 1 else 0.0
        hess = self._space(_magnitude((values[2:] - 2.0 * values[1:-1] + values[:-2]) / dx ** 2)) \
            if len(values) > 2 else 0.0

        self._sum_lp += weight * space
        self._sum_grad += weight * grad
        self._sum_hess += weight * hess
        if self._previous is not None and weight > 0:
            self._sum_dt += weight * self._space(_magnitude((values - self._previous) / weight))
        self._sup_lp = max(self._sup_lp, space ** (1.0 / self._p))
        self._sup_grad = max(self._sup_grad, grad ** (1.0 / self._p))
        self._time = float(time)
        self._previous = values.copy()

    def _root(self, value: float) -> float:
        return value ** (1.0 / self._p)

    @property
    def lp(self) -> float:
        return self._root(self._sum_lp)

    @property
    def grad_lp(self) -> float:
        return self._root(self._sum_grad)

    @property
    def hess_lp(self) -> float:
        return self._root(self._sum_hess)

    @property
    def dt_lp(self) -> float:
        return self._root(self._sum_dt)

    @property
    def sup_lp(self) -> float:
        return self._sup_lp

    @property
    def sup_grad_lp(self) -> float:
        return self._sup_grad

    @property
    def w_norm(self) -> float:
        """ Surrogate of the W^{2,1}_p norm """
        return self.lp + self.grad_lp + self.hess_lp + self.dt_lp

    def as_dict(self) -> dict:
        return {
            'lp': self.lp,
            'grad_lp': self.grad_lp,
            'hess_lp': self.hess_lp,
            'dt_lp': self.dt_lp,
            'sup_lp': self.sup_lp,
            'sup_grad_lp': self.sup_grad_lp
        }


class StateNorms(MixflowObject):
    """
    FieldNorms of q, ζ and v together with the state-space surrogate 𝒱
    """

    def __init__(self, dx: float, p: float):
        self._fields = {name: FieldNorms(dx, p) for name in FIELDS}

    def __repr__(self) -> str:
        return f"<StateNorms v_norm={self.v_norm:.6g}>"

    def __getitem__(self, name: str) -> FieldNorms:
        return self._fields[name]

    def update(self, state) -> None:
        self._fields['q'].update(state.time, state.q)
        self._fields['zeta'].update(state.time, state.zeta)
        self._fields['v'].update(state.time, state.v)

    @property
    def v_norm(self) -> float:
        """ Sum of all reported quantities over all fields """
        return float(sum(sum(norms.as_dict().values()) for norms in self._fields.values()))

    def as_dict(self) -> dict:
        return {name: norms.as_dict() for name, norms in self._fields.items()}


def state_norms(history: typing.Sequence, p: float, dx: float) -> StateNorms:
    """
    Norm surrogates of a sequence of DiscreteState snapshots

    :param history: Nonempty sequence of states in increasing time order
    :param p: Exponent p > 3
    :param dx: Cell width
    :return: StateNorms
    """
    if not history:
        raise ValueError("state_norms needs a nonempty history")
    norms = StateNorms(dx, p)
    for state in history:
        norms.update(state)
    return norms


def criterion_exponent(p: float) -> float:
    """ z(p) = 3/(p − 2) for 3 < p < 5, 1.01 at p = 5 and 1 for p > 5 """
    if not p > 3:
        raise ValueError(f"The exponent must exceed 3, got {p}")
    if p < 5:
        return 3.0 / (p - 2.0)
    if p == 5:
        return 1.01
    return 1.0


class CriteriaTracker(MixflowObject):
    """
    Incremental extension criteria 𝒩 and 𝒦

    𝒩 = [q]_{α in space} + [q]_{α/2 in time} + sup ‖Gq‖_p + ‖v‖_{zp,p} + ∫[Gv]_α dt
    𝒦 = Σ over q, ζ, v of lp + grad_lp + hess_lp + dt_lp

    The time seminorm of q compares every snapshot with the first one and with the latest
    snapshot at each power-of-two step lag, so at most log₂(steps) + 2 fields are stored.
    """

    def __init__(self, dx: float, p: typing.Optional[float] = None, alpha: typing.Optional[float] = None):
        self._dx = float(dx)
        self._p = float(settings.get_float("NORM_EXPONENT") if p is None else p)
        self._alpha = float(settings.get_float("HOLDER_ALPHA") if alpha is None else alpha)
        if not 0 < self._alpha <= 1:
            raise ValueError(f"The Hölder exponent must lie in (0, 1], got {self._alpha}")
        self._z = criterion_exponent(self._p)
        self._norms = StateNorms(dx, self._p)

        self._holder_space = 0.0
        self._holder_time = 0.0
        self._mixed_v = 0.0
        self._holder_grad_v = 0.0
        self._time = 0.0
        self._count = 0
        self._first_q: typing.Optional[typing.Tuple[float, np.ndarray]] = None
        # level ℓ -> (time, q) of the latest snapshot whose index is a multiple of 2^ℓ
        self._checkpoints: typing.Dict[int, typing.Tuple[float, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"<CriteriaTracker p={self._p} alpha={self._alpha} N={self.N_value:.6g} K={self.K_value:.6g}>"

    @property
    def norms(self) -> StateNorms:
        return self._norms

    @property
    def exponent(self) -> float:
        return self._p

    @property
    def holder_space(self) -> float:
        return self._holder_space

    @property
    def holder_time(self) -> float:
        return self._holder_time

    @property
    def stored_snapshots(self) -> int:
        """ Count of q fields kept for the time seminorm """
        return len(self._checkpoints) + (self._first_q is not None)

    def _update_time_seminorm(self, time: float, q: np.ndarray) -> None:
        exponent = 0.5 * self._alpha
        earlier = list(self._checkpoints.values())
        if self._first_q is not None:
            earlier.append(self._first_q)
        for earlier_time, earlier_q in earlier:
            gap = time - earlier_time
            if gap > 0:
                change = float(np.max(np.linalg.norm(q - earlier_q, axis=-1)))
                self._holder_time = max(self._holder_time, change / gap ** exponent)

        if self._first_q is None:
            self._first_q = (time, q.copy())
        level = 0
        while self._count % (1 << level) == 0 and level <= self._count.bit_length():
            self._checkpoints[level] = (time, q.copy())
            level += 1

    def update(self, state) -> typing.Tuple[float, float]:
        """ Adds a snapshot and returns the current (𝒩, 𝒦) """
        n = state.n_cells
        dx = self._dx
        weight = state.time - self._time
        centers = (np.arange(n) + 0.5) * dx
        q = np.asarray(state.q, dtype=float).reshape(n, -1)
        v = np.asarray(state.v, dtype=float)

        self._norms.update(state)
        if q.shape[1]:
            self._holder_space = max(self._holder_space, _holder(q, centers, self._alpha))
            self._update_time_seminorm(float(state.time), q)

        space_v = float(np.sum(np.abs(v) ** self._p) * dx)
        self._mixed_v += weight * space_v ** self._z
        grad_v = (v[1:] - v[:-1]) / dx
        self._holder_grad_v += weight * _holder(grad_v, centers[:-1] + 0.5 * dx, self._alpha)
        self._time = float(state.time)
        self._count += 1
        return self.N_value, self.K_value

    @property
    def N_value(self) -> float:
        mixed = self._mixed_v ** (1.0 / (self._z * self._p)) if self._mixed_v > 0 else 0.0
        return (self._holder_space + self._holder_time + self._norms['q'].sup_grad_lp
                + mixed + self._holder_grad_v)

    @property
    def K_value(self) -> float:
        return float(sum(self._norms[name].w_norm for name in FIELDS))


def extension_criteria(history: typing.Sequence,
                       p: float,
                       alpha: float,
                       dx: float) -> typing.Tuple[float, float]:
    """
    (𝒩, 𝒦) of a sequence of DiscreteState snapshots

    :param history: States in increasing time order
    :param p: Exponent p > 3
    :param alpha: Hölder exponent in (0, 1]
    :param dx: Cell width
    """
    tracker = CriteriaTracker(dx, p, alpha)
    result = (0.0, 0.0)
    for state in history:
        result = tracker.update(state)
    return result
