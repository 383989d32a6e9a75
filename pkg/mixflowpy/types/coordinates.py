import numpy as np

from .mixflow_object import MixflowObject, frozen

__all__ = ('ReducedCoords', 'ChemicalState')


class ReducedCoords(MixflowObject):
    """
    Pointwise unconstrained coordinates (varrho, q, zeta)

    q holds N−2 components and is empty for binary mixtures.
    """

    def __init__(self, varrho: float, q=(), zeta: float = 0.0):
        self._varrho = float(varrho)
        self._q = frozen(np.reshape(q, (-1,)))
        self._zeta = float(zeta)

    @property
    def varrho(self) -> float:
        return self._varrho

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def zeta(self) -> float:
        return self._zeta


class ChemicalState(MixflowObject):
    """
    Physical state (mu, p, rho) with rho on the volume constraint surface
    """

    def __init__(self, mu, p: float, rho):
        self._mu = frozen(mu)
        self._p = float(p)
        self._rho = frozen(rho)

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def p(self) -> float:
        return self._p

    @property
    def rho(self) -> np.ndarray:
        return self._rho
