import abc
import logging

import numpy as np

from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('FreeEnergy', 'IdealMixtureEnergy', 'check_density', 'free_energy_k', 'grad_k', 'hessian_k')


class FreeEnergy(abc.ABC):
    """
    Positively homogeneous convex free energy k(ρ) of the partial mass densities

    Implementations accept stacked densities of shape (..., N) and assume ρ > 0 has been checked.
    """

    @abc.abstractmethod
    def value(self, rho: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def gradient(self, rho: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def hessian(self, rho: np.ndarray) -> np.ndarray:
        ...

    def molar_fractions(self, rho: np.ndarray) -> np.ndarray:
        """ Fractions used for the density floor check, mass fractions unless overridden """
        return rho / np.sum(rho, axis=-1, keepdims=True)


class IdealMixtureEnergy(FreeEnergy):
    """
    k(ρ) = Σ μᵢ^ref ρᵢ + θk_B Σ nᵢ ln yᵢ  with nᵢ = ρᵢ/mᵢ and yᵢ = nᵢ/Σnⱼ
    """

    def __init__(self, molar_mass, mu_ref, theta_kb: float):
        self._molar_mass = np.asarray(molar_mass, dtype=float)
        self._mu_ref = np.asarray(mu_ref, dtype=float)
        self._theta_kb = float(theta_kb)

    def __repr__(self) -> str:
        return f"<IdealMixtureEnergy theta_kb={self._theta_kb} molar_mass={self._molar_mass.tolist()}>"

    def molar_fractions(self, rho: np.ndarray) -> np.ndarray:
        n = rho / self._molar_mass
        return n / np.sum(n, axis=-1, keepdims=True)

    def value(self, rho: np.ndarray) -> np.ndarray:
        n = rho / self._molar_mass
        log_y = np.log(n) - np.log(np.sum(n, axis=-1, keepdims=True))
        return rho @ self._mu_ref + self._theta_kb * np.sum(n * log_y, axis=-1)

    def gradient(self, rho: np.ndarray) -> np.ndarray:
        n = rho / self._molar_mass
        log_y = np.log(n) - np.log(np.sum(n, axis=-1, keepdims=True))
        return self._mu_ref + self._theta_kb * log_y / self._molar_mass

    def hessian(self, rho: np.ndarray) -> np.ndarray:
        n = rho / self._molar_mass
        total = np.sum(n, axis=-1)
        inv_m = 1.0 / self._molar_mass
        diag = self._theta_kb / (self._molar_mass * rho)
        hess = -self._theta_kb * np.multiply.outer(1.0 / total, np.outer(inv_m, inv_m))
        idx = np.arange(rho.shape[-1])
        hess[..., idx, idx] += diag
        return hess


def check_density(spec, rho) -> np.ndarray:
    """
    Validates partial densities against positivity and the molar fraction floor

    :param spec: MixtureSpec
    :param rho: Densities of shape (..., N)
    :return: rho as float array
    :raises NonpositiveDensity: If any ρᵢ ≤ 0 or a fraction drops below DENSITY_FLOOR
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape[-1] != spec.n_species:
        raise ValueError(f"Expected {spec.n_species} partial densities, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        logger.error(f"[THERMO] Non-positive partial density, min={np.min(rho)}")
        raise errs.NonpositiveDensity(f"Partial mass densities must be strictly positive, min={np.min(rho)}")
    floor = settings.get_float("DENSITY_FLOOR")
    y_min = np.min(spec.free_energy.molar_fractions(rho))
    if y_min < floor:
        logger.error(f"[THERMO] Molar fraction {y_min:.3e} below the density floor {floor:.0e}")
        raise errs.NonpositiveDensity(f"Molar fraction {y_min:.3e} is below the density floor {floor:.0e}")
    return rho


def free_energy_k(spec, rho) -> np.ndarray:
    """ Free energy k(ρ); scalar for a single composition, array for stacked ones """
    rho = check_density(spec, rho)
    return spec.free_energy.value(rho)


def grad_k(spec, rho) -> np.ndarray:
    """ Analytic gradient ∇k(ρ) """
    rho = check_density(spec, rho)
    return spec.free_energy.gradient(rho)


def hessian_k(spec, rho) -> np.ndarray:
    """ Analytic Hessian D²k(ρ), singular along ρ """
    rho = check_density(spec, rho)
    return spec.free_energy.hessian(rho)
