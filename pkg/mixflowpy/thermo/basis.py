"""
Basis and dual basis of the chemical potential space

The basis vectors are stored as rows: xi[ℓ] for ℓ < N−2 span {1ᴺ, V̄}⊥, xi[N−2] = V̄ and
xi[N−1] = 1ᴺ. The dual basis satisfies xi[i]·eta[j] = δᵢⱼ.
"""
import logging
import typing

import numpy as np

from ..types.mixflow_object import MixflowObject, frozen
from ..types.mixture import check_volumes
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('Frame', 'build_frame', 'decompose_vector', 'assemble_vector')


class Frame(MixflowObject):
    """
    Basis/dual-basis pair with the projections used by the change of variables
    """

    def __init__(self, xi: np.ndarray, eta: np.ndarray, proj_perp_ones_vbar: np.ndarray):
        n = xi.shape[0]
        self._n_species = n
        self._xi = frozen(xi)
        self._eta = frozen(eta)
        self._pi_matrix = frozen(xi[:n - 2].T.reshape(n, n - 2))
        self._proj_perp_ones = frozen(np.eye(n) - np.ones((n, n)) / n)
        self._proj_perp_ones_vbar = frozen(proj_perp_ones_vbar)

    def __repr__(self) -> str:
        info = [
            ('n_species', self.n_species),
            ('vbar', self.vbar.tolist()),
            ('condition_number', self.condition_number)
        ]
        return '<Frame {}>'.format(' '.join('%s=%s' % t for t in info))

    @property
    def n_species(self) -> int:
        return self._n_species

    @property
    def n_free(self) -> int:
        """ Number of q-coordinates, N−2 """
        return self._n_species - 2

    @property
    def xi(self) -> np.ndarray:
        return self._xi

    @property
    def eta(self) -> np.ndarray:
        return self._eta

    @property
    def vbar(self) -> np.ndarray:
        return self._xi[-2]

    @property
    def pi_matrix(self) -> np.ndarray:
        return self._pi_matrix

    @property
    def proj_perp_ones(self) -> np.ndarray:
        return self._proj_perp_ones

    @property
    def proj_perp_ones_vbar(self) -> np.ndarray:
        return self._proj_perp_ones_vbar

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self._xi))

    @property
    def biorthogonality_residual(self) -> float:
        return float(np.max(np.abs(self._xi @ self._eta.T - np.eye(self._n_species))))


def _orthonormal_complement(vbar: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
    n = vbar.size
    u_ones = np.ones(n) / np.sqrt(n)
    u_vbar = vbar - (vbar @ u_ones) * u_ones
    u_vbar /= np.linalg.norm(u_vbar)
    span = np.stack([u_ones, u_vbar])

    free = []
    # Gram-Schmidt seeded by the canonical unit vectors, twice for round-off
    for k in range(n):
        if len(free) == n - 2:
            break
        vec = np.zeros(n)
        vec[k] = 1.0
        for _ in range(2):
            basis = np.vstack([span] + [f[None, :] for f in free])
            vec = vec - basis.T @ (basis @ vec)
        norm = np.linalg.norm(vec)
        if norm > 1e-8:
            free.append(vec / norm)

    free = np.array(free).reshape(n - 2, n)
    return free, span


def build_frame(vbar, n_species: typing.Optional[int] = None) -> Frame:
    """
    Builds the basis ξ¹…ξᴺ with ξᴺ = 1ᴺ, ξᴺ⁻¹ = V̄ and its dual basis

    The free vectors ξ¹…ξᴺ⁻² are an orthonormal basis of {1ᴺ, V̄}⊥ obtained deterministically by
    Gram-Schmidt from the canonical unit vectors.

    :param vbar: Partial specific volumes, all positive and not parallel to 1ᴺ
    :param n_species: Optional species count checked against len(vbar)
    :return: The Frame
    :raises DegenerateVolumes: If V̄ is a multiple of 1ᴺ
    :raises SingularBasis: If the basis matrix has condition number above BASIS_COND_LIMIT
    """
    vbar = np.asarray(vbar, dtype=float).reshape(-1)
    if n_species is not None and int(n_species) != vbar.size:
        raise ValueError(f"Expected {n_species} partial specific volumes, got {vbar.size}")
    if vbar.size < 2:
        raise ValueError("A mixture needs at least two species")
    check_volumes(vbar)

    n = vbar.size
    free, span = _orthonormal_complement(vbar)
    xi = np.vstack([free, vbar[None, :], np.ones((1, n))])

    cond = np.linalg.cond(xi)
    if not np.isfinite(cond) or cond > settings.get_float("BASIS_COND_LIMIT"):
        logger.error(f"[BASIS] Basis matrix condition number {cond:.3e} exceeds the limit")
        raise errs.SingularBasis(f"Basis matrix for V̄={vbar.tolist()} has condition number {cond:.3e}")

    eta = np.linalg.solve(xi, np.eye(n)).T
    frame = Frame(xi, eta, np.eye(n) - span.T @ span)
    logger.debug(f"[BASIS] Built frame N={n} cond={cond:.3e} "
                 f"biorthogonality residual={frame.biorthogonality_residual:.2e}")
    return frame


def decompose_vector(frame: Frame, w) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Splits w = Σ qℓ ξℓ + b̂ V̄ + b̄ 1ᴺ

    Accepts stacked vectors of shape (..., N).

    :return: (q_part (..., N−2), vbar_part (...), ones_part (...))
    """
    w = np.asarray(w, dtype=float)
    coeffs = w @ frame.eta.T
    n = frame.n_species
    return coeffs[..., :n - 2], coeffs[..., n - 2], coeffs[..., n - 1]


def assemble_vector(frame: Frame, q_part, vbar_part, ones_part) -> np.ndarray:
    """ Inverse of decompose_vector """
    q_part = np.asarray(q_part, dtype=float)
    vbar_part = np.asarray(vbar_part, dtype=float)
    ones_part = np.asarray(ones_part, dtype=float)
    out = q_part @ frame.xi[:frame.n_free] if frame.n_free else np.zeros(vbar_part.shape + (frame.n_species,))
    return out + vbar_part[..., None] * frame.vbar + ones_part[..., None]
