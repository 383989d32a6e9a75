"""
Implicit linear blocks of one Picard sweep: the coupled (q, ζ) block and the momentum equation

In one space dimension the Neumann problem for ζ forces the face flux dζ_x + A·q_x − v* − h to
vanish on every face. Substituting ζ_x into the q-flux M̃q_x + Aζ_x gives the reduced parabolic
system R_q(q − qⁿ)/dt − D[K Gq] = g + D[A(v* + h)/d] with the SPD core K = M̃ − A⊗A/d, after which
ζ solves the Neumann problem with a zero-mean constraint.
"""
import logging
import typing

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve, norm as sparse_norm

from .stencils import face_average, face_gradient, divergence, gradient_from_faces
from .. import settings
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('solve_q_zeta', 'solve_zeta', 'solve_momentum', 'isochoric_flux_residual', 'zeta_face_source')


def _check_solution(matrix, solution, rhs, block: str) -> float:
    residual = matrix @ solution - rhs
    scale = float(np.max(np.abs(rhs), initial=0.0)) + sparse_norm(matrix, np.inf) * float(np.max(np.abs(solution), initial=0.0))
    error = float(np.max(np.abs(residual), initial=0.0))
    relative = error / scale if scale > 0 else error
    tol = settings.get_float("LINEAR_RESIDUAL_TOL")
    if not np.all(np.isfinite(solution)) or not relative <= tol:
        logger.error(f"[BLOCKS] {block} solve failed, relative residual {relative:.3e}")
        raise errs.SingularBlock(f"The {block} system is numerically singular, relative residual {relative:.3e} > {tol:.0e}")
    logger.debug(f"[BLOCKS] {block} relative residual {relative:.3e}")
    return relative


def _check_positive_d(d_scal: np.ndarray) -> None:
    if not np.all(d_scal > 0):
        worst = float(np.min(d_scal))
        logger.error(f"[BLOCKS] Non-positive coefficient d = {worst:.3e}")
        raise errs.DegenerateClosure(f"The closure yields d = V̄·M·V̄ = {worst:.3e} <= 0")


def zeta_face_source(a_vec, q, v_star, rhs_h, dx: float) -> np.ndarray:
    """ w − A·Gq at the interior faces with w the face mean of v* + h """
    w_faces = face_average(np.asarray(v_star, dtype=float) + np.asarray(rhs_h, dtype=float))
    if q.shape[1] == 0:
        return w_faces
    a_faces = face_average(a_vec)
    return w_faces - np.sum(a_faces * face_gradient(q, dx), axis=1)


def solve_zeta(d_scal, face_source, dx: float) -> np.ndarray:
    """
    Solves −D[d Gζ] = −D[s] with homogeneous Neumann conditions and zero cell mean

    The singular Neumann matrix is bordered by the mean constraint; the returned field has its
    discrete mean removed.

    :param d_scal: Cell values of d > 0
    :param face_source: Interior face values of s
    :param dx: Cell width
    :return: ζ in the cells
    :raises DegenerateClosure: If any d ≤ 0
    :raises SingularBlock: If the relative residual exceeds LINEAR_RESIDUAL_TOL
    """
    d_scal = np.asarray(d_scal, dtype=float)
    _check_positive_d(d_scal)
    n = d_scal.size
    coef = face_average(d_scal) / dx ** 2

    main = np.pad(coef, (1, 0)) + np.pad(coef, (0, 1))
    laplace = sparse.diags([-coef, main, -coef], [-1, 0, 1], shape=(n, n), format='csc')
    rhs = -divergence(np.asarray(face_source, dtype=float), dx)

    ones = sparse.csc_matrix(np.ones((n, 1)))
    bordered = sparse.bmat([[laplace, ones], [ones.T, None]], format='csc')
    solution = spsolve(bordered, np.append(rhs, 0.0))
    zeta = solution[:n] - np.mean(solution[:n])

    _check_solution(laplace, zeta, rhs, 'zeta')
    return zeta


def solve_q_zeta(r_q,
                 m_tilde,
                 a_vec,
                 d_scal,
                 rhs_g,
                 rhs_h,
                 v_star,
                 q_n,
                 dt: float,
                 dx: float) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    One implicit Euler step of the coupled (q, ζ) block

    :param r_q: Cell values of R_q, shape (n, N−2, N−2)
    :param m_tilde: Cell values of M̃, shape (n, N−2, N−2)
    :param a_vec: Cell values of A, shape (n, N−2)
    :param d_scal: Cell values of d, shape (n,)
    :param rhs_g: Source of the q-equation, shape (n, N−2)
    :param rhs_h: Source of the ζ-equation, shape (n,)
    :param v_star: Transport velocity, shape (n,)
    :param q_n: q at the old time level, shape (n, N−2)
    :return: (q, ζ) with ζ of zero cell mean
    :raises DegenerateClosure: If any d ≤ 0
    :raises SingularBlock: If a linear solve misses LINEAR_RESIDUAL_TOL
    """
    d_scal = np.asarray(d_scal, dtype=float)
    _check_positive_d(d_scal)
    n = d_scal.size
    q_n = np.asarray(q_n, dtype=float).reshape(n, -1)
    m = q_n.shape[1]

    if m == 0:
        q = q_n.copy()
    else:
        r_q = np.asarray(r_q, dtype=float).reshape(n, m, m)
        d_faces = face_average(d_scal)
        a_faces = face_average(np.asarray(a_vec, dtype=float).reshape(n, m))
        k_faces = face_average(np.asarray(m_tilde, dtype=float).reshape(n, m, m)) \
            - a_faces[:, :, None] * a_faces[:, None, :] / d_faces[:, None, None]
        w_faces = face_average(np.asarray(v_star, dtype=float) + np.asarray(rhs_h, dtype=float))

        stiff = k_faces / dx ** 2
        diag_blocks = r_q / dt
        diag_blocks[:-1] += stiff
        diag_blocks[1:] += stiff

        a_idx, b_idx = np.meshgrid(np.arange(m), np.arange(m), indexing='ij')
        cells = np.arange(n)[:, None, None] * m
        upper = np.arange(n - 1)[:, None, None] * m
        rows = np.concatenate([(cells + a_idx).ravel(), (upper + a_idx).ravel(), (upper + m + a_idx).ravel()])
        cols = np.concatenate([(cells + b_idx).ravel(), (upper + m + b_idx).ravel(), (upper + b_idx).ravel()])
        data = np.concatenate([diag_blocks.ravel(), (-stiff).ravel(), (-np.swapaxes(stiff, 1, 2)).ravel()])
        matrix = sparse.coo_matrix((data, (rows, cols)), shape=(n * m, n * m)).tocsc()

        rhs = (np.einsum('iab,ib->ia', r_q, q_n) / dt
               + np.asarray(rhs_g, dtype=float).reshape(n, m)
               + divergence(a_faces * (w_faces / d_faces)[:, None], dx))
        solution = spsolve(matrix, rhs.ravel())
        _check_solution(matrix, solution, rhs.ravel(), 'q')
        q = np.asarray(solution).reshape(n, m)

    zeta = solve_zeta(d_scal, zeta_face_source(a_vec, q, v_star, rhs_h, dx), dx)
    return q, zeta


def isochoric_flux_residual(d_scal, a_vec, q, zeta, v_star, rhs_h, dx: float) -> np.ndarray:
    """
    Face residual w − dGζ − A·Gq of the volume-production identity v + V̄·J = 0
    """
    q = np.asarray(q, dtype=float).reshape(len(zeta), -1)
    source = zeta_face_source(a_vec, q, v_star, rhs_h, dx)
    return source - face_average(np.asarray(d_scal, dtype=float)) * face_gradient(np.asarray(zeta, dtype=float), dx)


def solve_momentum(varrho,
                   zeta,
                   rhs_f,
                   v_n,
                   dt: float,
                   dx: float,
                   viscosity: float) -> np.ndarray:
    """
    Implicit Euler step of ϱ∂tv − ηv_xx + ζ_x = f with v = 0 on the walls

    The wall condition uses odd ghost cells v₋₁ = −v₀; ζ_x is the cell mean of the face gradients.

    :return: The new velocity
    :raises SingularBlock: If the tridiagonal solve misses LINEAR_RESIDUAL_TOL
    """
    if not viscosity > 0:
        raise ValueError("The viscosity must be positive")
    varrho = np.asarray(varrho, dtype=float)
    n = varrho.size
    zeta_x = gradient_from_faces(face_gradient(np.asarray(zeta, dtype=float), dx))
    coef = viscosity / dx ** 2

    diag = varrho / dt + 2.0 * coef
    diag[0] += coef
    diag[-1] += coef
    banded = np.zeros((3, n))
    banded[0, 1:] = -coef
    banded[1] = diag
    banded[2, :-1] = -coef

    rhs = varrho * np.asarray(v_n, dtype=float) / dt + np.asarray(rhs_f, dtype=float) - zeta_x
    try:
        v = solve_banded((1, 1), banded, rhs)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"[BLOCKS] Momentum solve failed: {e}")
        raise errs.SingularBlock(f"The momentum system could not be solved: {e}") from e

    matrix = sparse.diags([banded[2, :-1], banded[1], banded[0, 1:]], [-1, 0, 1], format='csr')
    _check_solution(matrix, v, rhs, 'momentum')
    return v
