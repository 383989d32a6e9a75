"""
Finite-volume stencils on a uniform cell-centered grid

Cell fields have shape (n,) or (n, k). Interior faces i+½ (i = 0…n−2) carry face values and
gradients; the two boundary faces carry zero flux.
"""
import numpy as np

__all__ = ('face_average', 'face_gradient', 'divergence', 'central_gradient', 'face_velocity',
           'velocity_gradient', 'gradient_from_faces')


def face_average(u: np.ndarray) -> np.ndarray:
    """ Arithmetic mean of the two neighbouring cells at every interior face """
    return 0.5 * (u[:-1] + u[1:])


def face_gradient(u: np.ndarray, dx: float) -> np.ndarray:
    """ (u_{i+1} − u_i)/dx at every interior face """
    return (u[1:] - u[:-1]) / dx


def divergence(flux: np.ndarray, dx: float) -> np.ndarray:
    """
    Cell divergence of a flux given at the interior faces

    :param flux: Interior face values of shape (n−1,) or (n−1, k)
    :return: (F_{i+½} − F_{i−½})/dx with F = 0 on both boundary faces
    """
    pad = [(1, 1)] + [(0, 0)] * (flux.ndim - 1)
    full = np.pad(flux, pad)
    return (full[1:] - full[:-1]) / dx


def central_gradient(u: np.ndarray, dx: float) -> np.ndarray:
    """ Central difference with zero-gradient ghost cells """
    pad = [(1, 1)] + [(0, 0)] * (u.ndim - 1)
    ext = np.pad(u, pad, mode='edge')
    return (ext[2:] - ext[:-2]) / (2.0 * dx)


def face_velocity(v: np.ndarray) -> np.ndarray:
    """ Velocity at all n+1 faces, zero on the walls """
    return np.pad(face_average(v), (1, 1))


def velocity_gradient(v: np.ndarray, dx: float) -> np.ndarray:
    """ v_x in the cells from the face velocities """
    faces = face_velocity(v)
    return (faces[1:] - faces[:-1]) / dx


def gradient_from_faces(face_values: np.ndarray) -> np.ndarray:
    """ Cell mean of the two adjacent face gradients, boundary faces counted as zero """
    pad = [(1, 1)] + [(0, 0)] * (face_values.ndim - 1)
    full = np.pad(face_values, pad)
    return 0.5 * (full[1:] + full[:-1])
