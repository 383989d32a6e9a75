import os
from importlib import resources

from .utils.utils import convert_value

__all__ = ('load_env', 'get_float', 'get_int')

# Used when the env file could not be loaded
_FALLBACK = {
    "NEWTON_TOL": 1e-12,
    "NEWTON_ACCEPT_TOL": 1e-10,
    "NEWTON_MAX_ITER": 100,
    "DENSITY_FLOOR": 1e-14,
    "PARALLEL_TOL": 1e-12,
    "BASIS_COND_LIMIT": 1e12,
    "IMPLICIT_M_TOL": 1e-12,
    "THRESHOLD_TOL": 1e-12,
    "PICARD_TOL": 1e-9,
    "PICARD_MAX_SWEEPS": 50,
    "PICARD_DIVERGENCE_SWEEPS": 3,
    "THRESHOLD_GUARD": 1e-10,
    "CFL_LIMIT": 0.9,
    "LINEAR_RESIDUAL_TOL": 1e-11,
    "FD_STEP": 1e-6,
    "HOLDER_ALPHA": 0.25,
    "NORM_EXPONENT": 6,
    "OUTPUT_PRECISION": 17,
}


def load_env():
    from dotenv import load_dotenv

    path = 'mixflowpy.env'
    env_path = str(resources.files(__package__).joinpath(path))
    # Fetching the package origin and loading the mixflowpy.env file
    load_dotenv(env_path)

    test_var = os.getenv("NEWTON_TOL")

    if test_var is None:
        print(f"[MIXFLOWPY] Failed to load .env file! Expected {env_path} to exist!")


def get_float(name: str) -> float:
    """
    Returns the setting as float, falling back to the built-in default if it is unset or malformed

    :param name: Name of the environment variable
    :return: The converted value
    """
    return convert_value(float, os.getenv(name), default=float(_FALLBACK[name]))


def get_int(name: str) -> int:
    """
    Returns the setting as int, falling back to the built-in default if it is unset or malformed

    :param name: Name of the environment variable
    :return: The converted value
    """
    return convert_value(int, os.getenv(name), default=int(_FALLBACK[name]))
