import logging
import sys
import traceback
import typing

import numpy as np
from marshmallow import ValidationError

logger = logging.getLogger(__name__)

__all__ = ('dispatch_func_if_exists', 'log_traceback', 'log_validation_traceback',
           'convert_value', 'format_number')


def dispatch_func_if_exists(obj: object,
                            func_name: str,
                            func_args: typing.Optional[typing.Union[list, tuple]] = (),
                            func_kwargs: typing.Optional[dict] = None) -> typing.Any:
    """
    Calls the hook `func_name` on `obj` if the object defines it

    A hook that raises does not stop the run; the exception is logged with its traceback.

    :param obj: Object the hook is looked up on
    :param func_name: Name of the hook, for example 'on_step'
    :param func_args: Positional arguments of the hook
    :param func_kwargs: Keyword arguments of the hook
    :return: The return value of the hook, None if it is missing or failed
    """
    hook = getattr(obj, func_name, None)
    if hook is None:
        return None
    if not callable(hook):
        raise TypeError(f"{type(obj).__name__}.{func_name} is not callable!")

    try:
        return hook(*(func_args or ()), **(func_kwargs or {}))
    except Exception as e:
        log_traceback(msg=f"[HOOK] '{func_name}' raised while the simulation was running:",
                      suffix=f"{type(e).__name__}: {e}")
        return None


def log_traceback(level: typing.Union[str, None] = 'error',
                  msg: str = 'Traceback: ',
                  suffix: typing.Optional[str] = None):
    """
    Logs the traceback of the exception currently being handled

    :param level: Name of the logging level. '' or None prints the traceback to stderr instead
    :param msg: Message placed before the traceback
    :param suffix: Line appended after the traceback
    """
    if not level:
        traceback.print_exc()
        return

    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.ERROR
    tb_str = "".join(traceback.format_tb(sys.exc_info()[2]))
    logger.log(numeric, f"{msg}\n{tb_str} {suffix or ''}\n")


def log_validation_traceback(cls: typing.Any, e: ValidationError):
    """
    Logs every field a schema rejected while loading a scenario section or a domain type

    :param cls: Class that was being created
    :param e: The raised ValidationError
    """
    from ..exception import flatten_messages

    lines = "\n".join(f"    {key}: {err}" for key, err in flatten_messages(e.messages))
    log_traceback(msg=f"[VALIDATION] '{cls.__name__}' rejected the passed data",
                  suffix=f"ValidationError:\n{lines}\n")


def convert_value(dtype: typing.Any, value: typing.Any, default: typing.Any = None) -> typing.Any:
    """
    Converts `value` with `dtype`, falling back to `default` for None or a failed conversion

    :param dtype: Callable used for the conversion, for example float
    :param value: Raw value, typically a string from the environment
    :param default: Value returned when the conversion is not possible
    :return: The converted value or the default
    """
    if value is None:
        return default
    try:
        return dtype(value)
    except (TypeError, ValueError):
        return default


def format_number(value: typing.Any, precision: int = 17) -> str:
    """
    Formats a number locale-independently with the given count of significant digits

    :param value: Number that should be formatted. Integers are written as integers
    :param precision: Significant digits
    :return: The formatted string
    """
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), f".{precision}g")
