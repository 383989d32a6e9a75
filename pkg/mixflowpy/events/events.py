import logging
import typing
from functools import wraps

from ..utils import dispatch_func_if_exists

logger = logging.getLogger(__name__)

__all__ = ('EventHandler', 'EVENTS')

# name -> arguments the hook is called with
EVENTS = {
    'on_start': ('state', 'config'),
    'on_step': ('record', 'state'),
    'on_picard_sweep': ('sweep', 'increment', 'energy'),
    'on_breach': ('error',),
    'on_finish': ('series',),
}


class EventHandler:
    """
    Hooks of a simulation run

    A hook is either registered with the decorator `@simulation.event()`, defined as a method
    of a Simulation subclass, or defined on the `call_obj` passed at creation. The time loop
    calls them in this order: on_start once, on_picard_sweep after every Picard sweep, on_step
    after every accepted step, on_breach if ϱ reaches a threshold and on_finish at the end.
    """
    def __init__(self, call_obj: object = None):
        self._call_obj = call_obj if call_obj is not None else self

    def event(self, func: typing.Callable = None):
        """
        Decorator used for registering a hook. The function name selects the event

        :param func: Function to register when used without parentheses, `@simulation.event`
        :raises ValueError: If the function name is not one of EVENTS
        """
        def decorator(func_: typing.Callable):
            if not callable(func_):
                raise TypeError(f"Event {func_!r} is not callable")
            if func_.__name__ not in EVENTS:
                raise ValueError(f"Unknown event '{func_.__name__}', expected one of {', '.join(EVENTS)}")

            @wraps(func_)
            def hook(*args, **kwargs):
                return func_(*args, **kwargs)

            setattr(self, func_.__name__, hook)
            logger.debug(f"[EVENTS] {func_.__name__}({', '.join(EVENTS[func_.__name__])}) registered")
            return func_

        return decorator if func is None else decorator(func)

    def _dispatch(self, name: str, *args) -> None:
        dispatch_func_if_exists(self._call_obj, name, args)

    def dispatch_on_start(self, state, config) -> None:
        self._dispatch('on_start', state, config)

    def dispatch_on_step(self, record, state) -> None:
        self._dispatch('on_step', record, state)

    def dispatch_on_picard_sweep(self, sweep, increment, energy) -> None:
        self._dispatch('on_picard_sweep', sweep, increment, energy)

    def dispatch_on_breach(self, error) -> None:
        self._dispatch('on_breach', error)

    def dispatch_on_finish(self, series) -> None:
        self._dispatch('on_finish', series)
