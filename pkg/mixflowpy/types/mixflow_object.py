import numpy as np


class MixflowObject:
    """
    Base Class for all mixflowpy domain objects
    """

    def __str__(self) -> str:
        return repr(self)

    def __repr__(self) -> str:
        # Automatically creating a list of tuples for all values
        info = [
            (attribute.lstrip('_'), _short(value))
            for attribute, value in self.__dict__.items()
            if not attribute.startswith('__')
        ]

        return '<{} {}>'.format(self.__class__.__name__, ' '.join('%s=%s' % t for t in info))


def _short(value):
    if isinstance(value, np.ndarray):
        if value.size <= 6:
            return np.array2string(value, precision=6, separator=',')
        return f"array(shape={value.shape})"
    return value


def frozen(value, dtype=float) -> np.ndarray:
    """ Returns a read-only float copy of the passed array-like """
    arr = np.array(value, dtype=dtype)
    arr.setflags(write=False)
    return arr
