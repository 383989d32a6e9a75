"""
Exceptions used specifically for the module mixflow.py

---

Under MIT License

Copyright © 2021 mixflow.py contributors

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""


__all__ = (
    'MixflowError',

    'ThermoError', 'DegenerateVolumes', 'SingularBasis', 'NonpositiveDensity',
    'NewtonDivergence', 'ThresholdViolation', 'ConstraintViolation',

    'ClosureError', 'DegenerateClosure',

    'SolverError', 'CflViolation', 'ThresholdBreach', 'SingularBlock', 'PicardDivergence',

    'ConfigError', 'ConfigParseError', 'InvalidConfigError',

    'OutputError')


class MixflowError(Exception):
    """
    Base Exception in the mixflowpy library

    All other exceptions inherit from this base class
    """
    exc_msg = None

    def __init__(self, *args):
        if self.exc_msg is None or args:
            if args:
                self.exc_msg = ", ".join([str(arg) for arg in args])
            else:
                self.exc_msg = f"Exception occurred in the package mixflowpy"

        super().__init__(self.exc_msg)

    def __str__(self):
        return self.exc_msg

    def __repr__(self):
        return "<{} exc_msg={}>".format(self.__class__.__name__, self.exc_msg)

    def __call__(self):
        return str(self)


# Thermodynamics #


class ThermoError(MixflowError):
    """ General Exception in the thermodynamic core """
    exc_msg = "Encountered an Exception in the thermodynamic core"


class DegenerateVolumes(ThermoError):
    """ The partial specific volumes are parallel to the ones vector """
    exc_msg = "Partial specific volumes must not be a multiple of the ones vector"


class SingularBasis(ThermoError):
    """ The assembled basis matrix is numerically singular """
    exc_msg = "The basis matrix is numerically singular"


class NonpositiveDensity(ThermoError):
    """ A partial density is not strictly positive or a molar fraction is below the density floor """
    exc_msg = "Partial mass densities must be strictly positive"


class NewtonDivergence(ThermoError):
    """ A Newton iteration did not reach the requested tolerance """
    exc_msg = "Newton iteration failed to converge"


class ThresholdViolation(ThermoError):
    """ The total mass density lies outside of the admissible interval """
    exc_msg = "Total mass density outside of the admissible interval"


class ConstraintViolation(ThermoError):
    """ The volume constraint rho·V̄ = 1 is violated """
    exc_msg = "The volume constraint rho·V̄ = 1 is violated"


# Transport #


class ClosureError(MixflowError):
    """ General Exception in the transport closure """
    exc_msg = "Encountered an Exception in the transport closure"


class DegenerateClosure(ClosureError):
    """ The reduced coefficient d = V̄·M·V̄ is not positive """
    exc_msg = "The closure yields a non-positive coefficient d = V̄·M·V̄"


# Solver #


class SolverError(MixflowError):
    """ General Exception while marching the transformed system """
    exc_msg = "Encountered an Exception in the solver"


class CflViolation(SolverError):
    """ The time step violates the CFL restriction of the upwind transport """
    exc_msg = "Time step violates the CFL restriction dt·max|v|/dx <= 0.9"


class ThresholdBreach(SolverError):
    """ The total mass density reached the guard band of a threshold """
    def __init__(self, *args, cell=None, x=None, varrho=None, bound=None, time=None):
        self.cell = cell
        self.x = x
        self.varrho = varrho
        self.bound = bound
        self.time = time
        if args:
            arg = "".join([str(arg) for arg in args])
        else:
            arg = f"Total mass density {varrho} in cell {cell} reached the {bound} threshold guard band"
        super().__init__(arg)


class SingularBlock(SolverError):
    """ A linear block of the time step could not be solved accurately """
    exc_msg = "The assembled linear system is numerically singular"


class PicardDivergence(SolverError):
    """ The Picard increments grew for consecutive sweeps """
    def __init__(self, *args, increments=None):
        self.increments = list(increments) if increments is not None else []
        if args:
            arg = "".join([str(arg) for arg in args])
        else:
            arg = f"Picard iteration diverged, increments: {self.increments}"
        super().__init__(arg)


# Configuration #


class ConfigError(MixflowError):
    """ General Exception while reading a scenario """
    exc_msg = "Failed to read the scenario configuration"


class ConfigParseError(ConfigError):
    """ The scenario document is not well-formed """
    exc_msg = "The scenario document is not well-formed"


class InvalidConfigError(ConfigError):
    """ The scenario document violates validation rules """
    def __init__(self, *args, messages=None):
        self.messages = messages or {}
        if args:
            arg = "".join([str(arg) for arg in args])
        else:
            arg = "The scenario document failed validation"

        if self.messages:
            arg += "\n" + "\n".join(f"  {key}: {rule}" for key, rule in flatten_messages(self.messages))
        super().__init__(arg)


class OutputError(MixflowError):
    """ Emitting the run outputs failed """
    exc_msg = "Failed to write the run outputs"


def flatten_messages(messages, prefix: str = ""):
    """
    Flattens a nested marshmallow message dict into (key path, message) tuples

    :param messages: Dict, list or str as returned by ValidationError.messages
    :param prefix: Key path of the current level
    :return: List of tuples
    """
    flat = []
    if isinstance(messages, dict):
        for key, value in messages.items():
            path = f"{prefix}.{key}" if prefix else str(key)
            flat.extend(flatten_messages(value, path))
    elif isinstance(messages, (list, tuple)):
        for item in messages:
            if isinstance(item, (dict, list, tuple)):
                flat.extend(flatten_messages(item, prefix))
            else:
                flat.append((prefix or "_schema", str(item)))
    else:
        flat.append((prefix or "_schema", str(messages)))
    return flat
