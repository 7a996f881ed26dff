"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by :mod:`longoil`."""


class ConfigError(SimulationError, ValueError):
    """A scenario configuration file could not be parsed or validated.

    ``key`` and ``line`` point at the offending entry when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class PreconditionError(SimulationError, ValueError):
    """A physical or numerical precondition of an operation is violated.

    Raised for grids that are too coarse, step sizes too large for the
    integrator, mismatched grids, aliasing AOM shifts and similar.
    """


class NormalizationError(PreconditionError):
    """Histogram baseline is zero, so normalized values are undefined."""
