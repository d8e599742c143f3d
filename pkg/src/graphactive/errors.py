"""Exception types shared across the package.

The CLI maps these onto its exit-code taxonomy: usage errors exit 1,
data errors exit 2, numeric errors exit 3.
"""


class GraphActiveError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(GraphActiveError):
    """A file failed to parse or violated a format invariant."""


class ParameterError(GraphActiveError, ValueError):
    """An argument is outside its documented domain."""


class ConnectivityError(GraphActiveError):
    """The similarity graph is disconnected.

    Carries the component sizes so callers can report what went wrong.
    """

    def __init__(self, component_sizes):
        sizes = sorted((int(s) for s in component_sizes), reverse=True)
        self.component_sizes = sizes
        super().__init__(
            "graph is disconnected: %d components with sizes %s"
            % (len(sizes), sizes)
        )


class ConvergenceError(GraphActiveError):
    """An iterative solver did not reach its tolerance within budget."""

    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class PoolExhaustedError(GraphActiveError):
    """No unlabeled candidates remain to query."""
