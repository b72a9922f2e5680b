"""Exception hierarchy shared by all bitrdm modules.

The CLI maps these onto exit codes: usage problems exit 1, anything
derived from :class:`DataError`/:class:`ShapeError`/:class:`ParameterError`
exits 2, and :class:`ConvergenceError` exits 3.
"""


class BitRdmError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BitRdmError):
    """Dimension or length mismatch between inputs."""


class DataError(BitRdmError):
    """Input values violate a contract (range, labels, degeneracy)."""


class ParameterError(BitRdmError):
    """A parameter is out of its valid range or a config is inconsistent."""


class ConvergenceError(BitRdmError):
    """An iterative numerical method failed to converge."""


class DisconnectedGraphError(DataError):
    """The graph is not connected; carries the component count."""

    def __init__(self, n_components: int):
        super().__init__(
            f"graph is disconnected: zero eigenvalue has multiplicity "
            f"{n_components} (one connected component required)"
        )
        self.n_components = n_components
