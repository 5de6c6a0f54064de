"""Exception hierarchy shared by the simulator, analysis and CLI layers."""


class WeakProbeError(Exception):
    """Base class for all package errors."""


class ConfigError(WeakProbeError, ValueError):
    """Invalid physical or numerical configuration."""


class NumericalError(WeakProbeError, ArithmeticError):
    """A computation reached a numerically degenerate state."""


class DegeneratePropagatorError(NumericalError):
    """The accumulated propagator has no nonzero singular value."""


class DeadBranchError(NumericalError):
    """A trajectory step produced an outcome of (numerically) zero probability."""


class NoInformationError(NumericalError):
    """A measurement outcome with zero fidelity carries no result direction."""


class ReconstructionError(NumericalError):
    """Tomographic reconstruction is impossible for the supplied directions."""
