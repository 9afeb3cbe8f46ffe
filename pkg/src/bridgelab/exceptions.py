"""Exceptions raised by bridgelab.

Every exception carries the process exit status the command line maps it to.
"""


class BridgeLabError(Exception):
    """Base class for all bridgelab errors."""

    exit_code = 1


class ConfigError(BridgeLabError):
    """Invalid configuration file or command-line override."""

    exit_code = 2


class GridError(BridgeLabError, ValueError):
    """Invalid grid parameters, or an operation called on the wrong grid mode."""

    exit_code = 2


class ScalingError(BridgeLabError):
    """The action is too large relative to hbar for the exponential representation."""


class FisherDegenerate(BridgeLabError):
    """The Fisher information integral vanishes (flat density)."""


class DiscreteGaugeError(BridgeLabError, ValueError):
    """Imaginary gauge parameter index outside the supported set."""


class ConsistencyError(BridgeLabError):
    """Two independent computation paths disagree beyond tolerance."""


class ZeroMarginal(BridgeLabError):
    """A bridge marginal vanishes somewhere on the grid."""


class NonConvergence(BridgeLabError):
    """The Sinkhorn iteration reached its iteration ceiling."""

    exit_code = 3

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class AntiHeatUnstable(BridgeLabError):
    """The anti-heat branch amplified high frequencies beyond the cutoff budget."""


class VarianceCollapse(BridgeLabError):
    """A Gaussian anti-heat step would drive the variance to zero or below."""


class NoValidRoot(BridgeLabError):
    """No root of the width identity keeps the bridge width positive."""


class NegativeWidth(BridgeLabError):
    """A closed-form bridge width is not positive for the requested parameters."""


class InvariantFailure(BridgeLabError):
    """One or more hard invariants failed in an experiment."""


class NormalizationError(BridgeLabError, ValueError):
    """A density or wave function is not normalized to one."""
