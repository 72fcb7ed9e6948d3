"""Exception types raised by the solvers and the oracle."""


class DdehbError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(DdehbError):
    """Invalid or inconsistent run configuration."""


class MaxIterations(DdehbError):
    """Nonlinear solve did not converge within the iteration budget."""

    def __init__(self, message, residual_norm=None, iterations=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class SingularJacobian(DdehbError):
    """Normal equations of the least-squares step are ill-conditioned."""


class DivergedToEquilibrium(DdehbError):
    """The cycle solve collapsed onto a constant (equilibrium) solution."""


class NoRootInBracket(DdehbError):
    """Exponent refinement stagnated without locating a singular point."""


class DegenerateNullspace(DdehbError):
    """Two near-equal smallest singular values: multiple eigenfunction."""


class NormalizationSingular(DdehbError):
    """Normalization functional vanished before rescaling."""


class NonFiniteState(DdehbError):
    """Time integration produced a non-finite state."""

    def __init__(self, message, t_last=None):
        super().__init__(message)
        self.t_last = t_last


class NoOscillationDetected(DdehbError):
    """Too few zero crossings to estimate a period."""


class PeriodDrift(DdehbError):
    """Crossing intervals spread too widely for a single period estimate."""


class MonodromyIllConditioned(DdehbError):
    """Unit Floquet multiplier missing from the monodromy spectrum."""


class NonConvergentAdjoint(DdehbError):
    """Backward adjoint integration failed to reach a periodic profile."""
