"""Exception types shared across the package."""


class DeitError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(DeitError, ValueError):
    """A parameter container violates one of its invariants."""


class ConfigError(DeitError, ValueError):
    """A configuration file or override could not be parsed/validated."""


class DegenerateSteadyStateError(DeitError, RuntimeError):
    """The Liouvillian null space is multi-dimensional; no unique steady state.

    Callers that need a state in such a configuration must time-evolve from
    an explicit initial condition instead.
    """


class StepSizeError(DeitError, ValueError):
    """Requested integrator step exceeds the stability bound."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(
            f"time step {dt:.3e} s exceeds stability bound; use dt <= {dt_max:.3e} s"
        )


class IntegrationDivergedError(DeitError, RuntimeError):
    """The integrator produced a non-finite state."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"integration produced a non-finite state at t = {t:.6e} s")


class LinearityError(DeitError, RuntimeError):
    """Finite-probe response failed its linearity cross-check."""


class NoCrossingError(DeitError, RuntimeError):
    """A bracketing search found no sign change over the given interval."""


class ZeroEnergyError(DeitError, ValueError):
    """An envelope carries too little energy for a delay estimate."""
