class ConfigError(ValueError):
    """Invalid scenario or module configuration."""


class SimulationFault(RuntimeError):
    """Numerical breakdown (NaN/inf) inside the closed loop."""


class PlanningError(RuntimeError):
    """The trajectory QP has no feasible solution for the requested horizon."""
