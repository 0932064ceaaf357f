"""Simulation of a quadrotor landing on a moving ground platform.

Modules follow the flight stack: ``wind`` and ``plant`` model the world,
``sensors`` and ``estimator`` track the platform, ``planner`` (on top of
``qpsolver``) builds minimum-jerk references, ``controller`` tracks them and
``mission`` sequences the flight. ``sim``, ``metrics`` and ``cli`` form the
scenario harness.
"""

from landsim.errors import ConfigError, PlanningError, SimulationFault

__version__ = "0.1.0"
__all__ = ["ConfigError", "PlanningError", "SimulationFault", "__version__"]
