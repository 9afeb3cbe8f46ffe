"""bridgelab - Schrödinger bridges and nonlinear gauge transformations on a 1-D grid."""

from importlib.metadata import version

__version__ = version("bridgelab")

from bridgelab.bridge import BridgeProblem, interior_state, solve_schrodinger_system
from bridgelab.config import ExperimentConfig, build_config
from bridgelab.experiments import ExperimentRecord, run_experiment
from bridgelab.functionals import energies, heisenberg_product, rotated_energies
from bridgelab.grid import Grid1D
from bridgelab.propagator import propagate
from bridgelab.state import HydroState, apply_nlgt, from_wavefunction, to_wavefunction

__all__ = [
    "__version__",
    "BridgeProblem",
    "interior_state",
    "solve_schrodinger_system",
    "ExperimentConfig",
    "build_config",
    "ExperimentRecord",
    "run_experiment",
    "energies",
    "heisenberg_product",
    "rotated_energies",
    "Grid1D",
    "propagate",
    "HydroState",
    "apply_nlgt",
    "from_wavefunction",
    "to_wavefunction",
]
