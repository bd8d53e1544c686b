"""Ground states of the averaged dispersion-managed NLS with saturating nonlinearities."""
from .averaging import (
    AveragingMeasure,
    DispersionProfile,
    density_from_profile,
    quadrature,
    uniform_density,
)
from .grid import Grid, SpectralField, make_grid
from .nonlinearity import Problem, h_gradient, hamiltonian, n_gradient, n_value
from .potentials import (
    Potential,
    power,
    saturated_log,
    saturated_rational,
    validate_assumptions,
)
from .solver import SolverConfig, SolveResult, energy_scan, solve, threshold_estimate

__all__ = [
    "AveragingMeasure", "DispersionProfile", "density_from_profile", "quadrature", "uniform_density",
    "Grid", "SpectralField", "make_grid",
    "Problem", "h_gradient", "hamiltonian", "n_gradient", "n_value",
    "Potential", "power", "saturated_log", "saturated_rational", "validate_assumptions",
    "SolverConfig", "SolveResult", "energy_scan", "solve", "threshold_estimate",
]
__version__ = "0.1.0"
