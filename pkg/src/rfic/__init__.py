"""Random-field Ising chain: free energy, maximal energy and the constants of
their large-coupling expansion, computed by Monte Carlo."""
__version__ = "0.1.0"

from .disorder import DisorderLaw, SeededStream, parse_law
from .stats import Estimate
from .transfer import BoundaryCondition, log_partition, free_energy_estimate
from .maxenergy import max_energy, ergodic_max_energy, joint_densities, SpinConfig
from .extrema import decompose, GammaDecomposition, stretch_max_energy
from .renewal import kappa_hat, kappa_tilde, kappa_hat_2, lindley_cdf_renewal, patched_measure
from .harness import Budget, run_sweep, ExpansionReport

__all__ = [
    "DisorderLaw", "SeededStream", "parse_law", "Estimate", "BoundaryCondition",
    "log_partition", "free_energy_estimate", "max_energy", "ergodic_max_energy",
    "joint_densities", "SpinConfig", "decompose", "GammaDecomposition", "stretch_max_energy",
    "kappa_hat", "kappa_tilde", "kappa_hat_2", "lindley_cdf_renewal", "patched_measure",
    "Budget", "run_sweep", "ExpansionReport",
]
