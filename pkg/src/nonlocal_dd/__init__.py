"""Nonlocal horizon-kernel stiffness matrices, spectra and two-subdomain substructuring."""
__version__ = "0.1.0"

from .assembly import (QuadratureSpec, apply_operator, assemble_stiffness, export_matrix,
                       import_matrix, pair_weights)
from .errors import (ConvergenceError, NumericalError, ParameterError, PartitionError,
                     SingularBlockError)
from .grid import Grid, build_grid, neighbors_within
from .kernel import Kernel, make_kernel
from .spectrum import SpectrumReport, extreme_eigenvalues, rayleigh_quotient
from .substructure import (ArrowheadBlocks, Partition, energy_minimizing_extension,
                           partition_two_domain, schur_complement, solve_monolithic,
                           solve_substructured, split_blocks, verify_two_domain_residuals)
from .analysis import (PowerLawFit, SampledFunction, energy_half, fit_min_eigen_exponent,
                       fit_power_law, local_limit_check, nonlocal_energy_p)
from .strips import strip_quantification

__all__ = [
    "QuadratureSpec", "apply_operator", "assemble_stiffness", "export_matrix", "import_matrix",
    "pair_weights", "ConvergenceError", "NumericalError", "ParameterError", "PartitionError",
    "SingularBlockError", "Grid", "build_grid", "neighbors_within", "Kernel", "make_kernel",
    "SpectrumReport", "extreme_eigenvalues", "rayleigh_quotient", "ArrowheadBlocks", "Partition",
    "energy_minimizing_extension", "partition_two_domain", "schur_complement", "solve_monolithic",
    "solve_substructured", "split_blocks", "verify_two_domain_residuals", "PowerLawFit",
    "SampledFunction", "energy_half", "fit_min_eigen_exponent", "fit_power_law",
    "local_limit_check", "nonlocal_energy_p", "strip_quantification",
]
