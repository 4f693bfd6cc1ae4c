"""Nonlinear thermodynamic formalism on subshifts of finite type."""

from .cohomology import periodic_obstruction_test
from .estimators import EntropySpectrum, NonlinearPressure
from .fexpr import FEvalContext, FExpr, numeric_hessian, parse, preset
from .nonlinear import (
    direct_estimate,
    equilibrium_measure,
    find_maximizers,
    uniqueness_probe,
    variational_value,
)
from .potentials import Potential, PotentialFamily, birkhoff_sum, coboundary, indicator, lift_depth
from .pressure import (
    classical_pressure,
    gibbs_measure,
    measure_entropy,
    measure_integral,
    pressure_gradient,
    transfer_matrix,
)
from .sft import (
    SymbolicSystem,
    admissible_words,
    full_shift,
    golden_mean_shift,
    higher_block_recode,
    is_primitive,
    simple_cycles,
)
from .spectrum import entropy_at, rotation_set, spectrum_grid

__version__ = "0.1.0"

__all__ = [
    "EntropySpectrum",
    "FEvalContext",
    "FExpr",
    "NonlinearPressure",
    "Potential",
    "PotentialFamily",
    "SymbolicSystem",
    "admissible_words",
    "birkhoff_sum",
    "classical_pressure",
    "coboundary",
    "direct_estimate",
    "entropy_at",
    "equilibrium_measure",
    "find_maximizers",
    "full_shift",
    "gibbs_measure",
    "golden_mean_shift",
    "higher_block_recode",
    "indicator",
    "is_primitive",
    "lift_depth",
    "measure_entropy",
    "measure_integral",
    "numeric_hessian",
    "parse",
    "periodic_obstruction_test",
    "preset",
    "pressure_gradient",
    "rotation_set",
    "simple_cycles",
    "spectrum_grid",
    "transfer_matrix",
    "uniqueness_probe",
    "variational_value",
]
