"""Exact simulation of GHZ-state angle estimation under collective and
independent dephasing, with Fisher-information bounds and a dense
reference solver."""
from .collective import (IrrepTable, SpinJOperators, degeneracy, irrep_table, log_degeneracy,
                         mixing_coefficients, multiplicity_tail, spin_operators)
from .errors import (CapacityError, ConfigurationError, DegenerateMeasurementError, DomainError,
                     GhzMetroError, InternalConsistencyError, NoInformationError, SensitivityError,
                     StepSizeError, UnsupportedConfigurationError)
from .estimation import (GHZ_PROJECTION, QFI_BOUND, ProtocolBudget, UncertaintyResult,
                         classical_fisher_ghz, fit_scaling, optimize_time, quantum_crb,
                         quantum_fisher, survival_derivative, uncertainty_ghz)
from .evolution import (AKRow, BlockState, NoiseParams, ak_stream, evolve, evolve_many,
                        survival_probability, short_time_probability)
from .overlaps import Angles, GhzOverlaps, b_moments, ghz_overlap_derivative, ghz_overlaps

__all__ = [
    "IrrepTable",
    "SpinJOperators",
    "degeneracy",
    "irrep_table",
    "log_degeneracy",
    "mixing_coefficients",
    "multiplicity_tail",
    "spin_operators",
    "CapacityError",
    "ConfigurationError",
    "DegenerateMeasurementError",
    "DomainError",
    "GhzMetroError",
    "InternalConsistencyError",
    "NoInformationError",
    "SensitivityError",
    "StepSizeError",
    "UnsupportedConfigurationError",
    "GHZ_PROJECTION",
    "QFI_BOUND",
    "ProtocolBudget",
    "UncertaintyResult",
    "classical_fisher_ghz",
    "fit_scaling",
    "optimize_time",
    "quantum_crb",
    "quantum_fisher",
    "survival_derivative",
    "uncertainty_ghz",
    "AKRow",
    "BlockState",
    "NoiseParams",
    "ak_stream",
    "evolve",
    "evolve_many",
    "survival_probability",
    "short_time_probability",
    "Angles",
    "GhzOverlaps",
    "b_moments",
    "ghz_overlap_derivative",
    "ghz_overlaps",
]

__version__ = "0.1.0"
