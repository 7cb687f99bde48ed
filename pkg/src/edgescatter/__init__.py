"""Edge-channel scattering for 2D Dirac operators with a linear domain wall.

Builds the transverse ladder eigenbasis, enumerates propagating and
evanescent channels at fixed energy, solves the coupled-channel scattering
problem for localized Hermitian perturbations, and evaluates the unitary
S-matrix and the quantized interface conductivity.
"""

from .channels import Channel, ChannelSet, channels_at, critical_set, gram_matrix
from .errors import (BasisTooSmall, ConfigError, DecayViolation,
                     EdgeScatterError, GuardViolation, IndexOutOfRange,
                     InsufficientQuadrature, MatchDefectTooLarge,
                     NonConvergedEigensolve, NonFiniteSample,
                     NonRectangularGrid, NumericsError, SingularSystem,
                     SupportOutsideGrid, TooCloseToCritical,
                     TruncationDominates, WindowHitsCritical)
from .observables import (CoefficientField, ConductivityReport, SwitchProfile,
                          conductivity, conservation_scan, current_correlation,
                          parseval_check, unperturbed_current_matrix)
from .potential import (CouplingField, GaussianBump, Potential,
                        build_potential, coupling_field, verify_decay)
from .scattering import (AmplitudeTable, ScatteringMatrix, WaveField,
                         born_smatrix, extract_alpha, free_mode_field,
                         smatrix, solve_mode)
from .transverse import (TransverseBasis, WallSpec, build_basis,
                         hermite_functions, ladder_residual)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "WallSpec", "TransverseBasis", "build_basis", "ladder_residual",
    "hermite_functions",
    "Channel", "ChannelSet", "channels_at", "critical_set", "gram_matrix",
    "GaussianBump", "Potential", "CouplingField", "build_potential",
    "verify_decay", "coupling_field",
    "WaveField", "AmplitudeTable", "ScatteringMatrix", "solve_mode",
    "extract_alpha", "smatrix", "born_smatrix", "free_mode_field",
    "SwitchProfile", "ConductivityReport", "CoefficientField",
    "current_correlation", "conservation_scan", "unperturbed_current_matrix",
    "conductivity", "parseval_check",
    "EdgeScatterError", "ConfigError", "NumericsError",
    "NonConvergedEigensolve", "InsufficientQuadrature", "IndexOutOfRange",
    "TooCloseToCritical", "BasisTooSmall", "DecayViolation",
    "NonRectangularGrid", "NonFiniteSample", "SingularSystem",
    "GuardViolation", "MatchDefectTooLarge", "SupportOutsideGrid",
    "WindowHitsCritical", "TruncationDominates",
]
