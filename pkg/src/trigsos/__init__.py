"""Certified lower bounds for trigonometric polynomials via sums of squares."""

import sys as _sys

from .chebyshev import (HypercubePoly, TransferReport, chebyshev_l1_norm, lift,
                        to_chebyshev_basis, transfer_optimality)
from .decomposition import (DecompositionReport, PartitionOfUnity, build_partition,
                            build_sos_terms, bump_function, normalized_step, truncate_and_report)
from .estimators import (ChebyshevLifter, KernelCertifier, MinimizerOracle, SOSRelaxation,
                         SpectralRelaxation)
from .fourier import (PolyFormatError, TrigPoly, derivative_tensor, evaluate, f_norm,
                      f_norm_tail, load_poly, multiply, parse_poly, random_trig_poly, truncate)
from .kernels import (CertificateError, KernelCertificate, KernelSpec, build_certificate,
                      half_degree, kernel_autocorrelation, theorem1_bound)
from .local import (ConditioningConstants, ConditioningError, OracleResult, Theorem2Constants,
                    estimate_conditioning, global_minimize, theorem2_constants)
from .solvers import SolveReport, SolverOptions, extract_sos_gram, sos_bound, spectral_bound
from .toeplitz import (DegreeError, FreqGrid, GramMatrix, gram_to_poly, moment_projector,
                       project_toeplitz, toeplitz_representation)

__version__ = "0.1.0"

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, type(_sys))]
