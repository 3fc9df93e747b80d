"""SU(n) generator algebra, Theta calculus, and realizability/preservation checks
for bilinear quantum stochastic differential equations."""

from .algebra import (DEFAULT_TOL, GellMannBasis, StructureTensors, basis_for, build_generators,
                      structure_constants, tensors_for, verify_basis, verify_structure_identities)
from .errors import (ConsistencyError, DomainError, InconsistentBasisError, IntegrationDivergedError,
                     ModelValidationError, SunQSDEError)
from .model import (PreservationReport, RealizabilityReport, SLHParams, StateSpaceModel,
                    check_physical_realizability, check_preservation, extract_slh, random_model,
                    random_slh, synthesize_state_space)
from .oracle import (MomentState, OperatorMatrix, init_moments, integrate_moments, ito_integrands,
                     opmat_anticommutator, opmat_bracket)
from .reports import IdentityEntry, IdentityReport
from .theta import (ThetaContext, reconstruct_theta_minus_generator, theta_minus, theta_plus, vec,
                    verify_kron_identities, verify_theta_identities)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "GellMannBasis", "StructureTensors", "basis_for", "build_generators",
    "structure_constants", "tensors_for", "verify_basis", "verify_structure_identities",
    "ConsistencyError", "DomainError", "InconsistentBasisError", "IntegrationDivergedError",
    "ModelValidationError", "SunQSDEError",
    "PreservationReport", "RealizabilityReport", "SLHParams", "StateSpaceModel",
    "check_physical_realizability", "check_preservation", "extract_slh", "random_model",
    "random_slh", "synthesize_state_space",
    "MomentState", "OperatorMatrix", "init_moments", "integrate_moments", "ito_integrands",
    "opmat_anticommutator", "opmat_bracket",
    "IdentityEntry", "IdentityReport",
    "ThetaContext", "reconstruct_theta_minus_generator", "theta_minus", "theta_plus", "vec",
    "verify_kron_identities", "verify_theta_identities",
]
