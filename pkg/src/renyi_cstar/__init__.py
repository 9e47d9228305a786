"""Renyi entropies of states on finite-dimensional C*-algebras.

Logarithms are base 2 throughout, so entropies are in bits.
"""

from .classical import (
    CodeSpec,
    ProbDist,
    build_campbell_code,
    coding_cost,
    escort,
    product_dist,
    renyi_classical,
    renyi_limit_check,
    shannon,
)
from .decomp import (
    Decomposition,
    IsometryParam,
    SearchBudget,
    SearchResult,
    decomposition_from_isometry,
    minimize_weight_functional,
    sample_decompositions,
    schatten_decomposition,
    smix_weight_value,
)
from .engine import EntropyReport, Problem, VerificationResult, quantum_renyi, smix_renyi, verify_theorems, von_neumann
from .errors import *  # noqa: F401,F403
from .refsys import (
    Dynamics,
    GnsData,
    ReferenceSystem,
    ergodic_decompose,
    ergodic_decomposition,
    extremal_invariant_states,
    extremal_kms_states,
    gibbs_state,
    gns_construct,
    is_g_commutative,
    is_invariant,
    is_kms,
    kms_decompose,
    kms_mixture,
)
from .states import AlgebraModel, DensityMatrix, SpectralData, majorizes, schatten, validate_state

__version__ = "0.1.0"
