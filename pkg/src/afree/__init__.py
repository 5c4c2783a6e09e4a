"""Principal symbols, wave cones and blow-up checks for A-free measures."""

__version__ = "0.1.0"

from .blowup import (BlowupReport, FourierGrid, MollifierSpec, MultiplierSpec, VerifyConfig,
                     blowup_functional, multiplier_test_function, mollify, normalized_limit,
                     plancherel_identity_check, verify_theorem)
from .cones import (ConeResult, check_theorem_pointwise, intersection_cone_exact, intersection_cone_sampled,
                    principal_angles, union_wave_cone_membership)
from .dsl import parse_operator, serialize_operator
from .measures import (DiscreteMeasure, SingularityCertificate, check_afree, check_uniform_singularity,
                       lebesgue_decompose, radon_nikodym, total_variation)
from .operators import MultiIndex, OperatorSystem, PolyCoefficient, evaluate_coefficient
from .symbols import (AnisotropicFrame, HomogeneityWeights, PrincipalPart, check_homogeneity, evaluate_symbol,
                      principal_part, project_to_manifold, quasi_norm, sample_manifold, solve_weights)
