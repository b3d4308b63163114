"""Bayesian MMSE phase estimation with fixed-photon two-mode probes."""
from .errors import (BayesPhaseError, DegeneratePosteriorError, DomainError,
                     InvalidGaugeError, InvalidOperatorError)
from .prior import (FlatPrior, GridPrior, Prior, TruncatedFlatPrior, bayes_update,
                    mean_and_variance, parse_prior, spike_prior, update)
from .states import FockSuperposition, apply_phase, beam_splitter_state, noon, parse_state
from .personick import (MeasurementSpec, MomentTable, PersonickSolution, build_gamma,
                        gauge_perturb, measurement_from_operator, mmse_flat_closed_form,
                        mmse_noon_truncated_closed_form, mse_of_measurement, solve, solve_b)
from .optimize import (OptimizationResult, brute_force_oracle, canonicalize,
                       optimize_bs_transmissivity, optimize_coefficients)
from .adaptive import (AdaptiveNode, AdaptiveTree, compare_single_shot,
                       delta_infinity_check, run_tree, tree_to_dict)

__version__ = "0.1.0"
