"""Boundary blow-up jump kernels: evaluation, bounds, simulation."""

from .bounds import HKBoundValue, delta_t, hk_bound
from .errors import (AccuracyError, BkernError, ConfigError, DomainError,
                     InputError, RangeError, SamplerError, UnsupportedError)
from .geometry import DomainSpec, delta_D, domain_from_dict, domain_to_dict
from .kernels import (KernelSpec, KernelValue, TailValue, check_condition_A,
                      evaluate, resurrection_norm_constant, sample_pairs,
                      stable_constant, tail_integral)
from .simulate import (DensityEstimate, PathEndpoints, SimConfig,
                       estimate_heat_kernel, occupation_phi_average,
                       positive_stable, simulate_paths, stable_increment)
from .verify import Report, SUITES, run_suite, write_report
from .weights import (PsiSpec, WeightSpec, eval_psi, eval_weight, psi1,
                      psi_from_dict, psi_to_dict, weight_from_dict,
                      weight_to_dict)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BkernError", "ConfigError", "DensityEstimate",
    "DomainError", "DomainSpec", "HKBoundValue", "InputError", "KernelSpec",
    "KernelValue", "PathEndpoints", "PsiSpec", "RangeError", "Report",
    "SUITES", "SamplerError", "SimConfig", "TailValue", "UnsupportedError",
    "WeightSpec", "check_condition_A", "delta_D", "delta_t",
    "domain_from_dict", "domain_to_dict", "estimate_heat_kernel", "evaluate",
    "eval_psi", "eval_weight", "hk_bound", "occupation_phi_average",
    "positive_stable", "psi1", "psi_from_dict", "psi_to_dict",
    "resurrection_norm_constant", "run_suite", "sample_pairs",
    "simulate_paths", "stable_constant", "stable_increment", "tail_integral",
    "weight_from_dict", "weight_to_dict", "write_report",
]
