"""Chance-constrained joint power and admission control.

Sample-approximate the probabilistic SINR constraints of a K-link
interference network, select a maximum supportable link subset by
group-sparse deflation of a convex relaxation, adapt powers on the fast
timescale with a distributed fixed-point iteration, and validate the
resulting outage on held-out channel draws.
"""

from .deflation import (AdmissionOutcome, RoundStats, admission_control,
                        constant_power_min, perfect_csi_benchmark, removal_rule)
from .experiment import (ExperimentConfig, ExperimentResult, MetricsRow,
                         RunRecord, emit_outputs, run_experiment)
from .formulation import (FeasibilityReport, NormalizedProblem,
                          exact_feasibility, feasibility_batch, normalize,
                          objective_value, sinr, spectral_radius,
                          supported_exact)
from .network import (GainSampleSet, GeometryConfig, NetworkInstance,
                      db_to_linear, generate_instance, linear_to_db,
                      sample_gains, sample_size_adaptive_power,
                      sample_size_constant_power, subset_instance,
                      subset_samples)
from .oracles import OracleBound, certified_minimum, max_admissible_exhaustive
from .powerctl import (FMResult, TwoTimescaleReport, fm_power_control,
                       fm_power_control_batch, meets_targets, run_two_timescale,
                       sinr_batch)
from .rng import SeedRecord, as_seed_record, make_rng, substream
from .solver import (CertReport, SolverConfig, SolverResult, certify,
                     dual_bound, solve_group_norm)

__version__ = "0.1.0"

__all__ = [
    "AdmissionOutcome", "CertReport", "ChanceConstrainedAdmission",
    "ExperimentConfig", "ExperimentResult", "FMResult", "FeasibilityReport",
    "GainSampleSet", "GeometryConfig", "MetricsRow", "NetworkInstance",
    "NormalizedProblem", "OracleBound", "RoundStats", "RunRecord",
    "SeedRecord", "SolverConfig", "SolverResult", "TwoTimescaleReport",
    "admission_control", "as_seed_record", "certified_minimum", "certify",
    "constant_power_min", "db_to_linear", "dual_bound", "emit_outputs",
    "exact_feasibility", "feasibility_batch", "fm_power_control",
    "fm_power_control_batch", "generate_instance", "linear_to_db",
    "make_rng", "max_admissible_exhaustive", "meets_targets", "normalize",
    "objective_value", "perfect_csi_benchmark", "removal_rule",
    "run_experiment", "run_two_timescale", "sample_gains",
    "sample_size_adaptive_power", "sample_size_constant_power",
    "sinr", "sinr_batch", "solve_group_norm", "spectral_radius", "substream",
    "subset_instance", "subset_samples", "supported_exact",
]


def __getattr__(name):
    # the estimator facade pulls in scikit-learn, so load it on demand
    if name == "ChanceConstrainedAdmission":
        from .estimators import ChanceConstrainedAdmission
        return ChanceConstrainedAdmission
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
