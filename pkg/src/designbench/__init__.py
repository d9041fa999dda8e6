"""Exact analysis and Monte Carlo simulation of treatment-assignment designs."""

from .assignment import (
    Mechanism,
    assign,
    confounded_mechanism,
    constant_prob,
    covariate_fn,
    deterministic,
    deterministic_from,
    global_coin,
    is_randomized,
    latent_fn,
    outcome_proportional,
    outcome_proportional_for,
    treatment_probability,
)
from .errors import EmptyArm, PositivityViolation, Undefined
from .estimators import Sample, SampleObservation, diff_in_means, hajek, horvitz_thompson, ipw_propensity
from .montecarlo import Design, FixedCounts, IidN, McResult, estimate_propensity, run_experiment, run_replication
from .oracle import DesignReport, build_report, joint_distribution
from .population import PopulationSpec, Stratum, ate, make_paper_population, make_proportional_population, sample_iid

__version__ = "0.1.0"
