"""Desk-scale adaptive-filtering laboratory.

Simulates Hammerstein ARX plants, runs the LMS / momentum-LMS /
fractional-LMS family against them, measures Wiener-solution gaps and
complex-weight leakage, and ships a small matrix-shape checker that audits
the dimensional consistency of the family's published update and convergence
equations.
"""

from . import analysis, cli, errors, filters, plant, shapecheck
from .analysis import (
    BinomialReport,
    CorrelationEstimate,
    LeakReport,
    RunRecord,
    StabilityProbe,
    binomial_report,
    binomial_residual,
    binomial_vector_verdict,
    complex_leak_report,
    correlation_summary,
    estimate_correlations,
    run_experiment,
    run_record_csv,
    run_summary,
    stability_probe,
    sweep_cell,
    wiener_solution,
)
from .filters import (
    FilterConfig,
    FilterState,
    StepRecord,
    flms_signed_step,
    fractional_factor,
    initial_state,
    lms_step,
    mflms_step,
    momentum_lms_step,
    predict_error,
    step,
)
from .plant import (
    BasisSet,
    Dataset,
    HarxPlant,
    Regressor,
    build_regressor,
    dataset_to_csv,
    generate_sequence,
    load_scenario,
    muscle_preset,
    parse_scenario,
    plant_output,
    polynomial_basis,
    true_weight_vector,
)

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "cli",
    "errors",
    "filters",
    "plant",
    "shapecheck",
    "BasisSet",
    "BinomialReport",
    "CorrelationEstimate",
    "Dataset",
    "FilterConfig",
    "FilterState",
    "HarxPlant",
    "LeakReport",
    "Regressor",
    "RunRecord",
    "StabilityProbe",
    "StepRecord",
    "binomial_report",
    "binomial_residual",
    "binomial_vector_verdict",
    "build_regressor",
    "complex_leak_report",
    "correlation_summary",
    "dataset_to_csv",
    "estimate_correlations",
    "flms_signed_step",
    "fractional_factor",
    "generate_sequence",
    "initial_state",
    "lms_step",
    "load_scenario",
    "mflms_step",
    "momentum_lms_step",
    "muscle_preset",
    "parse_scenario",
    "plant_output",
    "polynomial_basis",
    "predict_error",
    "run_experiment",
    "run_record_csv",
    "run_summary",
    "stability_probe",
    "step",
    "sweep_cell",
    "true_weight_vector",
    "wiener_solution",
]
