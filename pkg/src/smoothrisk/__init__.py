"""Smoothed hinge losses, psi-transform calibration, RKHS training, and
excess-risk verification on synthetic classification problems."""

from .calibration import (
    CalibrationCertificate,
    ConditionalRiskProblem,
    ConstantLoss,
    PsiTransform,
    binary_excess_bound,
    compute_H,
    compute_H_minus,
    conditional_minimizer_z,
    conditional_risk,
    is_calibrated,
    psi_closed_form_table,
    psi_lower_bound,
    psi_numeric,
    psi_smoothed_hinge_closed,
)
from .losses import (
    ReferenceLoss,
    SmoothedHingeLoss,
    reference_loss_deriv,
    reference_loss_value,
    smoothed_hinge_deriv,
    smoothed_hinge_second_deriv,
    smoothed_hinge_value,
    variational_maximizer,
    variational_objective,
)
from .montecarlo import (
    estimate_r_phi_star,
    mc_binary_risk,
    mc_phi_risk,
    mc_risk_pair,
)
from .rates import (
    RateParams,
    corollary_bound,
    excess_phi_bound,
    generalization_gap_bound,
    n0_threshold,
    r_phi_star_assumption,
    regime_bound,
    select_beta,
    tau_exponents,
)
from .rkhs import (
    KernelModel,
    KernelSpec,
    NumericFailure,
    empirical_phi_risk,
    gram_matrix,
    hilbert_norm,
    median_bandwidth,
    project_to_ball,
    reference_solution,
    risk_gradient_coeffs,
    suboptimality_bound,
    train_agd,
)
from .sweep import (
    RiskReport,
    SweepConfig,
    read_reports_csv,
    run_sweep,
    verify_report,
    write_reports_csv,
)
from .synthetic import Dataset, SyntheticSpec, bayes_risk, generate, sample_instances

__version__ = "0.1.0"
