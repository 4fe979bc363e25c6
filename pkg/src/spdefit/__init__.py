"""Simulation and spectral least-squares inference for stochastic
reaction-diffusion equations on periodic rectangular domains."""

from .spectral import (
    AliasingError,
    Domain,
    GridFrameSeries,
    ModeGridTransform,
    ModeTrajectory,
    SpectralBasis,
    apply_fractional_laplacian,
    build_basis,
    modes_to_grid,
    project_frames_to_modes,
    weyl_constant,
)
from .noise import NoiseKind, NoiseSpec, NoiseStream, sample_increments
from .simulate import (
    BlowUpError,
    DriftDictionary,
    DriftTerm,
    DriftTermKind,
    FHNParams,
    VelocityField,
    dealias_grid_shape,
    evaluate_drift_term,
    inhibitor_convolution,
    simulate,
    smooth_frames,
)
from .estimate import (
    ConvergenceError,
    DegenerateDataError,
    EstimationProblem,
    EstimationResult,
    RankDeficientError,
    assemble_normal_equations,
    default_lambda_grid,
    estimate,
    identify_noise_parameters,
    ito_numerator_closed_form,
    lasso_path,
    plain_diffusivity,
    riemann_numerator,
    solve_least_squares,
    stability_index,
)
from .uncertainty import RatePrediction, clt_variance, confidence_interval, predicted_rate

__version__ = "0.1.0"
