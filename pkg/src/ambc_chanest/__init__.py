"""Channel estimation for ambient-backscatter readers with a massive ULA.

The package covers the full loop: array/beamspace primitives
(:mod:`~ambc_chanest.array_model`), signal and channel synthesis
(:mod:`~ambc_chanest.signal_model`), the three-step LS + DFT + angular-rotation
estimator (:mod:`~ambc_chanest.estimation`), Fisher/CRLB/LCRLB machinery
(:mod:`~ambc_chanest.bounds`), and the Monte-Carlo sweeps that produce the
MSE-vs-SNR and outage curves (:mod:`~ambc_chanest.experiments`).
"""

from .array_model import ArrayConfig, dft_matrix, dirichlet_peak, rotation_matrix, steering_vector
from .bounds import (
    BoundInputs,
    BoundsResult,
    SingularFisherError,
    bounds_state0,
    compute_bounds,
    crlb_closed_form,
    crlb_numeric,
    fisher_matrix,
    lcrlb,
)
from .estimation import (
    CoarseEstimate,
    EstimationResult,
    IllConditionedPilotError,
    RefinedEstimate,
    dft_coarse,
    estimate_all,
    ls_estimate,
    rotation_refine,
)
from .experiments import (
    ExperimentConfig,
    SweepRow,
    SweepTable,
    aggregate_mse,
    run_mse_sweep,
    run_outage_sweep,
)
from .signal_model import (
    ChannelParams,
    PilotFrame,
    ReceivedFrame,
    composite_channel,
    generate_frame,
    make_pilots,
    sample_channel,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ArrayConfig",
    "steering_vector",
    "dft_matrix",
    "rotation_matrix",
    "dirichlet_peak",
    "ChannelParams",
    "PilotFrame",
    "ReceivedFrame",
    "sample_channel",
    "composite_channel",
    "make_pilots",
    "generate_frame",
    "IllConditionedPilotError",
    "CoarseEstimate",
    "RefinedEstimate",
    "EstimationResult",
    "ls_estimate",
    "dft_coarse",
    "rotation_refine",
    "estimate_all",
    "SingularFisherError",
    "BoundInputs",
    "BoundsResult",
    "fisher_matrix",
    "crlb_numeric",
    "crlb_closed_form",
    "lcrlb",
    "bounds_state0",
    "compute_bounds",
    "ExperimentConfig",
    "SweepRow",
    "SweepTable",
    "aggregate_mse",
    "run_mse_sweep",
    "run_outage_sweep",
]
