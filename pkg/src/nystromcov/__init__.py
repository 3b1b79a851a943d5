"""Low-rank covariance estimation from row subsets, with error analytics,
an adaptive-beamforming simulator, and a patch-subspace image denoiser."""

from .beamforming import (
    ArrayScenario,
    Beamformer,
    SnapshotSet,
    default_scenario,
    empirical_sinr,
    nystrom_beamformer,
    optimal_beamformer,
    projection_beamformer,
    simulate_snapshots,
    sinr_experiment,
    steering_vector,
    theoretical_sinr_opt,
    true_covariance,
)
from .denoise import (
    DenoiseConfig,
    PatchGrid,
    RegionModel,
    add_noise,
    denoise_image,
    extract_region_patches,
    psnr,
    region_projector,
    synthetic_image,
)
from .error_analytics import (
    ErrorReport,
    GroundTruthModel,
    expected_nystrom,
    monte_carlo_verify,
    mse_lower_bound,
    nystrom_bias,
    nystrom_mse,
    sample_mse,
)
from .estimator_core import (
    NystromEstimate,
    complement_indices,
    densify,
    ledoit_wolf_estimate,
    nystrom_eig,
    nystrom_estimate,
    nystrom_projection,
    sample_covariance,
    schur_complement,
    uniform_subset,
)
from .pgm import PgmError, read_pgm, write_pgm

__version__ = "0.1.0"

__all__ = [
    "ArrayScenario",
    "Beamformer",
    "DenoiseConfig",
    "ErrorReport",
    "GroundTruthModel",
    "NystromEstimate",
    "PatchGrid",
    "PgmError",
    "RegionModel",
    "SnapshotSet",
    "add_noise",
    "complement_indices",
    "default_scenario",
    "denoise_image",
    "densify",
    "empirical_sinr",
    "expected_nystrom",
    "extract_region_patches",
    "ledoit_wolf_estimate",
    "monte_carlo_verify",
    "mse_lower_bound",
    "nystrom_beamformer",
    "nystrom_bias",
    "nystrom_eig",
    "nystrom_estimate",
    "nystrom_mse",
    "nystrom_projection",
    "optimal_beamformer",
    "projection_beamformer",
    "psnr",
    "read_pgm",
    "region_projector",
    "sample_covariance",
    "sample_mse",
    "schur_complement",
    "simulate_snapshots",
    "sinr_experiment",
    "steering_vector",
    "synthetic_image",
    "theoretical_sinr_opt",
    "true_covariance",
    "uniform_subset",
    "write_pgm",
    "__version__",
]
