"""Feynman-Kac Monte Carlo and deterministic oracles for moments of the parabolic Anderson model."""

from .bridges import PinSchedule, SampledPath, bridge_mean, sample_pinned_path, sample_pinned_paths
from .chaos import ChaosTerm, SeriesResult, chaos_term, second_moment_series, tail_bound, tail_constants
from .covariance import CovarianceModel, DalangResult, covariance_at, dalang_integral, riesz_constant, spectral_covariance
from .errors import ConfigError, DomainError, NumericalError, QuadratureError
from .functionals import OffsetFunction, interaction_log_weight, pair_interaction, whitenoise_pair_interaction
from .kernels import (
    Admissibility,
    Bounded,
    GaussianGrowth,
    SignedMeasure,
    SubGaussian,
    admissibility_check,
    heat_convolve,
    heat_kernel,
)
from .moments import (
    CorollarySweep,
    DerivativeSpec,
    MCConfig,
    MomentEstimate,
    corollary_bound,
    corollary_sweep,
    moment_derivative,
    moment_u_bridge,
    moment_u_free,
)
from .rng import Stream, StreamKey, derive_stream
from .spde import GridField, SchemeParams, direct_moment, lattice_second_moment, simulate_she_1d

__version__ = "0.1.0"
