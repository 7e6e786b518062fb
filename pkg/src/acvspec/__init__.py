"""Spectra of lagged sample autocovariance matrices of heavy-tailed linear fields."""

__version__ = "0.1.0"

from .noise import TailDistribution, NoiseField, sample_noise, normalizing_constant
from .linear_process import FilterCoefficients, DataMatrix, generate_process, lagged_view
from .autocovariance import (
    CenteringPolicy,
    RowSums,
    SpectralResult,
    sample_autocov,
    power_sum,
    symmetrized_sum,
    symmetric_eigen,
    row_sum_squares,
    process_row_sums,
    empirical_stieltjes,
)
from .filter_spectrum import (
    KSpectrum,
    NullKMatrixError,
    ConditionHError,
    build_M,
    build_K,
    build_K_sym,
    embed_matrix,
    embed_vector,
)
from .approximation import (
    ApproxSpectrum,
    gamma_values,
    delta_values,
    predicted_eigenvectors,
    block_approximation,
    approximation_error,
    alignment,
)
from .limits import (
    GammaSequence,
    sample_gamma_sequence,
    limit_eigen_points,
    frechet_cdf,
    ratio_statistics,
    limit_ratio_sample,
    trace_limit_sample,
    ks_distance,
)
from .lsd import (
    StieltjesSolution,
    coeff_autocovariance,
    spectral_density,
    solve_stieltjes,
    mp_stieltjes,
    mp_density,
    density_from_stieltjes,
)
