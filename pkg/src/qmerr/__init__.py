"""Random-matrix model of errors in quantum measurement."""

__version__ = "0.1.0"

from .closedform import (
    DensityGrid,
    Spectrum,
    joint_pdf2_sumdiff,
    joint_pdf_det,
    joint_pdf_permsum,
    marginal_sd,
    pdf2_mixed,
    pdf2_uniform,
)
from .errormodel import ErrorModel, RngStream, log_density, sample_perturbation
from .hermitian import (
    DensityMatrix,
    HermitianMatrix,
    SpectralDecomposition,
    bloch_density,
    eig_hermitian,
    outcome_probabilities,
    vandermonde,
)
from .montecarlo import SimulationConfig, haar_unitary, hciz_mc_estimate, histogram, simulate_outcomes
from .numerics import find_peaks, normalize_1d
from .stats import TabulatedCdf, cdf_from_density, ks_statistic, moments
