"""Principal component analysis of multivariate graph signals in the graph frequency domain."""
from .graph import (
    Graph,
    GraphError,
    ShiftOperator,
    apply_filter,
    build_laplacian,
    builtin_karate,
    builtin_us_sensor_coords,
    gft,
    igft,
    knn_gaussian_graph,
)
from .pca import (
    AnalysisReport,
    FitError,
    GFreqPCAModel,
    analyze,
    error_spectrum,
    fit,
    inverse_transform,
    optimal_scaling,
    pc_spectra,
    scree,
    select_q,
    spectral_envelope,
    theoretical_error,
    transform,
)
from .spectral import (
    Exact,
    Periodogram,
    SpectralDensity,
    SpectralMatrixField,
    WindowEnsemble,
    Windowed,
    assemble_spectral_matrices,
    coherence,
    cross_periodogram,
    exact_cross_spectrum,
    stationarity_diagnostic,
    windowed_cross_periodogram,
)

__version__ = "0.1.0"
