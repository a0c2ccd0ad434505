"""Restoration of images and signals from sparse complete samples plus a
scalar projection (typically a gray level) of the missing part.

The toolkit combines an iterative nearest-known-pixel color extension with
explicit steepest-descent solvers for the coupled variational systems that
tie the reconstruction to the observed gray level, plus short-time Fourier
operators for time-frequency experiments on 1D signals.
"""

from .descent1d import (
    Descent1DConfig,
    Descent1DResult,
    Signal1D,
    energy,
    laplacian1d,
    residual1d,
    steep_desc,
)
from .descent2d import (
    Descent2DConfig,
    Descent2DResult,
    WorkingState,
    curvature,
    grad_mag,
    residual2d,
    steep_desc_2d,
)
from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    DivergenceError,
    InsufficientDataError,
    NoSeedError,
    OutOfRangeError,
    ParameterError,
    RasterFormatError,
    RecolorError,
)
from .gabor import GaborFrame, adjoint, coefficient_inner, project, spectrogram, stft, tight_frame
from .image import (
    GRAY_ONLY,
    KNOWN_COLOR,
    UNKNOWN,
    ColorImage,
    GrayImage,
    ObservedScene,
    PixelMask,
    load_color,
    load_gray,
    load_mask,
    load_scene,
    save_image,
    save_mask,
)
from .pipeline import (
    CombinedResult,
    PipelineConfig,
    QualityReport,
    RegionMetrics,
    disk_mask,
    distort,
    initial_guess,
    quality,
    run_combined,
)
from .projection import (
    AnalyticCurve,
    FitReport,
    NonlinearProjection,
    apply,
    channel_derivative,
    curve_range,
    curve_slope,
    curve_value,
    estimate,
    identity_projection,
    load_fit_report,
    mean_projection,
    quartic_curve,
    quartic_projection,
    save_fit_report,
    section,
)
from .voronoi import (
    RestoreParams,
    RestoreResult,
    VoronoiLabels,
    extend,
    restore,
    thrs,
    voronoi_assign,
)

__version__ = "0.1.0"
