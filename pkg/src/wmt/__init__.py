"""Multiscale transforms for sequences of probability measures.

Sequences of Gaussian or discrete measures are decomposed into a coarse
approximation plus layers of detail coefficients by repeatedly
downsampling and recording the optimal-transport difference between
each dropped element and its geodesic midpoint prediction.  The
representation is lossless, supports denoising by thresholding and
anomaly detection by detail-norm scoring, and yields the optimality
number: a scalar measuring how far a sequence deviates from
constant-speed geodesic flow.
"""

__version__ = "0.1.0"

from .errors import (
    BadLength,
    BadParameter,
    BadSpec,
    BadWeights,
    DegenerateMap,
    DimensionMismatch,
    IncompatibleDetail,
    IOFailure,
    KindMismatch,
    LengthNotDyadic,
    Misaligned,
    MixedKinds,
    ParseError,
    ParticleHitCharge,
    SingularPoint,
    SolverFailure,
    TooLarge,
    TooShort,
    UnsupportedExponent,
    ValidationError,
    WmtError,
)
from .measures import (
    DiscreteMeasure,
    GaussianMeasure,
    MeasureSequence,
    default_level,
    read_sequence,
    validate_sequence,
    write_sequence,
)
from .gaussian_ot import (
    AffineMap,
    affine_lp_norm,
    gaussian_mccann,
    gaussian_ominus,
    gaussian_oplus,
    gaussian_w2,
)
from .discrete_ot import (
    Coupling,
    TransportCost,
    brute_force_ot,
    solve_kantorovich,
    wasserstein_distance,
)
from .transport_ops import (
    ZERO,
    DetailLayer,
    PlanDetail,
    ZeroDetail,
    detail_norm,
    discrete_velocity_norms,
    interpolate_coupling,
    layer_norms,
    mccann_average,
    measure_distance,
    ominus,
    oplus,
    seq_delta,
)
from .multiscale import (
    Pyramid,
    analyze,
    detect_anomalies,
    downsample,
    optimality_number,
    read_pyramid,
    subdivide,
    subdivide_r,
    synthesize,
    threshold_details,
    write_pyramid,
)
from .experiments import (
    DipoleSpec,
    GaussianCurveSpec,
    JumpSpec,
    NoiseSpec,
    dipole_field,
    gen_gaussian_curve,
    gen_weighted_family,
    simulate_dipole,
)
