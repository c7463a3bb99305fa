"""Kernel density estimation under C^{1,1} regularity with weak-curvature bandwidths."""

from .bandwidth import (
    BandwidthResult,
    amise_bandwidth,
    amise_ratio,
    amise_value,
    gcpi_bandwidth,
    lscv_bandwidth,
    multivariate_amise_bandwidth,
    silverman_bandwidth,
)
from .curvature import GAUSSIAN_PILOT, u_stat_curvature
from .densities import (
    CompactKinked,
    HuberDensity,
    KinkedGaussian,
    ThresholdDensity,
    parse_density,
    weak_curvature,
)
from .estimator import EvaluationGrid, kde_eval, kde_eval_grid
from .kernels import BIWEIGHT, EPANECHNIKOV, EPANECHNIKOV_SQRT5, GAUSSIAN, get_kernel
from .sample import Sample

__version__ = "0.1.0"
