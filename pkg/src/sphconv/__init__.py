"""Deep convolutional ReLU networks that approximate functions on the sphere.

The package builds the networks explicitly: sphere points are encoded as a long
filter, factorized into short filters, and followed by one or two fully
connected spline layers. Rate studies compare the networks with analytically
known targets.
"""

from .experiments import (
    BoundViolation,
    RateStudyReport,
    run_discretization_study,
    run_factorization_bench,
    run_theorem1_rate,
    run_theorem2_rate,
)
from .filters import FactorizationError, factorize_filter, feature_filter, toeplitz_chain
from .harmonics import BandLimitedZonal, gegenbauer, harmonic_dim, sobolev_norm_2, zonal_kernel
from .network import (
    SphericalNetwork,
    build_theorem1_net,
    build_theorem2_net,
    count_free_parameters,
    load_network,
    save_network,
)
from .operators import SmoothedKernel, SplineMesh, apply_LN, apply_Ln, apply_Lt, discretized_Ln, eta
from .sphere import EvalGrid, build_grid, sample_uniform

__version__ = "0.1.0"
