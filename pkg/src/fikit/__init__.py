"""Hopf-Lax semigroups, optimal transport and functional inequalities on finite metric spaces."""
__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AbsoluteContinuityError,
    CertificationError,
    DomainTruncationError,
    EmptyNeighborhoodError,
    FikitError,
    InvalidArgumentError,
    InvalidMetricError,
    MetricUndefinedError,
    NoInformationError,
    UndefinedEntropyError,
    UnsupportedError,
)
from .hamiltonian import (  # noqa: E402
    ConvexOneDim,
    HamiltonianPair,
    PowerForm,
    Tabulated,
    legendre,
    numeric_pair,
    power_pair,
)
from .hopf_lax import (  # noqa: E402
    HopfLaxResult,
    hj_residual,
    hopf_lax,
    lipschitz_bound_check,
    monotonicity_check,
    scaling_check,
    semigroup_check,
    time_derivative,
)
from .inequalities import (  # noqa: E402
    consts_K,
    consts_rho,
    hc_to_lsi,
    hwi_coupling_check,
    hypercontractivity_curve,
    lsi_check,
    lsi_constant_estimate,
    lsi_implies_talagrand_suite,
    phi_monitor,
    scaling_exponent_probe,
    talagrand_check,
    talagrand_dual_check,
    talagrand_implies_lsi_suite,
)
from .report import CheckReport, aggregate, summary_table  # noqa: E402
from .space import (  # noqa: E402
    MetricSpace,
    build_graph,
    build_grid_1d,
    build_grid_2d,
    build_heisenberg_grid,
    gaussian_measure,
    gibbs_measure,
    lipschitz_constant,
    metric_subgradient,
    validate_metric,
)
from .transport import (  # noqa: E402
    TransportPlan,
    displacement_interpolate_1d,
    entropy,
    entropy_along_geodesic,
    entropy_variational_bound,
    relative_entropy,
    wasserstein_1d,
    wasserstein_p,
)
