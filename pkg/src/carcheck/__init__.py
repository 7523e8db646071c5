"""carcheck: exact tests for coarsening at random (car) and its relatives."""

from .bernoulli import (
    BernoulliModel,
    HonestyVerdict,
    ProbeVerdict,
    as_bernoulli,
    bernoulli_transform,
    check_honest,
    extract_mgd,
    induce_bernoulli,
    robustness_probe,
)
from .car import (
    CarVerdict,
    CcarVerdict,
    CoarseningVariable,
    GCarVerdict,
    IgnorabilityReport,
    check_d_car,
    check_d_ccar,
    check_g_car,
    check_g_ccar,
    check_invertible,
    check_m_mar,
    check_m_mcar,
    ignorability_report,
    induced_distribution,
    missingness_coarsening_variable,
)
from .core import (
    CoarseDistribution,
    MissingnessRecord,
    ProductSpace,
    StateSpace,
    StateSubset,
    marginal_y,
    naive_condition,
    observation_set,
    parse_rational,
    same_on_support,
    update_posterior,
    validate_distribution,
)
from .feasibility import FeasibilityOutcome, solve_exact_feasibility
from .hypergraph import (
    CompatibilityVerdict,
    SupportHypergraph,
    check_car_compatible,
    enumerate_hypergraphs,
    from_distribution,
    nested_edges_screen,
    realize,
)
from .procedural import (
    MgdModel,
    PtModel,
    RmcModel,
    TabularSequentialModel,
    UniformNoiseModel,
    build_direct,
    build_mgd,
    build_pt,
    induce,
    induce_mgd,
    induce_noise,
    induce_pt,
    induce_rmc,
    induce_tabular,
)
from .simulation import compare_empirical, simulate

__version__ = "0.1.0"
