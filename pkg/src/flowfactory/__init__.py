"""Combinatorial Bernoulli factories over flow-based polytopes.

Sample vertices of circulation, matching, k-flow, and other flow polytopes
from coin access alone, with an exact-rational oracle for every identity the
sampler relies on.
"""

from .coins import CoinSource, SimulatedCoins, TapeCoins
from .errors import (
    AmbiguousDecomposition,
    BoundaryCoin,
    CoefficientsNotSubunit,
    DegenerateDistribution,
    DisconnectedEdges,
    EmptyPolytope,
    FlowFactoryError,
    IdentityViolated,
    InvalidInstance,
    MaxRestartsExceeded,
    NoArborescence,
    NotCirculation,
    NotInPolytope,
    NotZLS,
    TooLargeForOracle,
)
from .factory import (
    BernsteinMonomial,
    BernsteinPolynomial,
    FlowSampler,
    SampleTrace,
    bernoulli_race,
    factory_polynomials,
    sample_flow,
    sample_monomial_coin,
    sample_path,
    sample_polynomial_coin,
)
from .graphs import (
    CirculationVector,
    FlowPolytope,
    Graph,
    build_circulation_polytope,
    build_kflow_polytope,
    build_matching_polytope,
    decompose_components,
    enumerate_vertices,
    flip_edge,
    flip_tree,
    is_vertex,
    m_map,
    reduce_polytope,
    strongly_connected,
    undirected_connected,
    validate_point,
)
from .oracle import (
    BijectionWitness,
    ExactDistribution,
    check_bijection,
    check_flip_arb_exists,
    check_marginal_identity,
    check_parallel_to_circ,
    check_positivity,
    check_root_independence,
    eval_polynomial,
    eval_polynomial_factored,
    exact_output_distribution,
    random_interior_point,
    statistical_test,
)
from .spanning import (
    Arborescence,
    WeightedDigraph,
    build_laplacian,
    count_arborescences,
    enumerate_directed_trees,
    sample_arborescence,
    sample_flip_tree,
    sarb,
    zls_cofactor_check,
)

__version__ = "0.1.0"
