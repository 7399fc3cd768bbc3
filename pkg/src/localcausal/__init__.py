"""Local causal structure learning and descendant identification in
maximally oriented partially directed graphs under background knowledge."""

from .errors import (
    GraphError,
    InconsistencyError,
    LocalCausalError,
    NumericalError,
    ParseError,
    ResourceCapError,
)
from .graph import (
    BComponent,
    Dag,
    Mpdag,
    PartiallyDirectedGraph,
    b_components,
    critical_set,
    d_separated,
    d_separated_by_paths,
    graph_from_edge_list,
    graph_from_json,
    graph_to_dot,
    graph_to_edge_list,
    graph_to_json,
    is_clique,
    load_graph_json,
    maximal_cliques,
    save_graph_json,
)
from .meek import (
    DegsEntry,
    build_degs,
    check_degs,
    compelled_graph,
    dag_to_cpdag,
    enumerate_mec,
    meek_closure,
    orient_with_background,
    pattern,
)
from .ci import (
    CachedTester,
    CICache,
    CITester,
    GaussianCI,
    GaussianTestConfig,
    OracleCI,
    cached_test,
    gaussian_test,
    load_csv_dataset,
    oracle_test,
)
from .mb import MarkovBlanket, find_mb
from .learn import (
    BackgroundKnowledge,
    DccClause,
    LocalStructure,
    baseline_local_learn,
    candidate_parent_sets,
    critical_ancestors,
    learn_local,
    learn_marginal_cpdag,
    local_all_knowledge,
    local_with_nonancestral,
    mb_by_mb_mpdag,
)
from .identify import (
    CausalRelation,
    CauseFlavor,
    RelationKind,
    brute_force_classify,
    classify_relations,
    is_definite_non_descendant,
    is_explicit_cause,
    is_implicit_cause,
    knowledge_restricted_mpdag,
    labiter,
    non_descendant_predictors,
    zuo_classify,
)
from .simulate import (
    Sem,
    SimConfig,
    random_chain_component_dag,
    random_dag,
    random_sem,
    sample_background,
    sample_sem,
)
from .metrics import ConfusionMatrix3, kappa, local_scope, local_shd, shd

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
