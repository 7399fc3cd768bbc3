import numpy as np
import pytest

from localcausal import (
    BackgroundKnowledge,
    CICache,
    Dag,
    InconsistencyError,
    OracleCI,
    PartiallyDirectedGraph,
    baseline_local_learn,
    candidate_parent_sets,
    critical_ancestors,
    critical_set,
    dag_to_cpdag,
    learn_local,
    learn_marginal_cpdag,
    local_all_knowledge,
    local_with_nonancestral,
    mb_by_mb_mpdag,
    orient_with_background,
    pattern,
)
from localcausal.ci import as_session
from localcausal.learn import candidate_parent_sets_graph
from localcausal.simulate import random_dag, sample_background

from conftest import (
    A,
    B,
    X,
    Y,
    four_node_dag,
    random_direct_knowledge,
    random_instance,
    true_restricted,
)


def wide_blanket_dag() -> Dag:
    """Chain of confounders feeding two mediators of the target.

    x=0 has parents y=1 and z=2, which share the nonadjacent ancestors
    a=3 and c=5 (with b=4 between them); z also feeds two leaves. Finding
    the blanket of z requires every other variable, which makes the
    no-knowledge and with-knowledge sessions explore very different scopes.
    """
    x, y, z, a, b, c, d1, d2 = range(8)
    return Dag(
        8,
        [
            (a, b), (b, c),
            (a, y), (b, y), (c, y),
            (a, z), (b, z), (c, z),
            (y, x), (z, x),
            (z, d1), (z, d2),
        ],
    )


def local_matches(g, truth, nodes) -> bool:
    return all(
        g.pa(v) == truth.pa(v)
        and g.ch(v) == truth.ch(v)
        and g.sib(v) == truth.sib(v)
        for v in nodes
    )


def contract_nodes(truth, x) -> set[int]:
    return truth.undirected_component(x)


class TestMarginalPattern:
    def test_chain_scope(self):
        g = Dag(3, [(0, 1), (1, 2)])
        out = learn_marginal_cpdag(range(3), OracleCI(g))
        assert set(out.undirected_edges()) == {(0, 1), (1, 2)}
        assert not out.directed_edges()

    def test_collider_scope(self):
        g = Dag(3, [(0, 1), (2, 1)])
        out = learn_marginal_cpdag(range(3), OracleCI(g))
        assert set(out.directed_edges()) == {(0, 1), (2, 1)}

    def test_four_node_full_scope_matches_pattern(self):
        g = four_node_dag()
        out = learn_marginal_cpdag(range(4), OracleCI(g))
        assert out == pattern(g)

    def test_restricted_scope_marginal(self):
        # over {A, X, B} the collider at Y is invisible
        g = four_node_dag()
        out = learn_marginal_cpdag([A, X, B], OracleCI(g))
        assert set(out.undirected_edges()) == {(A, X), (X, B)}

    def test_separations_recorded(self):
        g = four_node_dag()
        cache = CICache()
        learn_marginal_cpdag(range(4), OracleCI(g), cache)
        assert cache.has_separator_containing(A, B, X)


class TestMbByMb:
    def test_four_node_no_knowledge(self, g3):
        ls = mb_by_mb_mpdag(A, OracleCI(g3))
        assert ls.parents() == set()
        assert ls.children() == {Y}
        assert ls.siblings() == {X}
        assert set(ls.sibling_skeleton().adj(X)) == set()

    def test_four_node_with_knowledge(self, g3):
        ls = mb_by_mb_mpdag(
            A, OracleCI(g3), BackgroundKnowledge(direct=[(A, X)])
        )
        assert ls.children() == {X, Y}
        assert ls.siblings() == set()

    def test_early_orientation_from_knowledge(self):
        # knowledge about a parent's nonadjacent cause orients the edge to
        # the target before that parent's blanket is ever explored
        g = wide_blanket_dag()
        x, y, z, a = 0, 1, 2, 3
        k = BackgroundKnowledge(direct=[(a, y)])
        ls = mb_by_mb_mpdag(x, OracleCI(g), k)
        assert ls.explored == (x, z)
        assert ls.parents() == {y, z}

    def test_plain_run_explores_more(self):
        g = wide_blanket_dag()
        ls = mb_by_mb_mpdag(0, OracleCI(g))
        assert ls.parents() == {1, 2}
        assert len(ls.explored) >= 2

    def test_rejects_nondirect_knowledge(self, g3):
        with pytest.raises(ValueError):
            mb_by_mb_mpdag(
                A, OracleCI(g3), BackgroundKnowledge(non_ancestral=[(A, B)])
            )

    def test_contradictory_knowledge_raises(self, g3):
        with pytest.raises(InconsistencyError):
            mb_by_mb_mpdag(
                A, OracleCI(g3), BackgroundKnowledge(direct=[(X, Y), (A, B)])
            )

    def test_theorem1_contract_randomized(self):
        rng = np.random.default_rng(200)
        for _ in range(60):
            dag = random_instance(rng)
            k = random_direct_knowledge(dag, rng)
            x = int(rng.integers(dag.n))
            truth = true_restricted(dag, k)
            ls = mb_by_mb_mpdag(x, OracleCI(dag), k)
            nodes = contract_nodes(truth, x) | {x}
            assert local_matches(ls.graph, truth, nodes)

    def test_reuse_toggle_preserves_output(self):
        rng = np.random.default_rng(201)
        for _ in range(20):
            dag = random_instance(rng)
            k = random_direct_knowledge(dag, rng)
            x = int(rng.integers(dag.n))
            fast = mb_by_mb_mpdag(x, OracleCI(dag), k, cache=CICache())
            slow = mb_by_mb_mpdag(
                x, OracleCI(dag), k, cache=CICache(), reuse_shortcuts=False
            )
            assert fast.graph == slow.graph
            assert fast.ci_count <= slow.ci_count


class TestBaseline:
    def test_no_knowledge_coincides_with_learner(self, g3):
        ls = mb_by_mb_mpdag(A, OracleCI(g3), cache=CICache())
        base = baseline_local_learn(A, OracleCI(g3), cache=CICache())
        assert ls.graph == base.graph
        assert ls.ci_count == base.ci_count

    def test_fully_directed_truth_trivial(self):
        g = Dag(3, [(0, 1), (2, 1)])
        ls = baseline_local_learn(0, OracleCI(g))
        assert ls.explored == (0,)

    def test_matched_order_never_cheaper_for_learner(self):
        rng = np.random.default_rng(202)
        strict_wins = 0
        for _ in range(60):
            dag = random_instance(rng, 5, 9)
            k = random_direct_knowledge(dag, rng)
            x = int(rng.integers(dag.n))
            ls = mb_by_mb_mpdag(x, OracleCI(dag), k, cache=CICache())
            base = baseline_local_learn(
                x, OracleCI(dag), k, cache=CICache(), order_hint=ls.explored
            )
            assert ls.ci_count <= base.ci_count
            assert ls.graph.pa(x) == base.graph.pa(x)
            assert ls.graph.ch(x) == base.graph.ch(x)
            assert ls.graph.sib(x) == base.graph.sib(x)
            if ls.ci_count < base.ci_count:
                strict_wins += 1
        assert strict_wins > 0

    def test_wide_blanket_costs_more_for_baseline(self):
        g = wide_blanket_dag()
        k = BackgroundKnowledge(direct=[(3, 1)])
        ls = mb_by_mb_mpdag(0, OracleCI(g), k, cache=CICache())
        base = baseline_local_learn(
            0, OracleCI(g), k, cache=CICache(), order_hint=ls.explored
        )
        assert ls.graph.pa(0) == base.graph.pa(0) == {1, 2}
        assert ls.ci_count <= base.ci_count


class TestCandidateParentSets:
    def test_no_siblings_gives_empty_set_only(self, g3):
        ls = mb_by_mb_mpdag(Y, OracleCI(g3))
        assert candidate_parent_sets(ls, Y) == [frozenset()]

    def test_four_node_target(self, g3):
        ls = mb_by_mb_mpdag(A, OracleCI(g3))
        assert candidate_parent_sets(ls, A) == [frozenset(), frozenset({X})]

    def test_nonadjacent_pair_excluded(self):
        g = PartiallyDirectedGraph(3, undirected=[(0, 1), (0, 2)])
        found = candidate_parent_sets_graph(g, 0)
        assert frozenset({1, 2}) not in found
        assert frozenset({1}) in found and frozenset({2}) in found

    def test_directed_triangle_excluded(self):
        # siblings b, c of a with b->c: choosing {c} alone creates the
        # cycle a->b->c->a
        g = PartiallyDirectedGraph(
            3, directed=[(1, 2)], undirected=[(0, 1), (0, 2)]
        )
        with_guard = candidate_parent_sets_graph(g, 0, forbid_triangles=True)
        assert frozenset({2}) not in with_guard
        assert frozenset({1, 2}) in with_guard
        without = candidate_parent_sets_graph(g, 0, forbid_triangles=False)
        assert frozenset({2}) in without

    def test_parent_adjacency_required(self):
        # sibling not adjacent to an existing parent would create a collider
        g = PartiallyDirectedGraph(
            3, directed=[(1, 0)], undirected=[(0, 2)]
        )
        found = candidate_parent_sets_graph(g, 0)
        assert found == [frozenset()]

    def test_unexplored_node_rejected(self, g3):
        ls = mb_by_mb_mpdag(A, OracleCI(g3))
        missing = next(v for v in range(4) if v not in ls.explored)
        with pytest.raises(ValueError):
            candidate_parent_sets(ls, missing)


class TestCriticalAncestors:
    def test_four_node_pair(self, g3):
        ls = mb_by_mb_mpdag(A, OracleCI(g3))
        assert critical_ancestors(ls, A, B, OracleCI(g3)) == frozenset({X})

    def test_no_separating_completion(self, g3):
        ls = mb_by_mb_mpdag(X, OracleCI(g3))
        assert critical_ancestors(ls, X, Y, OracleCI(g3)) is None

    def test_already_separated_by_parents(self):
        g = Dag(3, [(0, 1), (1, 2)])
        ls = mb_by_mb_mpdag(0, OracleCI(g))
        # 0's parents are resolved empty only after knowledge; use node 2
        ls2 = mb_by_mb_mpdag(2, OracleCI(g))
        del ls
        assert critical_ancestors(ls2, 2, 0, OracleCI(g)) is not None

    def test_matches_full_graph_identity(self):
        rng = np.random.default_rng(203)
        checked = 0
        while checked < 60:
            dag = random_instance(rng, 4, 8)
            k = random_direct_knowledge(dag, rng)
            truth = true_restricted(dag, k)
            x = int(rng.integers(dag.n))
            targets = [
                y
                for y in range(dag.n)
                if y != x and not truth.adjacent(x, y)
            ]
            if not targets:
                continue
            y = targets[int(rng.integers(len(targets)))]
            crit = critical_set(truth, x, y)
            if crit & truth.ch(x) or not all(
                truth.adjacent(u, v)
                for u in crit
                for v in crit
                if u < v
            ):
                continue  # definite cause, outside the identity's premise
            expected = truth.ancestors_of_set(crit) & truth.sib(x)
            ls = mb_by_mb_mpdag(x, OracleCI(dag), k, cache=CICache())
            got = critical_ancestors(ls, x, y, OracleCI(dag))
            assert got == frozenset(expected)
            checked += 1


class TestNonAncestral:
    def test_four_node_claim(self, g3):
        k = BackgroundKnowledge(non_ancestral=[(A, B)])
        ls = local_with_nonancestral(A, OracleCI(g3), k)
        assert ls.parents() == {X}
        assert ls.graph.has_undirected(X, B)

    def test_matches_restricted_class(self, g3):
        # the class keeping only members where A is not a cause of B
        k = BackgroundKnowledge(non_ancestral=[(A, B)])
        ls = local_with_nonancestral(A, OracleCI(g3), k)
        truth = orient_with_background(dag_to_cpdag(g3), [(X, A)])
        assert local_matches(ls.graph, truth, contract_nodes(truth, A) | {A})

    def test_out_of_component_claim_ignored(self, g3):
        k = BackgroundKnowledge(non_ancestral=[(Y, B)])
        ls = local_with_nonancestral(A, OracleCI(g3), k)
        plain = mb_by_mb_mpdag(A, OracleCI(g3))
        assert ls.graph == plain.graph

    def test_empty_claims_reduce_to_direct_learner(self, g3):
        k = BackgroundKnowledge(direct=[(A, X)])
        ls = local_with_nonancestral(A, OracleCI(g3), k)
        plain = mb_by_mb_mpdag(A, OracleCI(g3), k)
        assert ls.graph == plain.graph

    def test_adjacent_claim_orients_edge(self, g3):
        # "X is not a cause of A" with X-A undirected forces A... no: X->A
        k = BackgroundKnowledge(non_ancestral=[(X, A)])
        ls = local_with_nonancestral(X, OracleCI(g3), k)
        assert ls.graph.has_directed(A, X)

    def test_inconsistent_claim_raises(self, g3):
        # X is a definite cause of Y, so the claim cannot hold
        k = BackgroundKnowledge(non_ancestral=[(X, Y)])
        with pytest.raises(InconsistencyError):
            local_with_nonancestral(X, OracleCI(g3), k)

    def test_theorem3_contract_randomized(self):
        rng = np.random.default_rng(204)
        checked = 0
        while checked < 60:
            dag = random_instance(rng, 4, 8)
            direct = random_direct_knowledge(dag, rng, 0.3)
            pool = [
                (a, b)
                for a in range(dag.n)
                for b in range(dag.n)
                if a != b and b not in dag.descendants(a)
            ]
            if not pool:
                continue
            picks = rng.choice(
                len(pool), size=min(2, len(pool)), replace=False
            )
            k = BackgroundKnowledge(
                direct=direct.direct,
                non_ancestral=[pool[i] for i in sorted(picks)],
            )
            x = int(rng.integers(dag.n))
            ls = local_with_nonancestral(x, OracleCI(dag), k)
            truth = _reference_restricted(dag, k)
            nodes = contract_nodes(truth, x) | {x}
            assert local_matches(ls.graph, truth, nodes)
            checked += 1


def _reference_restricted(dag, k):
    from localcausal import knowledge_restricted_mpdag

    graph, _ = knowledge_restricted_mpdag(dag, k)
    return graph


def dcc_pair_dag() -> Dag:
    """Two adjacent siblings of the source both open routes to the sink.

    x=0 with siblings s1=1, s2=2 (s1-s2 adjacent); both feed w=3 which is
    compelled into y=4 by the outside parent u=5.
    """
    x, s1, s2, w, y, u = range(6)
    return Dag(
        6,
        [
            (x, s1), (x, s2), (s1, s2),
            (s1, w), (s2, w), (u, w), (w, y),
        ],
    )


class TestAllKnowledge:
    def test_four_node_ancestral_collapses_to_edge(self, g3):
        k = BackgroundKnowledge(ancestral=[(A, B)])
        ls = local_all_knowledge(A, OracleCI(g3), k)
        assert ls.dcc == ()
        assert ls.children() == {X, Y}
        assert ls.graph.has_directed(X, B)

    def test_empty_ancestral_matches_nonancestral_learner(self, g3):
        k = BackgroundKnowledge(non_ancestral=[(A, B)])
        via_all = local_all_knowledge(A, OracleCI(g3), k)
        via_na = local_with_nonancestral(A, OracleCI(g3), k)
        assert via_all.graph == via_na.graph
        assert via_all.dcc == ()

    def test_disconnected_source_emits_no_clause(self, g3):
        k = BackgroundKnowledge(ancestral=[(Y, B)])
        # Y has no undirected path to A, so nothing is learned from it
        ls = local_all_knowledge(A, OracleCI(g3), k)
        assert ls.dcc == ()
        plain = mb_by_mb_mpdag(A, OracleCI(g3))
        assert ls.graph == plain.graph

    def test_residual_clause_kept(self):
        g = dcc_pair_dag()
        x, s1, s2 = 0, 1, 2
        y = 4
        k = BackgroundKnowledge(ancestral=[(x, y)])
        ls = local_all_knowledge(x, OracleCI(g), k)
        assert len(ls.dcc) == 1
        clause = ls.dcc[0]
        assert clause.source == x
        assert clause.options == frozenset({s1, s2})
        # the clause is not representable as orientations: x keeps both sibs
        assert ls.siblings() == {s1, s2}

    def test_redundant_claim_about_definite_cause(self, g3):
        k = BackgroundKnowledge(ancestral=[(X, Y)])
        ls = local_all_knowledge(X, OracleCI(g3), k)
        assert ls.dcc == ()
        plain = mb_by_mb_mpdag(X, OracleCI(g3))
        assert ls.graph == plain.graph


class TestLearnLocalDispatch:
    def test_dispatch(self, g3):
        oracle = OracleCI(g3)
        assert learn_local(A, oracle, None).graph == mb_by_mb_mpdag(
            A, oracle
        ).graph
        k2 = BackgroundKnowledge(non_ancestral=[(A, B)])
        assert learn_local(A, oracle, k2).graph == local_with_nonancestral(
            A, oracle, k2
        ).graph
        k3 = BackgroundKnowledge(ancestral=[(A, B)])
        assert learn_local(A, oracle, k3).graph == local_all_knowledge(
            A, oracle, k3
        ).graph

    def test_serialization(self, g3, tmp_path):
        ls = mb_by_mb_mpdag(A, OracleCI(g3))
        payload = ls.to_json()
        assert payload["target"] == A
        assert payload["siblings"] == [X]
        assert payload["ci_tests"] == ls.ci_count
        path = tmp_path / "ls.json"
        ls.dump(str(path))
        assert path.exists()
