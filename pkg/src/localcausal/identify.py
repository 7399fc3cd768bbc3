"""Three-way descendant classification: local tests, full-graph baseline,
and the enumeration oracle.

A node y is a definite descendant of x when every member of the restricted
equivalence class has a causal path from x to y, a definite non-descendant
when none has, and a possible descendant otherwise. Definite causes are
explicit when the class representative itself carries a directed path from
x to y, implicit otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .ci import CICache, CITester, as_session
from .errors import InconsistencyError
from .graph import (
    Dag,
    Mpdag,
    PartiallyDirectedGraph,
    critical_set,
    is_clique,
    maximal_cliques,
)
from .learn import (
    BackgroundKnowledge,
    DccClause,
    LocalStructure,
    learn_local,
)
from .meek import DEFAULT_MEC_CAP, dag_to_cpdag, enumerate_mec, orient_with_background


class RelationKind(enum.Enum):
    DEFINITE_DESCENDANT = "definite-descendant"
    DEFINITE_NON_DESCENDANT = "definite-non-descendant"
    POSSIBLE_DESCENDANT = "possible-descendant"


class CauseFlavor(enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class CausalRelation:
    kind: RelationKind
    flavor: CauseFlavor | None = None

    def __post_init__(self):
        if (self.flavor is not None) != (
            self.kind is RelationKind.DEFINITE_DESCENDANT
        ):
            raise ValueError(
                "flavor must be present exactly for definite descendants"
            )


DEF_DES_EXPLICIT = CausalRelation(
    RelationKind.DEFINITE_DESCENDANT, CauseFlavor.EXPLICIT
)
DEF_DES_IMPLICIT = CausalRelation(
    RelationKind.DEFINITE_DESCENDANT, CauseFlavor.IMPLICIT
)
DEF_NON_DES = CausalRelation(RelationKind.DEFINITE_NON_DESCENDANT)
POS_DES = CausalRelation(RelationKind.POSSIBLE_DESCENDANT)


# -- single-query local tests --------------------------------------------------


def is_definite_non_descendant(
    ls: LocalStructure, y: int, tester: CITester
) -> bool:
    """One query: x independent of y given the learned parents of x."""
    x = ls.target
    session = as_session(tester, ls.cache)
    return session.test(x, y, frozenset(ls.parents()))


def is_explicit_cause(ls: LocalStructure, y: int, tester: CITester) -> bool:
    """One query: x dependent on y given learned parents plus siblings."""
    x = ls.target
    session = as_session(tester, ls.cache)
    return not session.test(x, y, frozenset(ls.parents() | ls.siblings()))


def is_implicit_cause(ls: LocalStructure, y: int, tester: CITester) -> bool:
    """x separated by parents plus siblings, yet no sibling clique separates."""
    x = ls.target
    session = as_session(tester, ls.cache)
    sibs = ls.siblings()
    cliques = maximal_cliques(ls.graph, sibs)
    if not cliques:
        # without siblings the explicit test already settles the question
        return False
    if not session.test(x, y, frozenset(ls.parents() | sibs)):
        return False
    parents = frozenset(ls.parents())
    return all(not session.test(x, y, parents | q) for q in cliques)


def classify_relations(
    ls: LocalStructure, tester: CITester
) -> dict[int, CausalRelation]:
    """Classify every other node against the session's target.

    Decision cascade per node: the parent test settles definite
    non-descendants, then the explicit test, then the all-cliques test for
    implicit causes; what remains is possible. Learned parents of x are
    non-descendants and learned siblings are possible descendants by
    construction, so those skip the (ill-posed) queries that would condition
    on the node itself.
    """
    x = ls.target
    g = ls.graph
    session = as_session(tester, ls.cache)
    parents = frozenset(ls.parents())
    sibs = frozenset(ls.siblings())
    cliques = maximal_cliques(g, sibs)
    out: dict[int, CausalRelation] = {}
    for y in range(g.n):
        if y == x:
            continue
        if y in parents:
            out[y] = DEF_NON_DES
            continue
        if session.test(x, y, parents):
            out[y] = DEF_NON_DES
            continue
        if y in sibs:
            out[y] = POS_DES
            continue
        if not session.test(x, y, parents | sibs):
            out[y] = DEF_DES_EXPLICIT
        elif cliques and all(
            not session.test(x, y, parents | q) for q in cliques
        ):
            out[y] = DEF_DES_IMPLICIT
        else:
            out[y] = POS_DES
    return out


def labiter(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge | None = None,
    *,
    cache: CICache | None = None,
    strict: bool = True,
) -> dict[int, CausalRelation]:
    """Learn the local structure of x, then classify all other nodes.

    The learner is picked by the knowledge types present. All queries share
    one cache, so ``cache.count`` afterwards is the total session cost.
    """
    session = as_session(tester, cache)
    ls = learn_local(x, session, knowledge, strict=strict)
    return classify_relations(ls, session)


# -- full-graph baseline --------------------------------------------------------


def zuo_classify(g: PartiallyDirectedGraph, x: int, y: int) -> CausalRelation:
    """Critical-set classification on a fully known graph.

    Definite descendant when the critical set meets ch(x) or is non-empty
    and induces an incomplete subgraph; definite non-descendant when it is
    empty; possible otherwise. Flavor comes from ancestry in the graph
    itself.
    """
    crit = critical_set(g, x, y)
    if not crit:
        return DEF_NON_DES
    if crit & g.ch(x) or not is_clique(g, crit):
        if x in g.ancestors(y):
            return DEF_DES_EXPLICIT
        return DEF_DES_IMPLICIT
    return POS_DES


def brute_force_classify(
    g: PartiallyDirectedGraph,
    x: int,
    y: int,
    cap: int = DEFAULT_MEC_CAP,
) -> CausalRelation:
    """Ground-truth classification by enumerating every extension."""
    members = enumerate_mec(g, cap)
    hits = sum(1 for m in members if x in m.ancestors(y))
    if hits == len(members):
        if x in g.ancestors(y):
            return DEF_DES_EXPLICIT
        return DEF_DES_IMPLICIT
    if hits == 0:
        return DEF_NON_DES
    return POS_DES


# -- reference construction of the restricted class -----------------------------


def knowledge_restricted_mpdag(
    dag: Dag,
    knowledge: BackgroundKnowledge | None = None,
) -> tuple[Mpdag, tuple[DccClause, ...]]:
    """Restricted-class representative for a true DAG plus knowledge.

    Ancestral claims are resolved against the no-knowledge representative
    (where sibling ancestors of a critical set equal the critical set):
    singleton critical sets become direct edges, larger ones remain as
    residual clauses, and claims about already definite causes are dropped.
    Direct edges are then oriented, and each non-ancestral claim orients its
    critical set into the claim's subject, closing after each step.
    """
    k = knowledge if knowledge is not None else BackgroundKnowledge()
    cpdag = dag_to_cpdag(dag)

    clauses: list[DccClause] = []
    collapsed: list[tuple[int, int]] = []
    for f, t in k.ancestral:
        crit = critical_set(cpdag, f, t)
        if not crit:
            raise InconsistencyError(
                f"ancestral claim ({f}, {t}) admits no causal route"
            )
        if crit & cpdag.ch(f) or not is_clique(cpdag, crit):
            continue  # already a definite cause
        cand = sorted(cpdag.ancestors_of_set(crit) & cpdag.sib(f))
        if len(cand) == 1:
            collapsed.append((f, cand[0]))
        else:
            clauses.append(DccClause(f, frozenset(cand)))

    g = orient_with_background(cpdag, tuple(k.direct) + tuple(collapsed))

    for n, t in k.non_ancestral:
        crit = critical_set(g, n, t)
        if not crit:
            continue
        if crit & g.ch(n) or not is_clique(g, crit):
            raise InconsistencyError(
                f"non-ancestral claim ({n}, {t}) contradicts a definite "
                "causal relation"
            )
        g = orient_with_background(g, [(c, n) for c in sorted(crit)])

    return g, tuple(clauses)


def classify_with_oracle_graph(
    g: PartiallyDirectedGraph,
    x: int,
    method: str = "zuo",
    cap: int = DEFAULT_MEC_CAP,
) -> dict[int, CausalRelation]:
    """Classify all nodes against x on a fully known graph."""
    if method == "zuo":
        fn = lambda y: zuo_classify(g, x, y)  # noqa: E731
    elif method == "brute-force":
        fn = lambda y: brute_force_classify(g, x, y, cap)  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    return {y: fn(y) for y in range(g.n) if y != x}


def non_descendant_predictors(
    relations: dict[int, CausalRelation], relaxed: bool = False
) -> list[int]:
    """Variable-selection helper: nodes safe to predict from.

    Definite non-descendants of the sensitive variable, plus possible
    descendants when ``relaxed``.
    """
    keep = {RelationKind.DEFINITE_NON_DESCENDANT}
    if relaxed:
        keep.add(RelationKind.POSSIBLE_DESCENDANT)
    return sorted(y for y, rel in relations.items() if rel.kind in keep)
