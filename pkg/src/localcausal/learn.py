"""Local structure learning around a target under background knowledge.

The learners explore blankets outward from the target, keep every certified
separation, and only fire an orientation rule when the nonadjacency it
relies on has a recorded witness. Three entry points cover the three
knowledge types: direct edges only, direct plus non-ancestral claims, and
all three kinds (ancestral claims become direct-causal clauses).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .ci import CICache, CITester, CachedTester, as_session
from .errors import InconsistencyError, ParseError
from .graph import PartiallyDirectedGraph, maximal_cliques
from .mb import find_mb

Edge = tuple[int, int]


# -- knowledge ---------------------------------------------------------------


def _as_pairs(items: Iterable[Edge], kind: str) -> tuple[Edge, ...]:
    out: list[Edge] = []
    for item in items:
        a, b = item
        a, b = int(a), int(b)
        if a == b:
            raise ValueError(f"{kind} pair ({a}, {b}) must name distinct nodes")
        if (a, b) not in out:
            out.append((a, b))
    return tuple(out)


@dataclass(frozen=True)
class BackgroundKnowledge:
    """Direct edges, non-ancestral claims and ancestral claims.

    ``direct`` pairs (f, t) assert the edge f->t. ``non_ancestral`` pairs
    (n, t) assert n is not a cause of t. ``ancestral`` pairs (f, t) assert
    f is a cause of t.
    """

    direct: tuple[Edge, ...] = ()
    non_ancestral: tuple[Edge, ...] = ()
    ancestral: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "direct", _as_pairs(self.direct, "direct"))
        object.__setattr__(
            self, "non_ancestral", _as_pairs(self.non_ancestral, "non-ancestral")
        )
        object.__setattr__(
            self, "ancestral", _as_pairs(self.ancestral, "ancestral")
        )
        for a, b in self.direct:
            if (b, a) in self.direct:
                raise InconsistencyError(
                    f"direct knowledge contains both {a}->{b} and {b}->{a}"
                )
        for pair in self.non_ancestral:
            if pair in self.ancestral:
                raise InconsistencyError(
                    f"pair {pair} is claimed both ancestral and non-ancestral"
                )

    @property
    def empty(self) -> bool:
        return not (self.direct or self.non_ancestral or self.ancestral)

    def to_json(self) -> dict:
        return {
            "format": KNOWLEDGE_FORMAT,
            "direct": [list(e) for e in self.direct],
            "non_ancestral": [list(e) for e in self.non_ancestral],
            "ancestral": [list(e) for e in self.ancestral],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "BackgroundKnowledge":
        if not isinstance(payload, dict):
            raise ParseError("knowledge payload must be a JSON object")
        fmt = payload.get("format", KNOWLEDGE_FORMAT)
        if fmt != KNOWLEDGE_FORMAT:
            raise ParseError(f"unsupported knowledge format {fmt!r}")
        try:
            return cls(
                direct=[tuple(map(int, e)) for e in payload.get("direct", [])],
                non_ancestral=[
                    tuple(map(int, e)) for e in payload.get("non_ancestral", [])
                ],
                ancestral=[
                    tuple(map(int, e)) for e in payload.get("ancestral", [])
                ],
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"malformed knowledge payload: {exc}") from exc


KNOWLEDGE_FORMAT = "knowledge-v1"


@dataclass(frozen=True)
class DccClause:
    """Disjunctive constraint: at least one option is a direct child of source."""

    source: int
    options: frozenset[int]

    def __post_init__(self):
        if not self.options:
            raise ValueError("clause options must be non-empty")
        if self.source in self.options:
            raise ValueError("clause source cannot be an option")


# -- learned structure ----------------------------------------------------------

LOCAL_STRUCTURE_FORMAT = "local-structure-v1"


@dataclass
class LocalStructure:
    """Output of a learning session: graph, exploration trace and cache."""

    target: int
    graph: PartiallyDirectedGraph
    explored: tuple[int, ...]
    cache: CICache
    knowledge: BackgroundKnowledge = field(default_factory=BackgroundKnowledge)
    dcc: tuple[DccClause, ...] = ()

    @property
    def ci_count(self) -> int:
        return self.cache.count

    @property
    def ind_set(self) -> dict:
        return self.cache.ind_set

    def parents(self) -> set[int]:
        return self.graph.pa(self.target)

    def children(self) -> set[int]:
        return self.graph.ch(self.target)

    def siblings(self) -> set[int]:
        return self.graph.sib(self.target)

    def sibling_skeleton(self) -> PartiallyDirectedGraph:
        return self.graph.induced_subgraph(self.siblings())

    def to_json(self) -> dict:
        g = self.graph
        return {
            "format": LOCAL_STRUCTURE_FORMAT,
            "target": self.target,
            "explored": list(self.explored),
            "directed": [list(e) for e in g.directed_edges()],
            "undirected": [list(e) for e in g.undirected_edges()],
            "parents": sorted(self.parents()),
            "children": sorted(self.children()),
            "siblings": sorted(self.siblings()),
            "dcc": [
                {"source": c.source, "options": sorted(c.options)}
                for c in self.dcc
            ],
            "ci_tests": self.ci_count,
        }

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")


# -- marginal pattern learning ----------------------------------------------------


def learn_marginal_cpdag(
    scope: Iterable[int],
    tester: CITester,
    cache: CICache | None = None,
) -> PartiallyDirectedGraph:
    """Skeleton plus collider orientations over a restricted variable set.

    Adjacency search tests conditioning sets of growing size drawn from the
    current neighborhoods inside the scope (neighborhoods snapshotted per
    level, so the outcome does not depend on removal order). Every
    discovered separation lands in the cache. No propagation rules are
    applied here; the caller's guarded loop does that.
    """
    nodes = sorted(set(scope))
    if not nodes:
        raise ValueError("scope must contain at least one variable")
    session = as_session(tester, cache)

    adj: dict[int, set[int]] = {v: set(nodes) - {v} for v in nodes}
    sepset: dict[Edge, frozenset[int]] = {}

    level = 0
    while True:
        snapshot = {v: set(adj[v]) for v in nodes}
        if not any(
            len(snapshot[a] - {b}) >= level
            for a in nodes
            for b in snapshot[a]
        ):
            break
        for a in nodes:
            for b in sorted(snapshot[a]):
                if a >= b or b not in adj[a]:
                    continue
                separated = False
                for x, y in ((a, b), (b, a)):
                    for cond in itertools.combinations(
                        sorted(snapshot[x] - {y}), level
                    ):
                        if session.test(a, b, cond):
                            adj[a].discard(b)
                            adj[b].discard(a)
                            sepset[(a, b)] = frozenset(cond)
                            separated = True
                            break
                    if separated:
                        break
        level += 1

    g = PartiallyDirectedGraph(session.n_vars)
    for a in nodes:
        for b in sorted(adj[a]):
            if a < b:
                g.add_undirected(a, b)
    for b in nodes:
        for a, c in itertools.combinations(sorted(g.sib(b) | g.pa(b)), 2):
            if g.adjacent(a, c):
                continue
            sep = sepset.get((a, c) if a < c else (c, a))
            if sep is None or b in sep:
                continue
            for tail in (a, c):
                if g.has_undirected(tail, b):
                    g.orient(tail, b)
    return g


# -- witness-guarded orientation rules ----------------------------------------------


def _guarded_pass(g: PartiallyDirectedGraph, cache: CICache) -> bool:
    """One sweep of R1-R4 where every nonadjacency premise needs a witness.

    R1/R3/R4 fire only when the required nonadjacency is certified by a
    recorded separation whose conditioning set contains the rule's middle
    node; R2 needs no witness.
    """
    changed = False
    # R1: a->b-c, witness (a, c, S) with b in S
    for a, b in g.directed_edges():
        for c in sorted(g.sib(b)):
            if c == a or g.adjacent(a, c):
                continue
            if cache.has_separator_containing(a, c, b):
                if g.has_undirected(b, c):
                    g.orient(b, c)
                    changed = True
    # R2: a->b->c with a-c
    for a in range(g.n):
        for b in sorted(g.ch(a)):
            for c in sorted(g.ch(b)):
                if g.has_undirected(a, c):
                    g.orient(a, c)
                    changed = True
    # R3: a-b, a-c->b, a-d->b, witness (c, d, S) with a in S
    for a in range(g.n):
        for b in sorted(g.sib(a)):
            legs = [p for p in sorted(g.pa(b)) if g.has_undirected(a, p)]
            for c, d in itertools.combinations(legs, 2):
                if g.adjacent(c, d):
                    continue
                if cache.has_separator_containing(c, d, a):
                    if g.has_undirected(a, b):
                        g.orient(a, b)
                        changed = True
    # R4: a-b, a-c->b, a-d->c, witness (b, d, S) with a in S
    for a in range(g.n):
        sibs = sorted(g.sib(a))
        for b in sibs:
            for c in sibs:
                if c == b or not g.has_directed(c, b):
                    continue
                for d in sibs:
                    if d in (b, c) or not g.has_directed(d, c):
                        continue
                    if g.adjacent(b, d):
                        continue
                    if cache.has_separator_containing(b, d, a):
                        if g.has_undirected(a, b):
                            g.orient(a, b)
                            changed = True
    return changed


def _propagate(g: PartiallyDirectedGraph, cache: CICache) -> None:
    while _guarded_pass(g, cache):
        pass


# -- blanket-by-blanket exploration ------------------------------------------------


def _merge_directed(g: PartiallyDirectedGraph, tail: int, head: int) -> None:
    status = g.edge_status(tail, head)
    if status == "absent":
        g.add_directed(tail, head)
    elif status == "undirected":
        g.orient(tail, head)
    # already directed either way: keep the existing orientation


def _merge_undirected(g: PartiallyDirectedGraph, a: int, b: int) -> None:
    if g.edge_status(a, b) == "absent":
        g.add_undirected(a, b)


def _check_direct_knowledge(
    knowledge: Sequence[Edge], cache: CICache
) -> None:
    for f, t in knowledge:
        if cache.has_separator(f, t):
            raise InconsistencyError(
                f"background edge {f}->{t} is absent from the learned "
                "skeleton (a separation was recorded for the pair)"
            )


def _pop_next(wait: list[int], order_hint: Sequence[int] | None) -> int:
    if not order_hint:
        return wait.pop(0)
    pos = {v: i for i, v in enumerate(order_hint)}
    big = len(order_hint)
    z = min(wait, key=lambda v: (pos.get(v, big), v))
    wait.remove(z)
    return z


def _mb_by_mb(
    x: int,
    session: CachedTester,
    knowledge_direct: Sequence[Edge] = (),
    *,
    reuse_shortcuts: bool = True,
    order_hint: Sequence[int] | None = None,
    strict: bool = True,
) -> tuple[PartiallyDirectedGraph, tuple[int, ...]]:
    n = session.n_vars
    if not (0 <= x < n):
        raise ValueError(f"target {x} out of range")
    g = PartiallyDirectedGraph(n)
    for f, t in knowledge_direct:
        status = g.edge_status(f, t)
        if status == "absent":
            g.add_directed(f, t)
        elif status == "<-":
            raise InconsistencyError(
                f"direct knowledge {f}->{t} contradicts {t}->{f}"
            )

    done: list[int] = []
    done_set: set[int] = set()
    wait: list[int] = [x]
    scopes: dict[int, frozenset[int]] = {}
    patterns: dict[int, PartiallyDirectedGraph] = {}

    while wait:
        z = _pop_next(wait, order_hint)
        done.append(z)
        done_set.add(z)

        blanket = find_mb(z, range(n), session).members
        scope = frozenset(blanket | {z})

        local = None
        if reuse_shortcuts:
            for prev in done[:-1]:
                if scope <= scopes[prev]:
                    local = patterns[prev].induced_subgraph(scope)
                    break
            if local is None and blanket <= done_set:
                local = g.induced_subgraph(scope)
        if local is None:
            local = learn_marginal_cpdag(scope, session)
        scopes[z] = scope
        patterns[z] = local

        for w in sorted(local.adj(z)):
            status = local.edge_status(z, w)
            if status == "->":
                _merge_directed(g, z, w)
            elif status == "<-":
                _merge_directed(g, w, z)
            else:
                _merge_undirected(g, z, w)
        for a, b, c in local.v_structures():
            if z in (a, b, c):
                _merge_directed(g, a, b)
                _merge_directed(g, c, b)

        _propagate(g, session.cache)
        if strict and knowledge_direct:
            _check_direct_knowledge(knowledge_direct, session.cache)

        connected = g.undirected_component(x)
        eligible = connected - done_set
        kept = [u for u in wait if u in eligible]
        fresh = sorted(u for u in eligible if u not in set(wait))
        wait = kept + fresh

    return g, tuple(done)


def mb_by_mb_mpdag(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge | None = None,
    *,
    cache: CICache | None = None,
    reuse_shortcuts: bool = True,
    order_hint: Sequence[int] | None = None,
    strict: bool = True,
) -> LocalStructure:
    """Learn the local structure of x given direct-edge knowledge.

    Explores the target, then every node still connected to it by an
    undirected path in the working graph, copying each node's incident
    edges and collider triples from its marginal pattern and propagating
    orientations with the witness-guarded rules.
    """
    k = knowledge if knowledge is not None else BackgroundKnowledge()
    if k.non_ancestral or k.ancestral:
        raise ValueError(
            "this learner accepts direct knowledge only; see "
            "local_with_nonancestral / local_all_knowledge"
        )
    session = as_session(tester, cache)
    g, explored = _mb_by_mb(
        x,
        session,
        k.direct,
        reuse_shortcuts=reuse_shortcuts,
        order_hint=order_hint,
        strict=strict,
    )
    return LocalStructure(x, g, explored, session.cache, k)


def baseline_local_learn(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge | None = None,
    *,
    cache: CICache | None = None,
    reuse_shortcuts: bool = True,
    order_hint: Sequence[int] | None = None,
    strict: bool = True,
) -> LocalStructure:
    """Two-phase reference method: learn without knowledge, orient afterwards.

    Phase one runs the exploration with no knowledge at all (the CI counter
    therefore reflects the full no-knowledge session); phase two orients
    the known edges in the learned graph, adding any that were never
    encountered, and propagates.
    """
    k = knowledge if knowledge is not None else BackgroundKnowledge()
    if k.non_ancestral or k.ancestral:
        raise ValueError("the baseline accepts direct knowledge only")
    session = as_session(tester, cache)
    g, explored = _mb_by_mb(
        x,
        session,
        (),
        reuse_shortcuts=reuse_shortcuts,
        order_hint=order_hint,
        strict=strict,
    )
    for f, t in k.direct:
        status = g.edge_status(f, t)
        if status == "undirected":
            g.orient(f, t)
        elif status == "absent":
            if strict and session.cache.has_separator(f, t):
                raise InconsistencyError(
                    f"background edge {f}->{t} is absent from the learned"
                    " skeleton (a separation was recorded for the pair)"
                )
            g.add_directed(f, t)
        elif status == "<-" and strict:
            raise InconsistencyError(
                f"direct knowledge {f}->{t} contradicts learned {t}->{f}"
            )
    _propagate(g, session.cache)
    return LocalStructure(x, g, explored, session.cache, k)


# -- candidate parent sets and critical-set ancestors -------------------------------


def candidate_parent_sets_graph(
    g: PartiallyDirectedGraph, v: int, forbid_triangles: bool = True
) -> list[frozenset[int]]:
    """Sibling subsets Q orientable as Q->v, v->rest without new structure.

    A subset qualifies when it is a clique, each member is adjacent to every
    current parent of v (no new collider at v), and, with
    ``forbid_triangles``, no remaining sibling points into Q (no directed
    cycle through v). Ordered by size then lexicographically.
    """
    sibs = sorted(g.sib(v))
    parents = sorted(g.pa(v))
    out: list[frozenset[int]] = []
    for size in range(len(sibs) + 1):
        for combo in itertools.combinations(sibs, size):
            ok = all(
                g.adjacent(p, q) for p, q in itertools.combinations(combo, 2)
            ) and all(
                g.adjacent(q, p) for q in combo for p in parents
            )
            if ok and forbid_triangles:
                chosen = set(combo)
                ok = not any(
                    g.has_directed(c, r)
                    for c in sibs
                    if c not in chosen
                    for r in combo
                )
            if ok:
                out.append(frozenset(combo))
    return out


def candidate_parent_sets(
    ls: LocalStructure, v: int, forbid_triangles: bool = True
) -> list[frozenset[int]]:
    if v not in ls.explored:
        raise ValueError(f"node {v} was not explored in this session")
    return candidate_parent_sets_graph(ls.graph, v, forbid_triangles)


def _separating_candidates(
    g: PartiallyDirectedGraph,
    session: CachedTester,
    v: int,
    y: int,
) -> frozenset[int] | None:
    """Intersection of qualifying sibling subsets, None when none separates."""
    parents = frozenset(g.pa(v))
    result: frozenset[int] | None = None
    for q in candidate_parent_sets_graph(g, v, forbid_triangles=True):
        if session.test(v, y, parents | q):
            result = q if result is None else result & q
    return result


def critical_ancestors(
    ls: LocalStructure,
    v: int,
    y: int,
    tester: CITester,
) -> frozenset[int] | None:
    """Siblings of v that precede its critical set toward y.

    Returns the intersection of every qualifying parent completion that
    separates v from y, or None when no completion separates (v is then a
    cause of y under every completion). Adjacent y is resolved structurally:
    a parent y means an empty critical set, a child or sibling y admits no
    valid separating completion.
    """
    if v not in ls.explored:
        raise ValueError(f"node {v} was not explored in this session")
    g = ls.graph
    if g.has_directed(v, y) or g.has_undirected(v, y):
        return None
    if g.has_directed(y, v):
        return frozenset()
    session = as_session(tester, ls.cache)
    return _separating_candidates(g, session, v, y)


# -- non-ancestral and ancestral knowledge ------------------------------------------


def _apply_non_ancestral_claim(
    g: PartiallyDirectedGraph,
    session: CachedTester,
    nj: int,
    tj: int,
    strict: bool,
) -> None:
    status = g.edge_status(nj, tj)
    if status == "->":
        if strict:
            raise InconsistencyError(
                f"claim that {nj} is not a cause of {tj} contradicts edge "
                f"{nj}->{tj}"
            )
        return
    if status == "<-":
        return
    if status == "undirected":
        # the edge itself is the only chordless route, so it must point back
        g.orient(tj, nj)
        _propagate(g, session.cache)
        return
    cand = _separating_candidates(g, session, nj, tj)
    if cand is None:
        if strict:
            raise InconsistencyError(
                f"no parent completion of {nj} separates it from {tj}; "
                "the non-ancestral claim is inconsistent"
            )
        return
    for c in sorted(cand):
        st = g.edge_status(c, nj)
        if st == "undirected":
            g.orient(c, nj)
        elif st == "<-" and strict:
            raise InconsistencyError(
                f"claim about ({nj}, {tj}) forces {c}->{nj} against "
                f"{nj}->{c}"
            )
    _propagate(g, session.cache)


def local_with_nonancestral(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge,
    *,
    cache: CICache | None = None,
    reuse_shortcuts: bool = True,
    strict: bool = True,
) -> LocalStructure:
    """Local structure of x under direct plus non-ancestral knowledge.

    Runs the direct-knowledge learner first, then turns each claim whose
    subject is still undirected-connected to x into parent orientations via
    the separating-completion intersection, propagating after each claim.
    """
    if knowledge.ancestral:
        raise ValueError("ancestral knowledge requires local_all_knowledge")
    session = as_session(tester, cache)
    base = mb_by_mb_mpdag(
        x,
        session,
        BackgroundKnowledge(direct=knowledge.direct),
        reuse_shortcuts=reuse_shortcuts,
        strict=strict,
    )
    g = base.graph
    for nj, tj in knowledge.non_ancestral:
        if nj != x and nj not in g.undirected_component(x):
            continue
        _apply_non_ancestral_claim(g, session, nj, tj, strict)
    return LocalStructure(
        x, g, base.explored, session.cache, knowledge, base.dcc
    )


def local_all_knowledge(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge,
    *,
    cache: CICache | None = None,
    reuse_shortcuts: bool = True,
    strict: bool = True,
) -> LocalStructure:
    """Local structure of x under direct, non-ancestral and ancestral knowledge.

    The session first learns the no-knowledge local structure, where
    sibling-ancestor sets coincide with critical sets, then converts each
    ancestral claim into a direct-causal clause over the intersection of
    separating sibling cliques (singletons collapse to direct edges), then
    applies direct knowledge inside the component, and finally processes the
    non-ancestral claims. Residual multi-option clauses are returned on the
    result.
    """
    session = as_session(tester, cache)
    g, explored = _mb_by_mb(
        x, session, (), reuse_shortcuts=reuse_shortcuts, strict=strict
    )

    clauses: list[DccClause] = []
    collapsed: list[Edge] = []
    for fk, tk in knowledge.ancestral:
        if fk != x and fk not in g.undirected_component(x):
            continue
        status = g.edge_status(fk, tk)
        if status == "->":
            continue
        if status == "<-":
            if strict:
                raise InconsistencyError(
                    f"claim that {fk} causes {tk} contradicts edge {tk}->{fk}"
                )
            continue
        if status == "undirected":
            collapsed.append((fk, tk))
            continue
        sibs = sorted(g.sib(fk))
        parents = frozenset(g.pa(fk))
        cliques = maximal_cliques(g, sibs)
        cand = set(sibs)
        found = False
        for q in cliques:
            if session.test(fk, tk, parents | q):
                cand &= q
                found = True
        if not found:
            # every maximal-clique completion keeps them dependent: fk is
            # already a definite cause of tk, the claim adds nothing
            continue
        clique_set = set(cliques)
        for q in candidate_parent_sets_graph(g, fk, forbid_triangles=False):
            if q in clique_set:
                continue
            if session.test(fk, tk, parents | q):
                cand &= q
        if not cand:
            if strict:
                raise InconsistencyError(
                    f"claim that {fk} causes {tk} leaves no candidate child"
                )
            continue
        if len(cand) == 1:
            collapsed.append((fk, next(iter(cand))))
        else:
            clauses.append(DccClause(fk, frozenset(cand)))

    for f, t in tuple(knowledge.direct) + tuple(collapsed):
        comp = g.undirected_component(x)
        if f not in comp and t not in comp:
            continue
        status = g.edge_status(f, t)
        if status == "undirected":
            g.orient(f, t)
            _propagate(g, session.cache)
        elif status == "<-":
            if strict:
                raise InconsistencyError(
                    f"direct knowledge {f}->{t} contradicts learned {t}->{f}"
                )
        elif status == "absent":
            if strict:
                raise InconsistencyError(
                    f"background edge {f}->{t} is absent from the learned "
                    "skeleton"
                )
            g.add_directed(f, t)
            _propagate(g, session.cache)

    for nj, tj in knowledge.non_ancestral:
        if nj != x and nj not in g.undirected_component(x):
            continue
        _apply_non_ancestral_claim(g, session, nj, tj, strict)

    return LocalStructure(
        x, g, explored, session.cache, knowledge, tuple(clauses)
    )


def learn_local(
    x: int,
    tester: CITester,
    knowledge: BackgroundKnowledge | None = None,
    *,
    cache: CICache | None = None,
    reuse_shortcuts: bool = True,
    strict: bool = True,
) -> LocalStructure:
    """Dispatch to the learner matching the knowledge types present."""
    k = knowledge if knowledge is not None else BackgroundKnowledge()
    if k.ancestral:
        return local_all_knowledge(
            x, tester, k, cache=cache,
            reuse_shortcuts=reuse_shortcuts, strict=strict,
        )
    if k.non_ancestral:
        return local_with_nonancestral(
            x, tester, k, cache=cache,
            reuse_shortcuts=reuse_shortcuts, strict=strict,
        )
    return mb_by_mb_mpdag(
        x, tester, k, cache=cache,
        reuse_shortcuts=reuse_shortcuts, strict=strict,
    )
