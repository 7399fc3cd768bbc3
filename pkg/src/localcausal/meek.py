"""Orientation rules, equivalence-class construction and replay checking.

The four propagation rules used throughout, in the casing shared by the
closure, the guarded learner loop and the replay checker:

  R1  a->b, b-c, a and c nonadjacent            =>  b->c
  R2  a->b->c, a-c                              =>  a->c
  R3  b-a-c, b->d<-c, a-d, b and c nonadjacent  =>  a->d
  R4  b-a-c, c->d->b, a-d, b and c nonadjacent  =>  a->b
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import GraphError, InconsistencyError, ResourceCapError
from .graph import Dag, Mpdag, PartiallyDirectedGraph

RULE_LABELS = ("V", "B", "R1", "R2", "R3", "R4")

Edge = tuple[int, int]

DEFAULT_MEC_CAP = 4096


# -- rule matching -----------------------------------------------------------


def _rule_matches(g: PartiallyDirectedGraph):
    """Yield (tail, head, rule, premises) for rule instances of g.

    Outer loops iterate over snapshots, so the graph may be mutated while
    consuming the generator; callers must re-validate each instance against
    the live graph before applying it.
    """
    # R1
    for a, b in g.directed_edges():
        for c in sorted(g.sib(b)):
            if c != a and not g.adjacent(a, c):
                yield b, c, "R1", frozenset({(a, b)})
    # R2
    for a in range(g.n):
        for b in sorted(g.ch(a)):
            for c in sorted(g.ch(b)):
                if g.has_undirected(a, c):
                    yield a, c, "R2", frozenset({(a, b), (b, c)})
    # R3
    for a in range(g.n):
        for d in sorted(g.sib(a)):
            parents = [p for p in sorted(g.pa(d)) if g.has_undirected(a, p)]
            for b, c in itertools.combinations(parents, 2):
                if not g.adjacent(b, c):
                    yield a, d, "R3", frozenset({(b, d), (c, d)})
    # R4
    for a in range(g.n):
        sib_a = sorted(g.sib(a))
        for b in sib_a:
            for d in sib_a:
                if d == b or not g.has_directed(d, b):
                    continue
                for c in sib_a:
                    if c in (b, d):
                        continue
                    if g.has_directed(c, d) and not g.adjacent(b, c):
                        yield a, b, "R4", frozenset({(c, d)})


def _instance_live(
    g: PartiallyDirectedGraph,
    tail: int,
    head: int,
    rule: str,
    premises: frozenset[Edge],
) -> bool:
    """Re-check a rule instance against the current graph state."""
    if not g.has_undirected(tail, head):
        return False
    if not all(g.has_directed(t, h) for t, h in premises):
        return False
    if rule == "R1":
        ((a, _),) = premises
        return not g.adjacent(a, head)
    if rule == "R2":
        return True
    if rule == "R3":
        (b, _), (c, _) = sorted(premises)
        return (
            g.has_undirected(tail, b)
            and g.has_undirected(tail, c)
            and not g.adjacent(b, c)
        )
    if rule == "R4":
        ((c, d),) = premises
        return (
            g.has_directed(d, head)
            and g.has_undirected(tail, c)
            and g.has_undirected(tail, d)
            and not g.adjacent(head, c)
        )
    return False


def _directed_cycle_edge(g: PartiallyDirectedGraph) -> Edge | None:
    """Some edge on a directed cycle, or None when the directed part is acyclic."""
    color = [0] * g.n  # 0 unseen, 1 on stack, 2 done

    def dfs(v: int) -> Edge | None:
        color[v] = 1
        for w in sorted(g.ch(v)):
            if color[w] == 1:
                return (v, w)
            if color[w] == 0:
                hit = dfs(w)
                if hit is not None:
                    return hit
        color[v] = 2
        return None

    for v in range(g.n):
        if color[v] == 0:
            hit = dfs(v)
            if hit is not None:
                return hit
    return None


def meek_closure(
    g: PartiallyDirectedGraph,
    *,
    on_conflict: str = "raise",
    record: list["DegsEntry"] | None = None,
) -> PartiallyDirectedGraph:
    """Apply R1-R4 until no rule fires; never removes or un-orients an edge.

    The rules are confluent, so instances invalidated by earlier firings in
    the same sweep are simply skipped. Contradictory input (an edge forced
    both ways) surfaces as a directed cycle and raises InconsistencyError
    naming an edge on it; ``on_conflict="skip"`` suppresses that for
    pipelines with noisy inputs. With ``record`` given, every applied
    orientation is appended as a replayable entry.
    """
    if on_conflict not in ("raise", "skip"):
        raise ValueError("on_conflict must be 'raise' or 'skip'")
    h = g.copy()
    if on_conflict == "raise":
        bad = _directed_cycle_edge(h)
        if bad is not None:
            raise GraphError(
                f"input has a directed cycle through edge {bad[0]}->{bad[1]}"
            )
    changed = True
    while changed:
        changed = False
        for tail, head, rule, premises in _rule_matches(h):
            if not _instance_live(h, tail, head, rule, premises):
                continue
            h.orient(tail, head)
            if record is not None:
                record.append(DegsEntry((tail, head), premises, rule))
            changed = True
    bad = _directed_cycle_edge(h)
    if bad is not None and on_conflict == "raise":
        raise InconsistencyError(
            f"orientations force edge {bad[0]}->{bad[1]} both ways "
            "(directed cycle after closure)"
        )
    return h


def assert_maximally_oriented(g: PartiallyDirectedGraph) -> None:
    """Raise GraphError unless g is a fixed point of the closure."""
    if meek_closure(g) != g:
        raise GraphError("graph is not closed under the orientation rules")


# -- CPDAG / MPDAG construction ----------------------------------------------


def pattern(g: Dag) -> PartiallyDirectedGraph:
    """Skeleton of g with exactly the collider-triple edges kept directed."""
    p = g.skeleton()
    for a, b, c in g.v_structures():
        for tail in (a, c):
            if p.has_undirected(tail, b):
                p.orient(tail, b)
    return p


def dag_to_cpdag(g: Dag) -> Mpdag:
    """Equivalence-class representative: an edge is directed iff compelled."""
    if not isinstance(g, Dag):
        g = Dag(g.n, g.directed_edges(), labels=g.labels)
    return Mpdag.from_pdag(meek_closure(pattern(g)))


def orient_with_background(
    g: PartiallyDirectedGraph,
    knowledge: Iterable[Edge],
    *,
    on_conflict: str = "raise",
) -> Mpdag:
    """Orient the given edges and close under the rules.

    Every pair must correspond to an existing edge; a pair contradicting an
    existing directed edge raises InconsistencyError naming the offending
    item. Skip mode tolerates missing edges (they are added) and conflicts.
    """
    h = g.copy()
    for a, b in knowledge:
        status = h.edge_status(a, b)
        if status == "undirected":
            h.orient(a, b)
        elif status == "->":
            continue
        elif on_conflict == "skip":
            if status == "absent":
                h.add_directed(a, b)
        elif status == "<-":
            raise InconsistencyError(
                f"knowledge {a}->{b} contradicts existing edge {b}->{a}"
            )
        else:
            raise InconsistencyError(
                f"knowledge {a}->{b} refers to a missing edge"
            )
    if on_conflict == "raise":
        bad = _directed_cycle_edge(h)
        if bad is not None:
            raise InconsistencyError(
                f"knowledge creates a directed cycle through "
                f"{bad[0]}->{bad[1]}"
            )
    return Mpdag.from_pdag(meek_closure(h, on_conflict=on_conflict))


# -- equivalence-class enumeration --------------------------------------------


def enumerate_mec(
    g: PartiallyDirectedGraph, cap: int = DEFAULT_MEC_CAP
) -> list[Dag]:
    """All DAG extensions of g: acyclic, no collider triple beyond g's.

    Undirected edges are assigned in lexicographic order, low-to-high
    orientation first, so the output order is deterministic. Raises
    ResourceCapError when more than ``cap`` extensions exist.
    """
    if g.has_directed_cycle():
        raise GraphError("input has a directed cycle among directed edges")
    free = g.undirected_edges()
    work = g.copy()
    for a, b in free:
        work.remove_edge(a, b)

    out: list[Dag] = []

    def creates_cycle(tail: int, head: int) -> bool:
        return tail in work.descendants(head)

    def creates_collider(tail: int, head: int) -> bool:
        return any(
            other != tail and not g.adjacent(other, tail)
            for other in work.pa(head)
        )

    def assign(i: int) -> None:
        if i == len(free):
            if len(out) >= cap:
                raise ResourceCapError(
                    f"equivalence class exceeds cap of {cap} members"
                )
            out.append(Dag(g.n, work.directed_edges(), labels=g.labels))
            return
        a, b = free[i]
        for tail, head in ((a, b), (b, a)):
            if creates_cycle(tail, head) or creates_collider(tail, head):
                continue
            work.add_directed(tail, head)
            assign(i + 1)
            work.remove_edge(tail, head)

    assign(0)
    return out


def compelled_graph(extensions: Sequence[Dag]) -> PartiallyDirectedGraph:
    """Merge extensions: an edge stays directed iff all members agree."""
    if not extensions:
        raise GraphError("no extensions to merge")
    first = extensions[0]
    merged = PartiallyDirectedGraph(first.n, labels=first.labels)
    for t, h in first.directed_edges():
        if all(m.has_directed(t, h) for m in extensions[1:]):
            merged.add_directed(t, h)
        else:
            merged.add_undirected(t, h)
    return merged


# -- directed-edge generation sequences ----------------------------------------


@dataclass(frozen=True)
class DegsEntry:
    """One replay step: a directed edge, its premise edges and a rule label."""

    edge: Edge
    premises: frozenset[Edge]
    rule: str

    def __post_init__(self):
        if self.rule not in RULE_LABELS:
            raise ValueError(f"unknown rule label {self.rule!r}")
        if self.rule in ("V", "B") and self.premises:
            raise ValueError(f"rule {self.rule} takes no premises")


def _edge_in_v_structure(m: PartiallyDirectedGraph, edge: Edge) -> bool:
    a, b = edge
    if not m.has_directed(a, b):
        return False
    return any(c != a and not m.adjacent(a, c) for c in m.pa(b))


def _is_collider_triple(m: PartiallyDirectedGraph, mid: int, b: int, c: int) -> bool:
    """b->mid<-c in m with b, c nonadjacent."""
    return (
        m.has_directed(b, mid)
        and m.has_directed(c, mid)
        and not m.adjacent(b, c)
    )


def check_degs(
    m: PartiallyDirectedGraph,
    entries: Sequence[DegsEntry],
    knowledge: Iterable[Edge] = (),
) -> bool:
    """Replay a generation sequence from the skeleton and compare against m.

    Each step must cite already-replayed premises, name a not-yet-directed
    edge and match its rule's pattern in the intermediate graph (with the
    collider side conditions checked against m). The replay must finish
    exactly at m. False is the only failure signal.
    """
    known = set(knowledge)
    h = m.skeleton()

    for entry in entries:
        d, p, rule = entry.edge, entry.premises, entry.rule
        if not all(h.has_directed(t, hd) for t, hd in p):
            return False
        if h.has_directed(*d):
            return False
        tail, head = d
        if rule == "V":
            if p or not _edge_in_v_structure(m, d):
                return False
        elif rule == "B":
            if p or d not in known:
                return False
        elif rule == "R1":
            # a->tail-head, a and head nonadjacent, premises {a->tail}
            if len(p) != 1:
                return False
            ((a, b),) = p
            if b != tail or h.adjacent(a, head):
                return False
        elif rule == "R2":
            # tail->b->head, tail-head, premises {tail->b, b->head}
            if len(p) != 2:
                return False
            if not any(
                p == frozenset({(tail, b), (b, head)})
                for b in h.ch(tail)
                if h.has_directed(b, head)
            ):
                return False
        elif rule == "R3":
            # b-tail-c, b->head<-c, tail-head, premises {b->head, c->head},
            # (b, tail, c) not a collider triple of m
            if len(p) != 2:
                return False
            ok = False
            for b, c in itertools.combinations(sorted(h.pa(head)), 2):
                if p != frozenset({(b, head), (c, head)}):
                    continue
                if not (h.has_undirected(tail, b) and h.has_undirected(tail, c)):
                    continue
                if _is_collider_triple(m, tail, b, c):
                    continue
                ok = True
                break
            if not ok:
                return False
        elif rule == "R4":
            # head-tail-c, c->d->head, tail-d, premises {c->d},
            # (head, tail, c) not a collider triple of m
            if len(p) != 1:
                return False
            ((c, dd),) = p
            if not (
                h.has_undirected(tail, c)
                and h.has_undirected(tail, dd)
                and h.has_directed(dd, head)
            ):
                return False
            if _is_collider_triple(m, tail, head, c):
                return False
        if not h.has_undirected(tail, head):
            return False
        h.orient(tail, head)
    return h == m


def build_degs(
    m: PartiallyDirectedGraph, knowledge: Iterable[Edge] = ()
) -> list[DegsEntry]:
    """Construct a replayable generation sequence for m.

    Collider-triple edges come first, then the knowledge orientations, then
    the rule firings of the closure. Raises GraphError when the given
    knowledge does not regenerate m from its skeleton.
    """
    h = m.skeleton()
    entries: list[DegsEntry] = []
    v_edges: list[Edge] = []
    for a, b, c in m.v_structures():
        for e in ((a, b), (c, b)):
            if e not in v_edges:
                v_edges.append(e)
    for tail, head in sorted(v_edges):
        if h.has_undirected(tail, head):
            h.orient(tail, head)
            entries.append(DegsEntry((tail, head), frozenset(), "V"))
    for tail, head in knowledge:
        if h.has_undirected(tail, head):
            h.orient(tail, head)
            entries.append(DegsEntry((tail, head), frozenset(), "B"))
        elif not h.has_directed(tail, head):
            raise GraphError(f"knowledge edge {tail}->{head} missing from graph")
    closed = meek_closure(h, record=entries)
    if closed != m:
        raise GraphError("knowledge does not regenerate the graph")
    return entries
