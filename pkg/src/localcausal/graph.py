"""Partially directed graphs: storage, queries, paths, and serialization.

Nodes are dense integer indices 0..n-1 with an optional label table. A pair
of nodes carries at most one edge, either directed or undirected. Instances
should be treated as frozen once shared between workers; algorithms that
need to orient edges operate on private copies.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import GraphError, ParseError

ABSENT = "absent"
UNDIRECTED = "undirected"
FORWARD = "->"
BACKWARD = "<-"


class PartiallyDirectedGraph:
    """Mixed graph with directed and undirected edges over integer nodes."""

    __slots__ = ("n", "labels", "_parents", "_children", "_siblings")

    def __init__(
        self,
        n: int,
        directed: Iterable[tuple[int, int]] = (),
        undirected: Iterable[tuple[int, int]] = (),
        labels: Sequence[str] | None = None,
    ):
        if n < 0:
            raise GraphError("node count must be nonnegative")
        if labels is not None and len(labels) != n:
            raise GraphError("label table length must equal node count")
        self.n = n
        self.labels = list(labels) if labels is not None else None
        self._parents: list[set[int]] = [set() for _ in range(n)]
        self._children: list[set[int]] = [set() for _ in range(n)]
        self._siblings: list[set[int]] = [set() for _ in range(n)]
        for a, b in directed:
            self.add_directed(a, b)
        for a, b in undirected:
            self.add_undirected(a, b)

    # -- construction -----------------------------------------------------

    def _check_node(self, v: int) -> None:
        if not isinstance(v, int) or not (0 <= v < self.n):
            raise GraphError(f"invalid node identifier {v!r}")

    def _check_new_edge(self, a: int, b: int) -> None:
        self._check_node(a)
        self._check_node(b)
        if a == b:
            raise GraphError(f"self loop at node {a}")
        if self.adjacent(a, b):
            raise GraphError(f"pair ({a}, {b}) already carries an edge")

    def add_directed(self, tail: int, head: int) -> None:
        self._check_new_edge(tail, head)
        self._children[tail].add(head)
        self._parents[head].add(tail)

    def add_undirected(self, a: int, b: int) -> None:
        self._check_new_edge(a, b)
        self._siblings[a].add(b)
        self._siblings[b].add(a)

    def orient(self, tail: int, head: int) -> None:
        """Turn the undirected edge tail-head into tail->head."""
        if not self.has_undirected(tail, head):
            raise GraphError(f"no undirected edge between {tail} and {head}")
        self._siblings[tail].discard(head)
        self._siblings[head].discard(tail)
        self._children[tail].add(head)
        self._parents[head].add(tail)

    def remove_edge(self, a: int, b: int) -> None:
        self._siblings[a].discard(b)
        self._siblings[b].discard(a)
        self._children[a].discard(b)
        self._parents[a].discard(b)
        self._children[b].discard(a)
        self._parents[b].discard(a)

    def copy(self) -> "PartiallyDirectedGraph":
        g = PartiallyDirectedGraph(self.n, labels=self.labels)
        for i in range(self.n):
            g._parents[i] = set(self._parents[i])
            g._children[i] = set(self._children[i])
            g._siblings[i] = set(self._siblings[i])
        return g

    # -- queries ----------------------------------------------------------

    def pa(self, v: int) -> set[int]:
        return set(self._parents[v])

    def ch(self, v: int) -> set[int]:
        return set(self._children[v])

    def sib(self, v: int) -> set[int]:
        return set(self._siblings[v])

    def adj(self, v: int) -> set[int]:
        return self._parents[v] | self._children[v] | self._siblings[v]

    def has_directed(self, tail: int, head: int) -> bool:
        return head in self._children[tail]

    def has_undirected(self, a: int, b: int) -> bool:
        return b in self._siblings[a]

    def adjacent(self, a: int, b: int) -> bool:
        return (
            b in self._siblings[a]
            or b in self._children[a]
            or b in self._parents[a]
        )

    def edge_status(self, a: int, b: int) -> str:
        if b in self._siblings[a]:
            return UNDIRECTED
        if b in self._children[a]:
            return FORWARD
        if b in self._parents[a]:
            return BACKWARD
        return ABSENT

    def directed_edges(self) -> list[tuple[int, int]]:
        return [
            (t, h)
            for t in range(self.n)
            for h in sorted(self._children[t])
        ]

    def undirected_edges(self) -> list[tuple[int, int]]:
        return [
            (a, b)
            for a in range(self.n)
            for b in sorted(self._siblings[a])
            if a < b
        ]

    def num_edges(self) -> int:
        return len(self.directed_edges()) + len(self.undirected_edges())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartiallyDirectedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self._children == other._children
            and self._siblings == other._siblings
        )

    def __hash__(self):
        raise TypeError("graphs are not hashable")

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(n={self.n}, "
            f"directed={self.directed_edges()}, "
            f"undirected={self.undirected_edges()})"
        )

    def label_of(self, v: int) -> str:
        return self.labels[v] if self.labels else str(v)

    def index_of(self, name: str) -> int:
        """Resolve a node given its label or decimal index string."""
        if self.labels and name in self.labels:
            return self.labels.index(name)
        try:
            v = int(name)
        except ValueError:
            raise GraphError(f"unknown node {name!r}") from None
        self._check_node(v)
        return v

    # -- derived structure -------------------------------------------------

    def skeleton(self) -> "PartiallyDirectedGraph":
        """Same adjacencies with every edge undirected."""
        g = PartiallyDirectedGraph(self.n, labels=self.labels)
        for t, h in self.directed_edges():
            g.add_undirected(t, h)
        for a, b in self.undirected_edges():
            g.add_undirected(a, b)
        return g

    def induced_subgraph(self, nodes: Iterable[int]) -> "PartiallyDirectedGraph":
        """Edges among ``nodes`` only, over the same index space."""
        keep = set(nodes)
        g = PartiallyDirectedGraph(self.n, labels=self.labels)
        for t, h in self.directed_edges():
            if t in keep and h in keep:
                g.add_directed(t, h)
        for a, b in self.undirected_edges():
            if a in keep and b in keep:
                g.add_undirected(a, b)
        return g

    def undirected_component(self, v: int) -> set[int]:
        """Nodes reachable from v along undirected edges, including v."""
        self._check_node(v)
        seen = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in self._siblings[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def ancestors(self, v: int) -> set[int]:
        """Ancestors of v along directed edges, including v itself."""
        self._check_node(v)
        seen = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in self._parents[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def descendants(self, v: int) -> set[int]:
        """Descendants of v along directed edges, including v itself."""
        self._check_node(v)
        seen = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in self._children[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def ancestors_of_set(self, nodes: Iterable[int]) -> set[int]:
        out: set[int] = set()
        for v in nodes:
            out |= self.ancestors(v)
        return out

    def has_directed_cycle(self) -> bool:
        return topological_sort_directed(self) is None

    def v_structures(self) -> list[tuple[int, int, int]]:
        """Triples (a, b, c) with a->b<-c and a, c nonadjacent, a < c."""
        out = []
        for b in range(self.n):
            for a, c in itertools.combinations(sorted(self._parents[b]), 2):
                if not self.adjacent(a, c):
                    out.append((a, b, c))
        return out


def topological_sort_directed(g: PartiallyDirectedGraph) -> list[int] | None:
    """Topological order of the directed part, or None if it has a cycle.

    Undirected edges are ignored.
    """
    indeg = [len(g._parents[v]) for v in range(g.n)]
    queue = deque(v for v in range(g.n) if indeg[v] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in sorted(g._children[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return order if len(order) == g.n else None


class Dag(PartiallyDirectedGraph):
    """Fully directed acyclic graph."""

    def __init__(self, n, directed=(), undirected=(), labels=None):
        super().__init__(n, directed, undirected, labels)
        if self.undirected_edges():
            raise GraphError("a DAG cannot contain undirected edges")
        if self.has_directed_cycle():
            raise GraphError("directed cycle detected")

    def topological_order(self) -> list[int]:
        order = topological_sort_directed(self)
        assert order is not None
        return order


class Mpdag(PartiallyDirectedGraph):
    """Partially directed graph assumed closed under the orientation rules.

    Construction does not re-run the closure; pass ``validate=True`` (or call
    :func:`localcausal.meek.assert_maximally_oriented`) to check untrusted
    input. CPDAGs are the special case produced from a DAG's pattern.
    """

    def __init__(self, n, directed=(), undirected=(), labels=None,
                 validate: bool = False):
        super().__init__(n, directed, undirected, labels)
        if self.has_directed_cycle():
            raise GraphError("directed cycle detected")
        if validate:
            from .meek import assert_maximally_oriented

            assert_maximally_oriented(self)

    @classmethod
    def from_pdag(cls, g: PartiallyDirectedGraph, validate: bool = False) -> "Mpdag":
        return cls(
            g.n,
            g.directed_edges(),
            g.undirected_edges(),
            labels=g.labels,
            validate=validate,
        )


def as_dag(g: PartiallyDirectedGraph) -> Dag:
    return Dag(g.n, g.directed_edges(), labels=g.labels)


# -- undirected components (B-components) ----------------------------------


@dataclass(frozen=True)
class BComponent:
    """A maximal undirected-connectivity block and its induced subgraph."""

    nodes: frozenset[int]
    subgraph: PartiallyDirectedGraph


def b_components(g: PartiallyDirectedGraph) -> list[BComponent]:
    """Partition nodes by undirected-path connectivity.

    Nodes without undirected incident edges form singleton components. The
    result is ordered by smallest member index.
    """
    seen: set[int] = set()
    out = []
    for v in range(g.n):
        if v in seen:
            continue
        comp = g.undirected_component(v)
        seen |= comp
        out.append(BComponent(frozenset(comp), g.induced_subgraph(comp)))
    return out


# -- cliques ----------------------------------------------------------------


def maximal_cliques(g: PartiallyDirectedGraph,
                    nodes: Iterable[int] | None = None) -> list[frozenset[int]]:
    """All maximal cliques of the undirected part, Bron-Kerbosch with pivot.

    With ``nodes`` given, cliques are taken in the induced undirected
    subgraph over those nodes. A graph with no nodes yields the empty
    family; isolated nodes yield singleton cliques.
    """
    pool = sorted(set(nodes)) if nodes is not None else list(range(g.n))
    if not pool:
        return []
    pool_set = set(pool)
    nbrs = {v: g.sib(v) & pool_set for v in pool}
    out: list[frozenset[int]] = []

    def extend(clique: list[int], cand: set[int], excl: set[int]) -> None:
        if not cand and not excl:
            out.append(frozenset(clique))
            return
        pivot = max(cand | excl, key=lambda u: (len(nbrs[u] & cand), -u))
        for v in sorted(cand - nbrs[pivot]):
            extend(clique + [v], cand & nbrs[v], excl & nbrs[v])
            cand.remove(v)
            excl.add(v)

    extend([], set(pool), set())
    return sorted(out, key=lambda q: (len(q), sorted(q)))


def is_clique(g: PartiallyDirectedGraph, nodes: Iterable[int]) -> bool:
    ns = sorted(set(nodes))
    return all(g.adjacent(a, b) for a, b in itertools.combinations(ns, 2))


# -- critical sets -----------------------------------------------------------


def chordless_possibly_causal_paths(
    g: PartiallyDirectedGraph, x: int, y: int
) -> Iterator[tuple[int, ...]]:
    """Chordless paths from x to y with no edge pointing backward.

    Each step follows u->v or u-v, never v->u, and every new node may be
    adjacent only to its immediate predecessor among the path so far.
    """
    g._check_node(x)
    g._check_node(y)
    if x == y:
        raise GraphError("endpoints must differ")

    def forward(u: int) -> set[int]:
        return g._children[u] | g._siblings[u]

    stack: list[tuple[int, ...]] = [(x,)]
    while stack:
        path = stack.pop()
        u = path[-1]
        for v in sorted(forward(u), reverse=True):
            if v in path:
                continue
            # chordless: v may touch only the predecessor u
            if any(g.adjacent(v, w) for w in path[:-1]):
                continue
            if v == y:
                yield path + (v,)
            else:
                stack.append(path + (v,))


def critical_set(g: PartiallyDirectedGraph, x: int, y: int) -> frozenset[int]:
    """Neighbors of x on some chordless path toward y with no backward edge."""
    hits: set[int] = set()
    for path in chordless_possibly_causal_paths(g, x, y):
        hits.add(path[1])
    return frozenset(hits)


# -- d-separation ------------------------------------------------------------


def _validate_query(g: PartiallyDirectedGraph, x: int, y: int,
                    z: Iterable[int]) -> frozenset[int]:
    g._check_node(x)
    g._check_node(y)
    zs = frozenset(z)
    for v in zs:
        g._check_node(v)
    if x == y:
        raise GraphError("query endpoints must differ")
    if x in zs or y in zs:
        raise GraphError("conditioning set must exclude both endpoints")
    return zs


def d_separated(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """True iff every path between x and y is blocked by z in the DAG.

    Reachability formulation: track whether a node is entered through a
    parent or a child, opening colliders only when they have a descendant
    in z.
    """
    zs = _validate_query(g, x, y, z)
    anc_z = g.ancestors_of_set(zs)

    up, down = True, False
    visited: set[tuple[int, bool]] = set()
    queue: deque[tuple[int, bool]] = deque([(x, up)])
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v == y:
            return False
        if direction is up:
            if v not in zs:
                for p in g._parents[v]:
                    queue.append((p, up))
                for c in g._children[v]:
                    queue.append((c, down))
        else:
            if v not in zs:
                for c in g._children[v]:
                    queue.append((c, down))
            if v in anc_z:
                for p in g._parents[v]:
                    queue.append((p, up))
    return True


def d_separated_by_paths(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """Path-enumeration d-separation check, kept independent for testing."""
    zs = _validate_query(g, x, y, z)
    desc_cache: dict[int, set[int]] = {}

    def desc(v: int) -> set[int]:
        if v not in desc_cache:
            desc_cache[v] = g.descendants(v)
        return desc_cache[v]

    def blocked(path: tuple[int, ...]) -> bool:
        for i in range(1, len(path) - 1):
            prev, v, nxt = path[i - 1], path[i], path[i + 1]
            collider = g.has_directed(prev, v) and g.has_directed(nxt, v)
            if collider:
                if not (desc(v) & zs):
                    return True
            elif v in zs:
                return True
        return False

    stack: list[tuple[int, ...]] = [(x,)]
    while stack:
        path = stack.pop()
        u = path[-1]
        for v in g.adj(u):
            if v in path:
                continue
            newp = path + (v,)
            if v == y:
                if not blocked(newp):
                    return False
            else:
                stack.append(newp)
    return True


# -- serialization ------------------------------------------------------------

GRAPH_FORMAT = "pdag-v1"


def graph_to_json(g: PartiallyDirectedGraph) -> dict:
    return {
        "format": GRAPH_FORMAT,
        "num_nodes": g.n,
        "labels": g.labels,
        "directed": [list(e) for e in g.directed_edges()],
        "undirected": [list(e) for e in g.undirected_edges()],
    }


def graph_from_json(payload: dict) -> PartiallyDirectedGraph:
    if not isinstance(payload, dict):
        raise ParseError("graph payload must be a JSON object")
    fmt = payload.get("format")
    if fmt != GRAPH_FORMAT:
        raise ParseError(f"unsupported graph format {fmt!r}")
    try:
        n = int(payload["num_nodes"])
        labels = payload.get("labels")
        directed = [tuple(map(int, e)) for e in payload.get("directed", [])]
        undirected = [tuple(map(int, e)) for e in payload.get("undirected", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed graph payload: {exc}") from exc
    return PartiallyDirectedGraph(n, directed, undirected, labels=labels)


def load_graph_json(path: str) -> PartiallyDirectedGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read graph file {path}: {exc}") from exc
    return graph_from_json(payload)


def save_graph_json(g: PartiallyDirectedGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(g), fh, indent=2)
        fh.write("\n")


def graph_to_dot(g: PartiallyDirectedGraph, name: str = "g") -> str:
    lines = [f"digraph {name} {{"]
    for v in range(g.n):
        lines.append(f'  {v} [label="{g.label_of(v)}"];')
    for t, h in g.directed_edges():
        lines.append(f"  {t} -> {h};")
    for a, b in g.undirected_edges():
        lines.append(f"  {a} -- {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_edge_list(g: PartiallyDirectedGraph) -> str:
    """One ``a -> b`` or ``a -- b`` line per edge, using labels."""
    lines = [f"{g.label_of(t)} -> {g.label_of(h)}" for t, h in g.directed_edges()]
    lines += [f"{g.label_of(a)} -- {g.label_of(b)}" for a, b in g.undirected_edges()]
    return "\n".join(lines) + ("\n" if lines else "")


def graph_from_edge_list(text: str) -> PartiallyDirectedGraph:
    """Parse the ``a -> b`` / ``a -- b`` line format; names become labels."""
    directed: list[tuple[str, str]] = []
    undirected: list[tuple[str, str]] = []
    names: list[str] = []

    def intern(name: str) -> str:
        if name not in names:
            names.append(name)
        return name

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for sep, sink in ((" -> ", directed), (" -- ", undirected)):
            if sep in line:
                left, right = (part.strip() for part in line.split(sep, 1))
                if not left or not right:
                    raise ParseError(f"line {lineno}: empty endpoint")
                sink.append((intern(left), intern(right)))
                break
        else:
            raise ParseError(f"line {lineno}: expected 'a -> b' or 'a -- b'")

    idx = {name: i for i, name in enumerate(names)}
    return PartiallyDirectedGraph(
        len(names),
        [(idx[a], idx[b]) for a, b in directed],
        [(idx[a], idx[b]) for a, b in undirected],
        labels=names,
    )
