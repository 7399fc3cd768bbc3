"""Evaluation metrics: structural Hamming distance and chance-corrected
agreement for the three-way relation classification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import GraphError
from .graph import PartiallyDirectedGraph


def shd(a: PartiallyDirectedGraph, b: PartiallyDirectedGraph) -> int:
    """Number of node pairs whose edge status differs between a and b.

    Status is one of absent, undirected, or either directed orientation;
    any mismatch costs one.
    """
    if a.n != b.n:
        raise GraphError("graphs must share a node set")
    return sum(
        1
        for u, v in itertools.combinations(range(a.n), 2)
        if a.edge_status(u, v) != b.edge_status(u, v)
    )


def local_shd(
    a: PartiallyDirectedGraph,
    b: PartiallyDirectedGraph,
    scope: Iterable[int],
) -> int:
    """Edge-status mismatches among pairs touching the scope set."""
    if a.n != b.n:
        raise GraphError("graphs must share a node set")
    keep = set(scope)
    return sum(
        1
        for u, v in itertools.combinations(range(a.n), 2)
        if (u in keep or v in keep)
        and a.edge_status(u, v) != b.edge_status(u, v)
    )


def local_scope(true_graph: PartiallyDirectedGraph, target: int) -> set[int]:
    """Default scope for local comparisons: the target and its siblings."""
    return {target} | true_graph.sib(target)


@dataclass
class ConfusionMatrix3:
    """3x3 counts, row = true relation, column = predicted."""

    cells: list = field(default_factory=lambda: [[0, 0, 0] for _ in range(3)])

    def add(self, true_idx: int, pred_idx: int, count: int = 1) -> None:
        if not (0 <= true_idx < 3 and 0 <= pred_idx < 3):
            raise ValueError("indices must lie in 0..2")
        if count < 0:
            raise ValueError("counts must be nonnegative")
        self.cells[true_idx][pred_idx] += count

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.cells)

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.cells]

    def col_sums(self) -> list[int]:
        return [sum(self.cells[i][j] for i in range(3)) for j in range(3)]

    def flat(self) -> list[int]:
        return [c for row in self.cells for c in row]


def kappa(m: ConfusionMatrix3) -> float:
    """Chance-corrected agreement: (p - q) / (1 - q).

    p is the diagonal share, q the chance agreement from the marginals.
    Returns nan when the marginals make q = 1.
    """
    total = m.total
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    p = sum(m.cells[i][i] for i in range(3)) / total
    rows = m.row_sums()
    cols = m.col_sums()
    q = sum(rows[i] * cols[i] for i in range(3)) / (total * total)
    if math.isclose(q, 1.0):
        return float("nan")
    return (p - q) / (1.0 - q)
