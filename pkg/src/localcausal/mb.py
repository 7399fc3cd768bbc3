"""Markov blanket discovery (incremental-association style)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .ci import CICache, CITester, as_session


@dataclass(frozen=True)
class MarkovBlanket:
    """A target's blanket; ``plus`` additionally includes the target."""

    target: int
    members: frozenset[int]

    @property
    def plus(self) -> frozenset[int]:
        return self.members | {self.target}


def find_mb(
    target: int,
    variables: Iterable[int],
    tester: CITester,
    cache: CICache | None = None,
) -> MarkovBlanket:
    """Grow-then-shrink blanket search around ``target``.

    Growing adds the candidate most associated with the target given the
    current blanket when the backend ranks candidates, otherwise the first
    dependent candidate in index order; either way a candidate enters only
    if the independence test rejects. Shrinking drops any member that is
    independent of the target given the rest. Ties break toward the smaller
    index.
    """
    pool = sorted(set(variables))
    if target not in pool:
        raise ValueError(f"target {target} not among the variables")
    session = as_session(tester, cache)
    candidates = [v for v in pool if v != target]
    grown = _grow_blanket(target, candidates, session)
    shrunk = _shrink_blanket(target, grown, session)
    return MarkovBlanket(target, frozenset(shrunk))


def _grow_blanket(target, candidates, session) -> set[int]:
    blanket: set[int] = set()
    while True:
        picked = None
        if session.ranks_candidates:
            best_score = -1.0
            for v in candidates:
                if v in blanket:
                    continue
                independent, score = session.test_with_score(target, v, blanket)
                if not independent and score is not None and score > best_score:
                    best_score = score
                    picked = v
        else:
            for v in candidates:
                if v in blanket:
                    continue
                if not session.test(target, v, blanket):
                    picked = v
                    break
        if picked is None:
            return blanket
        blanket.add(picked)


def _shrink_blanket(target, grown, session) -> set[int]:
    blanket = set(grown)
    for v in sorted(grown):
        if session.test(target, v, blanket - {v}):
            blanket.remove(v)
    return blanket
