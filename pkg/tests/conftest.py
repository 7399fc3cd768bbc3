"""Shared fixtures and randomized-instance helpers for the test suite."""

import numpy as np
import pytest

from localcausal import (
    BackgroundKnowledge,
    Dag,
    dag_to_cpdag,
    orient_with_background,
)
from localcausal.simulate import random_dag, sample_background

# Four-node working example used throughout: A=0, X=1, B=2, Y=3.
# True graph: A->X, X->B, A->Y, B->Y, X->Y; its class representative keeps
# A-X and X-B undirected and has exactly three members.
A, X, B, Y = 0, 1, 2, 3
FOUR_LABELS = ["A", "X", "B", "Y"]


def four_node_dag() -> Dag:
    return Dag(4, [(A, X), (X, B), (A, Y), (B, Y), (X, Y)], labels=FOUR_LABELS)


@pytest.fixture
def g3() -> Dag:
    return four_node_dag()


@pytest.fixture
def g3_cpdag(g3):
    return dag_to_cpdag(g3)


def random_instance(rng, n_lo=4, n_hi=8, max_degree=3.0):
    """Random DAG with a modest edge budget."""
    n = int(rng.integers(n_lo, n_hi + 1))
    degree = float(rng.uniform(1.0, max_degree))
    return random_dag(n, degree, rng)


def random_direct_knowledge(dag, rng, fraction=None) -> BackgroundKnowledge:
    if fraction is None:
        fraction = float(rng.uniform(0.0, 1.0))
    return sample_background(dag, fraction, rng)


def true_restricted(dag, knowledge: BackgroundKnowledge):
    """Representative of the class restricted by direct knowledge only."""
    return orient_with_background(dag_to_cpdag(dag), knowledge.direct)


def sample_mixed_knowledge(dag, rng, max_items=2) -> BackgroundKnowledge:
    """Consistent knowledge of all three kinds drawn from the true graph."""
    direct = random_direct_knowledge(dag, rng, float(rng.uniform(0, 0.5))).direct
    non_anc, anc = [], []
    nodes = list(range(dag.n))
    na_pool = [
        (a, b)
        for a in nodes
        for b in nodes
        if a != b and b not in dag.descendants(a)
    ]
    anc_pool = [
        (a, b)
        for a in nodes
        for b in nodes
        if a != b and b in dag.descendants(a)
    ]
    for pool, sink in ((na_pool, non_anc), (anc_pool, anc)):
        if not pool:
            continue
        count = int(rng.integers(0, max_items + 1))
        count = min(count, len(pool))
        if count:
            picked = rng.choice(len(pool), size=count, replace=False)
            sink.extend(pool[k] for k in sorted(picked))
    return BackgroundKnowledge(
        direct=direct, non_ancestral=non_anc, ancestral=anc
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240717)
