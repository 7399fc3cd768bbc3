"""Random graphs, linear Gaussian sampling, and knowledge sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import GraphError
from .graph import Dag
from .learn import BackgroundKnowledge
from .meek import dag_to_cpdag


@dataclass
class SimConfig:
    """Settings for one simulated scenario."""

    n: int
    avg_degree: float = 2.0
    sample_size: int = 2000
    weight_range: tuple[float, float] = (0.6, 1.2)
    knowledge_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two nodes")
        if not (0.0 <= self.knowledge_fraction <= 1.0):
            raise ValueError("knowledge fraction must lie in [0, 1]")
        lo, hi = self.weight_range
        if lo > hi:
            raise ValueError("empty weight range")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def random_dag(
    n: int,
    avg_degree: float | None = None,
    rng: np.random.Generator | None = None,
    *,
    n_edges: int | None = None,
    labels=None,
) -> Dag:
    """Uniform random order, then uniformly chosen forward pairs.

    The edge count is ``floor(n * avg_degree / 2)`` unless given explicitly.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if n_edges is None:
        if avg_degree is None:
            raise ValueError("give avg_degree or n_edges")
        n_edges = int(n * avg_degree / 2)
    max_edges = n * (n - 1) // 2
    if n_edges > max_edges:
        raise GraphError(f"{n_edges} edges exceed the maximum {max_edges}")
    order = rng.permutation(n)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    edges = [
        (int(order[pairs[k][0]]), int(order[pairs[k][1]])) for k in sorted(chosen)
    ]
    return Dag(n, edges, labels=labels)


def random_chain_component_dag(
    n: int,
    rng: np.random.Generator | None = None,
    extra_parent_prob: float = 0.4,
) -> Dag:
    """Connected DAG without collider triples: one fully undirected class.

    Each new node attaches to a random earlier node plus a random subset of
    that node's parents; parent sets therefore stay cliques, so the
    equivalence-class representative keeps every edge undirected and the
    graph forms a single chain component.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if n < 2:
        raise ValueError("need at least two nodes")
    order = [int(v) for v in rng.permutation(n)]
    parents: dict[int, list[int]] = {order[0]: []}
    edges: list[tuple[int, int]] = []
    for i in range(1, n):
        v = order[i]
        anchor = order[int(rng.integers(i))]
        pset = [anchor]
        for p in parents[anchor]:
            if rng.random() < extra_parent_prob:
                pset.append(p)
        parents[v] = pset
        edges.extend((p, v) for p in pset)
    return Dag(n, edges)


@dataclass
class Sem:
    """Linear Gaussian model: each node is a weighted parent sum plus noise."""

    dag: Dag
    weights: dict[tuple[int, int], float]

    def __post_init__(self):
        expected = set(map(tuple, self.dag.directed_edges()))
        if set(self.weights) != expected:
            raise ValueError("weights must cover exactly the graph's edges")

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.dag.n, self.dag.n))
        for (i, j), value in self.weights.items():
            w[i, j] = value
        return w

    def covariance(self) -> np.ndarray:
        """Exact covariance of the model, with unit noise variances."""
        eye = np.eye(self.dag.n)
        m = np.linalg.inv(eye - self.weight_matrix().T)
        return m @ m.T

    def correlation(self) -> np.ndarray:
        cov = self.covariance()
        d = np.sqrt(np.diag(cov))
        return cov / np.outer(d, d)

    def to_json(self) -> dict:
        return {
            "format": "sem-v1",
            "num_nodes": self.dag.n,
            "edges": [
                {"tail": i, "head": j, "weight": w}
                for (i, j), w in sorted(self.weights.items())
            ],
        }


def random_sem(
    dag: Dag,
    rng: np.random.Generator | None = None,
    weight_range: tuple[float, float] = (0.6, 1.2),
) -> Sem:
    rng = rng if rng is not None else np.random.default_rng()
    lo, hi = weight_range
    weights = {
        (i, j): float(rng.uniform(lo, hi)) for i, j in dag.directed_edges()
    }
    return Sem(dag, weights)


def sample_sem(
    sem: Sem, n_samples: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Ancestral sampling in topological order, standard normal noise."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = rng if rng is not None else np.random.default_rng()
    n = sem.dag.n
    data = rng.standard_normal((n_samples, n))
    for v in sem.dag.topological_order():
        for p in sorted(sem.dag.pa(v)):
            data[:, v] += sem.weights[(p, v)] * data[:, p]
    return data


def sample_background(
    dag: Dag,
    fraction: float,
    rng: np.random.Generator | None = None,
    mode: str = "cpdag-undirected",
) -> BackgroundKnowledge:
    """Reveal a fraction of the true edges as direct knowledge.

    ``cpdag-undirected`` draws from the edges left undirected by the
    equivalence-class representative (ceil of fraction times their count);
    ``all-edges`` draws from every edge of the DAG.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValueError("fraction must lie in [0, 1]")
    rng = rng if rng is not None else np.random.default_rng()
    if mode == "cpdag-undirected":
        cpdag = dag_to_cpdag(dag)
        pool = [
            (a, b) if dag.has_directed(a, b) else (b, a)
            for a, b in cpdag.undirected_edges()
        ]
    elif mode == "all-edges":
        pool = dag.directed_edges()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not pool:
        return BackgroundKnowledge()
    count = int(np.ceil(fraction * len(pool)))
    if count == 0:
        return BackgroundKnowledge()
    picked = rng.choice(len(pool), size=count, replace=False)
    return BackgroundKnowledge(direct=[pool[k] for k in sorted(picked)])


def export_csv(
    path: str, data: np.ndarray, names: list[str] | None = None
) -> None:
    n_cols = data.shape[1]
    names = names if names is not None else [f"X{i}" for i in range(n_cols)]
    header = ",".join(names)
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.10g")


def export_sem_json(sem: Sem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sem.to_json(), fh, indent=2)
        fh.write("\n")
