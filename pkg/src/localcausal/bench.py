"""Reproducible simulation sweeps and their CSV panels.

Every trial derives its generator from (base seed, trial index), so sweeps
are deterministic regardless of worker scheduling, and rows carry the seed
plus a configuration hash. Wall-clock columns are excluded from the
deterministic panels unless explicitly requested.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ci import CICache, GaussianCI, OracleCI, as_session
from .graph import PartiallyDirectedGraph
from .identify import zuo_classify
from .learn import (
    BackgroundKnowledge,
    baseline_local_learn,
    learn_marginal_cpdag,
    mb_by_mb_mpdag,
)
from .meek import dag_to_cpdag, meek_closure, orient_with_background
from .metrics import ConfusionMatrix3, local_scope, local_shd
from .simulate import (
    random_chain_component_dag,
    random_dag,
    random_sem,
    sample_background,
    sample_sem,
)

KAPPA_METHODS = ("labiter", "local-itc", "zuo")

RELATION_COLUMNS = {
    "definite-descendant": 0,
    "definite-non-descendant": 1,
    "possible-descendant": 2,
}


@dataclass
class ExperimentConfig:
    """Sweep settings for the benchmark suites."""

    suite: str = "chain-ci"
    sizes: tuple[int, ...] = (10,)
    degrees: tuple[float, ...] = (2.0,)
    sample_sizes: tuple[int, ...] = (1000,)
    fractions: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    repetitions: int = 100
    methods: tuple[str, ...] = KAPPA_METHODS
    backend: str = "oracle"
    alpha: float = 0.01
    seed: int = 0
    mec_cap: int = 4096
    timing: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not self.methods:
            raise ValueError("method list must be non-empty")

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "sizes": list(self.sizes),
            "degrees": list(self.degrees),
            "sample_sizes": list(self.sample_sizes),
            "fractions": list(self.fractions),
            "repetitions": self.repetitions,
            "methods": list(self.methods),
            "backend": self.backend,
            "alpha": self.alpha,
            "seed": self.seed,
            "mec_cap": self.mec_cap,
        }

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass
class TrialRecord:
    """One trial's outcome; wall time stays out of deterministic panels."""

    seed: int
    config_hash: str
    values: dict = field(default_factory=dict)
    wall_time: float | None = None
    error: str | None = None

    def row(self, timing: bool = False) -> dict:
        out = {"seed": self.seed, "config_hash": self.config_hash}
        out.update(self.values)
        if timing and self.wall_time is not None:
            out["wall_time"] = f"{self.wall_time:.6f}"
        if self.error is not None:
            out["error"] = self.error
        return out


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


# -- chain-component trials ------------------------------------------------------


def chain_ci_trial(n: int, fraction: float, seed: int, index: int) -> dict:
    """Oracle CI-count comparison on one chain component.

    Returns distinct-test counts for the knowledge-aware learner, the plain
    no-knowledge learner, and the two-phase baseline matched to the
    knowledge-aware exploration order.
    """
    rng = _trial_rng(seed, index)
    dag = random_chain_component_dag(n, rng)
    knowledge = sample_background(dag, fraction, rng)
    x = int(rng.integers(n))
    oracle = OracleCI(dag)

    with_k = mb_by_mb_mpdag(x, oracle, knowledge, cache=CICache())
    plain = mb_by_mb_mpdag(x, oracle, None, cache=CICache())
    matched = baseline_local_learn(
        x, oracle, knowledge, cache=CICache(), order_hint=with_k.explored
    )
    return {
        "n": n,
        "fraction": fraction,
        "rep": index,
        "target": x,
        "ci_with_knowledge": with_k.ci_count,
        "ci_plain": plain.ci_count,
        "ci_baseline_matched": matched.ci_count,
        "ratio": with_k.ci_count / plain.ci_count,
    }


def chain_shd_trial(
    n: int,
    fraction: float,
    seed: int,
    index: int,
    sample_size: int = 2000,
    alpha: float = 0.01,
    backend: str = "gaussian",
) -> dict:
    """Local-structure error on one chain component.

    Local distance is measured against the true knowledge-restricted graph
    over pairs touching the target and its true siblings. The oracle
    backend isolates algorithmic error from test error.
    """
    rng = _trial_rng(seed, index)
    dag = random_chain_component_dag(n, rng)
    knowledge = sample_background(dag, fraction, rng)
    truth = orient_with_background(dag_to_cpdag(dag), knowledge.direct)
    x = int(rng.integers(n))

    sem = random_sem(dag, rng)
    if backend == "oracle":
        tester = OracleCI(dag)
    else:
        data = sample_sem(sem, sample_size, rng)
        tester = GaussianCI.from_data(data, alpha)
    strict = backend == "oracle"

    with_k = mb_by_mb_mpdag(
        x, tester, knowledge, cache=CICache(), strict=strict
    )
    plain = mb_by_mb_mpdag(x, tester, None, cache=CICache(), strict=strict)
    scope = local_scope(truth, x)
    return {
        "n": n,
        "fraction": fraction,
        "rep": index,
        "sample_size": sample_size,
        "alpha": alpha,
        "target": x,
        "shd_with_knowledge": local_shd(with_k.graph, truth, scope),
        "shd_plain": local_shd(plain.graph, truth, scope),
        "ci_with_knowledge": with_k.ci_count,
        "ci_plain": plain.ci_count,
    }


# -- relation-identification trials ------------------------------------------------


def estimate_mpdag_from_data(
    tester: GaussianCI,
    knowledge_direct: Sequence[tuple[int, int]] = (),
    cache: CICache | None = None,
) -> PartiallyDirectedGraph:
    """Full-graph pipeline: pattern search, closure, then knowledge.

    All contradictions are tolerated (first orientation wins), since noisy
    patterns need not admit a consistent closure.
    """
    session = as_session(tester, cache)
    pat = learn_marginal_cpdag(range(session.n_vars), session)
    g = meek_closure(pat, on_conflict="skip")
    for a, b in knowledge_direct:
        status = g.edge_status(a, b)
        if status == "undirected":
            g.orient(a, b)
        elif status == "absent":
            g.add_directed(a, b)
    return meek_closure(g, on_conflict="skip")


def kappa_trial(
    n: int,
    degree: float,
    sample_size: int,
    fraction: float,
    seed: int,
    index: int,
    alpha: float = 0.01,
    methods: Sequence[str] = KAPPA_METHODS,
) -> dict:
    """One random (x, y) classification under each method.

    Knowledge is a fraction of all true edges. Ground truth is the
    critical-set classification on the true restricted graph.
    """
    rng = _trial_rng(seed, index)
    dag = random_dag(n, degree, rng)
    knowledge = sample_background(dag, fraction, rng, mode="all-edges")
    truth_graph = orient_with_background(dag_to_cpdag(dag), knowledge.direct)
    x, y = (int(v) for v in rng.choice(n, size=2, replace=False))

    sem = random_sem(dag, rng)
    data = sample_sem(sem, sample_size, rng)

    row = {
        "n": n,
        "degree": degree,
        "sample_size": sample_size,
        "fraction": fraction,
        "rep": index,
        "x": x,
        "y": y,
        "true_relation": zuo_classify(truth_graph, x, y).kind.value,
    }
    from .identify import classify_relations
    from .learn import learn_local

    for method in methods:
        tester = GaussianCI.from_data(data, alpha)
        cache = CICache()
        session = as_session(tester, cache)
        start = time.perf_counter()
        if method == "labiter":
            ls = learn_local(x, session, knowledge, strict=False)
            rel = classify_relations(ls, session)[y]
        elif method == "local-itc":
            ls = learn_local(x, session, None, strict=False)
            rel = classify_relations(ls, session)[y]
        elif method == "zuo":
            est = estimate_mpdag_from_data(tester, knowledge.direct, cache)
            rel = zuo_classify(est, x, y)
        else:
            raise ValueError(f"unknown method {method!r}")
        elapsed = time.perf_counter() - start
        key = method.replace("-", "_")
        row[f"pred_{key}"] = rel.kind.value
        row[f"ci_{key}"] = cache.count
        row[f"time_{key}"] = elapsed
    return row


# -- sweep drivers -------------------------------------------------------------


def _run_trials(kernel, argsets, n_jobs: int = 1) -> list[dict]:
    if n_jobs == 1 or len(argsets) < 2:
        return [kernel(*args) for args in argsets]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        futures = [pool.submit(kernel, *args) for args in argsets]
        return [f.result() for f in futures]


def run_chain_ci_sweep(cfg: ExperimentConfig, n_jobs: int = 1) -> list[dict]:
    argsets = [
        (n, fraction, cfg.seed, rep)
        for n in cfg.sizes
        for fraction in cfg.fractions
        for rep in range(cfg.repetitions)
    ]
    rows = _run_trials(chain_ci_trial, argsets, n_jobs)
    for row in rows:
        row["seed"] = cfg.seed
        row["config_hash"] = cfg.config_hash
    return rows


def run_chain_shd_sweep(cfg: ExperimentConfig, n_jobs: int = 1) -> list[dict]:
    argsets = [
        (n, fraction, cfg.seed, rep, nn, cfg.alpha, cfg.backend)
        for n in cfg.sizes
        for fraction in cfg.fractions
        for nn in cfg.sample_sizes
        for rep in range(cfg.repetitions)
    ]
    rows = _run_trials(chain_shd_trial, argsets, n_jobs)
    for row in rows:
        row["seed"] = cfg.seed
        row["config_hash"] = cfg.config_hash
    return rows


def run_kappa_sweep(cfg: ExperimentConfig, n_jobs: int = 1) -> list[dict]:
    argsets = [
        (n, d, nn, fraction, cfg.seed, rep, cfg.alpha, tuple(cfg.methods))
        for n in cfg.sizes
        for d in cfg.degrees
        for nn in cfg.sample_sizes
        for fraction in cfg.fractions
        for rep in range(cfg.repetitions)
    ]
    rows = _run_trials(kappa_trial, argsets, n_jobs)
    for row in rows:
        row["seed"] = cfg.seed
        row["config_hash"] = cfg.config_hash
    return rows


def run_suite(cfg: ExperimentConfig, n_jobs: int = 1) -> list[dict]:
    if cfg.suite == "chain-ci":
        return run_chain_ci_sweep(cfg, n_jobs)
    if cfg.suite == "chain-shd":
        return run_chain_shd_sweep(cfg, n_jobs)
    if cfg.suite == "kappa":
        return run_kappa_sweep(cfg, n_jobs)
    raise ValueError(f"unknown suite {cfg.suite!r}")


# -- aggregation -----------------------------------------------------------------


def confusion_from_rows(
    rows: Iterable[dict], pred_column: str
) -> ConfusionMatrix3:
    m = ConfusionMatrix3()
    for row in rows:
        m.add(
            RELATION_COLUMNS[row["true_relation"]],
            RELATION_COLUMNS[row[pred_column]],
        )
    return m


def mean_by_cell(
    rows: Iterable[dict], keys: Sequence[str], column: str
) -> dict[tuple, float]:
    sums: dict[tuple, list[float]] = {}
    for row in rows:
        cell = tuple(row[k] for k in keys)
        sums.setdefault(cell, []).append(float(row[column]))
    return {cell: sum(v) / len(v) for cell, v in sorted(sums.items())}


def write_csv(path: str, rows: Sequence[dict], *, timing: bool = False) -> None:
    """Deterministic CSV: fixed column order, no timing unless asked."""
    if not rows:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("")
        return
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    if not timing:
        columns = [c for c in columns if not c.startswith("time_")
                   and c != "wall_time"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(c, "")) for c in columns) + "\n")
