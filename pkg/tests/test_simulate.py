import itertools
import math

import numpy as np
import pytest

from localcausal import (
    Dag,
    GraphError,
    d_separated,
    dag_to_cpdag,
    orient_with_background,
)
from localcausal.simulate import (
    Sem,
    SimConfig,
    export_sem_json,
    random_chain_component_dag,
    random_dag,
    random_sem,
    sample_background,
    sample_sem,
)


class TestRandomDag:
    def test_edge_count_and_acyclicity(self):
        rng = np.random.default_rng(0)
        g = random_dag(5, 2.0, rng)
        assert len(g.directed_edges()) == 5

    def test_seed_determinism(self):
        a = random_dag(8, 2.5, np.random.default_rng(42))
        b = random_dag(8, 2.5, np.random.default_rng(42))
        assert a == b

    def test_complete_request(self):
        g = random_dag(5, 4.0, np.random.default_rng(1))
        assert len(g.directed_edges()) == 10

    def test_over_dense_rejected(self):
        with pytest.raises(GraphError):
            random_dag(4, 100.0, np.random.default_rng(1))


class TestChainComponent:
    def test_single_undirected_component(self):
        rng = np.random.default_rng(5)
        for n in (5, 10, 15):
            g = random_chain_component_dag(n, rng)
            cp = dag_to_cpdag(g)
            assert not cp.directed_edges()
            assert cp.undirected_component(0) == set(range(n))

    def test_determinism(self):
        a = random_chain_component_dag(10, np.random.default_rng(3))
        b = random_chain_component_dag(10, np.random.default_rng(3))
        assert a == b


class TestSem:
    def test_weights_must_cover_edges(self):
        g = Dag(2, [(0, 1)])
        with pytest.raises(ValueError):
            Sem(g, {})

    def test_single_edge_correlation(self):
        w = 0.9
        sem = Sem(Dag(2, [(0, 1)]), {(0, 1): w})
        corr = sem.correlation()
        assert math.isclose(corr[0, 1], w / math.sqrt(1 + w * w), rel_tol=1e-12)

    def test_empty_graph_iid(self):
        sem = Sem(Dag(3, []), {})
        data = sample_sem(sem, 60000, np.random.default_rng(7))
        corr = np.corrcoef(data, rowvar=False)
        off = corr[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 0.03)

    def test_seed_determinism_bitwise(self):
        g = random_dag(6, 2.0, np.random.default_rng(9))
        sem = random_sem(g, np.random.default_rng(10))
        d1 = sample_sem(sem, 100, np.random.default_rng(11))
        d2 = sample_sem(sem, 100, np.random.default_rng(11))
        assert d1.tobytes() == d2.tobytes()

    def test_empirical_matches_analytic(self):
        rng = np.random.default_rng(12)
        g = random_dag(4, 2.0, rng)
        sem = random_sem(g, rng)
        data = sample_sem(sem, 200000, rng)
        assert np.allclose(np.cov(data, rowvar=False), sem.covariance(),
                           atol=0.05)

    def test_covariance_positive_definite_large(self):
        rng = np.random.default_rng(13)
        g = random_dag(100, 3.0, rng)
        sem = random_sem(g, rng)
        np.linalg.cholesky(sem.covariance())

    def test_analytic_faithfulness(self):
        # zero partial correlation exactly on separated triples
        from localcausal import GaussianCI

        rng = np.random.default_rng(14)
        for _ in range(10):
            n = int(rng.integers(4, 8))
            g = random_dag(n, 2.0, rng)
            sem = random_sem(g, rng)
            tester = GaussianCI(sem.correlation(), 10**9)
            for x, y in itertools.combinations(range(n), 2):
                rest = [v for v in range(n) if v not in (x, y)]
                for r in range(min(len(rest), 3) + 1):
                    for z in itertools.combinations(rest, r):
                        rho = tester.partial_correlation(x, y, z)
                        if d_separated(g, x, y, z):
                            assert abs(rho) < 1e-9
                        else:
                            assert abs(rho) > 1e-9

    def test_export(self, tmp_path):
        sem = Sem(Dag(2, [(0, 1)]), {(0, 1): 1.0})
        path = tmp_path / "sem.json"
        export_sem_json(sem, str(path))
        assert path.read_text().startswith("{")


class TestSampleBackground:
    def test_fraction_zero(self):
        g = random_dag(6, 2.0, np.random.default_rng(1))
        assert sample_background(g, 0.0, np.random.default_rng(2)).empty

    def test_fraction_one_fully_resolves(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            g = random_dag(6, 2.0, rng)
            k = sample_background(g, 1.0, rng)
            restricted = orient_with_background(dag_to_cpdag(g), k.direct)
            assert restricted == g

    def test_edges_come_from_graph(self):
        rng = np.random.default_rng(16)
        g = random_dag(8, 2.0, rng)
        k = sample_background(g, 0.5, rng)
        for a, b in k.direct:
            assert g.has_directed(a, b)

    def test_deterministic_replay(self):
        g = random_dag(8, 2.0, np.random.default_rng(17))
        k1 = sample_background(g, 0.4, np.random.default_rng(18))
        k2 = sample_background(g, 0.4, np.random.default_rng(18))
        assert k1.direct == k2.direct

    def test_all_edges_mode(self):
        rng = np.random.default_rng(19)
        g = random_dag(8, 2.0, rng)
        k = sample_background(g, 1.0, rng, mode="all-edges")
        assert set(k.direct) == set(g.directed_edges())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(n=1)
        with pytest.raises(ValueError):
            SimConfig(n=5, knowledge_fraction=1.5)
        assert SimConfig(n=5).rng() is not None
