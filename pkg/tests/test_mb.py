import numpy as np
import pytest

from localcausal import Dag, GaussianCI, OracleCI, find_mb
from localcausal.ci import as_session
from localcausal.mb import _grow_blanket, _shrink_blanket
from localcausal.simulate import random_dag, random_sem, sample_sem


def true_blanket(g: Dag, v: int) -> set[int]:
    spouses = set()
    for c in g.ch(v):
        spouses |= g.pa(c)
    return (g.pa(v) | g.ch(v) | spouses) - {v}


def test_chain_middle():
    g = Dag(3, [(0, 1), (1, 2)])
    assert find_mb(1, range(3), OracleCI(g)).members == {0, 2}


def test_collider_includes_spouse():
    g = Dag(3, [(0, 1), (2, 1)])
    mb = find_mb(0, range(3), OracleCI(g))
    assert mb.members == {1, 2}
    assert mb.plus == {0, 1, 2}


def test_isolated_node():
    g = Dag(3, [(0, 1)])
    assert find_mb(2, range(3), OracleCI(g)).members == set()


def test_target_must_be_in_pool():
    g = Dag(3, [(0, 1)])
    with pytest.raises(ValueError):
        find_mb(2, [0, 1], OracleCI(g))


def test_oracle_blankets_exact_over_300_trials():
    rng = np.random.default_rng(100)
    for _ in range(300):
        n = int(rng.integers(3, 9))
        g = random_dag(n, float(rng.uniform(1.0, min(3.0, n - 1))), rng)
        v = int(rng.integers(n))
        assert find_mb(v, range(n), OracleCI(g)).members == true_blanket(g, v)


def test_result_independent_of_variable_order():
    rng = np.random.default_rng(101)
    for _ in range(30):
        n = 7
        g = random_dag(n, 2.0, rng)
        v = int(rng.integers(n))
        base = find_mb(v, range(n), OracleCI(g)).members
        shuffled = [int(u) for u in rng.permutation(n)]
        assert find_mb(v, shuffled, OracleCI(g)).members == base


def test_shrink_output_subset_of_grown():
    rng = np.random.default_rng(102)
    for _ in range(30):
        n = 7
        g = random_dag(n, 2.5, rng)
        v = int(rng.integers(n))
        session = as_session(OracleCI(g))
        grown = _grow_blanket(v, [u for u in range(n) if u != v], session)
        shrunk = _shrink_blanket(v, grown, session)
        assert shrunk <= grown
        assert shrunk == true_blanket(g, v)


def test_data_backend_recovers_blanket():
    rng = np.random.default_rng(103)
    hits = 0
    trials = 25
    for _ in range(trials):
        g = random_dag(6, 1.5, rng)
        sem = random_sem(g, rng)
        data = sample_sem(sem, 4000, rng)
        tester = GaussianCI.from_data(data, alpha=0.01)
        v = int(rng.integers(6))
        if find_mb(v, range(6), tester).members == true_blanket(g, v):
            hits += 1
    assert hits >= trials - 3
