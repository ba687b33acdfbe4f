from functools import lru_cache
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from cliquehit.factorsolve import BudgetExceeded, Factor, clique_factor, perfect_matching
from cliquehit.hypercore import UniformHypergraph, cliques
from cliquehit.procgen import hitting_time_clique_cover, standard_process

H = UniformHypergraph.from_edges


def brute_matching(h):
    k = h.n // h.arity
    for sub in combinations(h.edges, k):
        if len({v for e in sub for v in e}) == h.n:
            return True
    return False


def brute_tiling(G, r):
    """Tile by always covering the smallest uncovered vertex."""
    adj = {v: set() for v in range(1, G.n + 1)}
    for a, b in G.edges:
        adj[a].add(b)
        adj[b].add(a)

    @lru_cache(maxsize=None)
    def go(left):
        if not left:
            return True
        v = min(left)
        rest = left - {v}
        for others in combinations(sorted(rest), r - 1):
            block = (v,) + others
            if all(b in adj[a] for a, b in combinations(block, 2)) and go(rest - set(others)):
                return True
        return False

    return go(frozenset(range(1, G.n + 1)))


class TestMatching:
    def test_examples(self):
        f = perfect_matching(H(6, 3, [(1, 2, 3), (4, 5, 6)]))
        assert f is not None and f.blocks == ((1, 2, 3), (4, 5, 6))
        assert perfect_matching(H(6, 3, [(1, 2, 3), (3, 4, 5), (5, 6, 1)])) is None

    def test_indivisible(self):
        with pytest.raises(ValueError):
            perfect_matching(H(7, 3, [(1, 2, 3)]))

    def test_random_vs_bruteforce(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            k = int(rng.integers(2, 4))
            n = k * int(rng.integers(2, 13 // k + 1))
            all_e = list(combinations(range(1, n + 1), k))
            m = int(rng.integers(0, min(len(all_e), 3 * n) + 1))
            h = H(n, k, [all_e[i] for i in rng.choice(len(all_e), size=m, replace=False)])
            f = perfect_matching(h)
            assert (f is not None) == brute_matching(h)
            if f is not None:
                f.check(n)
                assert set(f.blocks) <= h.edge_set

    def test_graphs_vs_networkx(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = 2 * int(rng.integers(2, 9))
            g = nx.gnp_random_graph(n, float(rng.uniform(0.1, 0.6)), seed=int(rng.integers(1 << 30)))
            h = H(n, 2, [(a + 1, b + 1) for a, b in g.edges])
            perfect = len(nx.max_weight_matching(g, maxcardinality=True)) == n // 2
            assert (perfect_matching(h) is not None) == perfect

    def test_budget(self):
        all_e = list(combinations(range(1, 13), 3))
        dense = H(12, 3, [e for e in all_e if 1 not in e] + [(1, 2, 3)])
        with pytest.raises(BudgetExceeded):
            perfect_matching(dense, budget=3)


class TestCliqueFactor:
    def test_examples(self):
        k6 = H(6, 2, combinations(range(1, 7), 2))
        f = clique_factor(k6, 3)
        assert f is not None
        f.check(6)
        c6 = H(6, 2, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 6)])
        assert clique_factor(c6, 3) is None

    def test_blocks_are_cliques(self):
        g = standard_process(12, 2, 3).prefix(40)
        f = clique_factor(g, 3)
        if f is not None:
            assert set(f.blocks) <= set(cliques(g, 3).edges)

    def test_stopped_processes_vs_tiling(self):
        for s in range(100):
            t = standard_process(12, 2, s)
            g = t.prefix(hitting_time_clique_cover(t, 3))
            assert (clique_factor(g, 3) is not None) == brute_tiling(g, 3)


def test_factor_json_round_trip():
    f = Factor(((4, 5, 6), (1, 2, 3)))
    assert f.blocks == ((1, 2, 3), (4, 5, 6))
    assert Factor.from_json(f.to_json()) == f


def test_factor_check_rejects_overlap():
    with pytest.raises(ValueError):
        Factor(((1, 2, 3), (3, 4, 5))).check(6)
