import json
import math
from itertools import combinations

import numpy as np
import pytest
from scipy import stats

from cliquehit.condprob import CliqueConditioning, exact_conditional_prob
from cliquehit.hypercore import UniformHypergraph, bad_events, clique_expansion, cliques
from cliquehit.procgen import trial_seed, window_params
from cliquehit.staticcoupling import (AVOIDABLE, CYCLE_MISMATCH, MIDDLE, UNEXPLAINED,
                                      classify_extra_cliques, coupling_pi, extra_clique_sum,
                                      modified_couple_r3, pi_star, riordan_couple)

H = UniformHypergraph.from_edges


def contained(o):
    return set(o.H.edges) <= set(cliques(o.G, o.H.arity).edges)


class TestRiordan:
    def test_deterministic(self):
        a = riordan_couple(8, 4, 0.6, trial_seed(0, 1))
        b = riordan_couple(8, 4, 0.6, trial_seed(0, 1))
        assert a.to_json() == b.to_json()

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            riordan_couple(8, 3, 0.5, 0)
        with pytest.raises(ValueError):
            riordan_couple(8, 4, 0.0, 0)

    def test_hyperedge_marginals(self):
        n, r, p, N = 7, 4, 0.9, 600
        pi = coupling_pi(n, p, r)
        rsets = list(combinations(range(1, n + 1), r))
        pos = {h: i for i, h in enumerate(rsets)}
        counts = np.zeros(len(rsets))
        for i in range(N):
            for h in riordan_couple(n, r, p, trial_seed(4, i)).H.edges:
                counts[pos[h]] += 1
        stat = float((((counts - N * pi) ** 2) / (N * pi * (1 - pi))).sum())
        assert stats.chi2.sf(stat, len(rsets)) > 0.01

    def test_success_means_containment_and_failure_means_bad(self):
        w = window_params(9, 4)
        for i in range(40):
            o = riordan_couple(9, 4, w.p_plus, trial_seed(0, i))
            if o.failed:
                f = bad_events(o.H, o.pi, w.g_value)
                assert f.b1 or f.b2
            else:
                assert contained(o)

    def test_history_is_complete_and_sound(self):
        o = riordan_couple(7, 4, 0.8, trial_seed(2, 2))
        assert [st.j for st in o.history] == list(range(math.comb(7, 4)))
        for st in o.history:
            assert 0.0 <= st.pi_j <= 1.0
            if st.answer == "yes":
                assert st.included
        assert set(o.yes) <= set(o.H.edges)

    def test_json_fields(self):
        o = riordan_couple(7, 4, 0.8, trial_seed(2, 3))
        d = json.loads(o.to_json())
        assert UniformHypergraph.from_json(json.dumps(d["H"])) == o.H
        assert UniformHypergraph.from_json(json.dumps(d["G"])) == o.G
        assert d["failed"] == o.failed and len(d["history"]) == len(o.history)


class TestModifiedR3:
    def test_deterministic(self):
        assert modified_couple_r3(6, 0.35, 5).to_json() == modified_couple_r3(6, 0.35, 5).to_json()

    def test_probability_pairs_and_containment(self):
        for i in range(12):
            o = modified_couple_r3(6, 0.35, trial_seed(1, i))
            for st in o.history:
                if st.pi_j_prime is None:
                    continue
                assert st.pi_j_prime <= o.pi + 1e-12
                if st.pi_j < st.pi_j_prime - 1e-12:
                    assert st.pi_j == 0.0
            if not o.failed:
                assert contained(o)

    def test_cycles_agree_when_not_mismatched(self):
        for i in range(8):
            o = modified_couple_r3(6, 0.35, trial_seed(2, i))
            if o.failure_reason != CYCLE_MISMATCH:
                assert sorted(o.cycles_G) == sorted(o.cycles_H)

    @pytest.mark.xfail(strict=True, reason="at n=9 and p_+ the clean 3-cycle laws of G and H are far "
                                           "apart, so the collections almost never match")
    def test_cycle_mismatch_rare_at_9(self):
        p = window_params(9, 3).p_plus
        bad = sum(modified_couple_r3(9, p, trial_seed(3, i)).failure_reason == CYCLE_MISMATCH
                  for i in range(40))
        assert bad / 40 <= 0.05


class TestPiStar:
    def test_examples(self):
        p = 0.3
        assert pi_star(H(8, 4, [(5, 6, 7, 8)]), (1, 2, 3, 4), p) == pytest.approx(p ** 6, rel=1e-15)
        assert pi_star(H(8, 4, [(1, 2, 3, 4)]), (1, 2, 3, 5), p) == pytest.approx(p ** 3, rel=1e-15)
        with pytest.raises(ValueError):
            pi_star(H(8, 4, [(1, 2, 3, 4)]), (1, 2, 3, 4), p)

    def test_matches_exact_engine(self):
        rng = np.random.default_rng(12)
        rsets = list(combinations(range(1, 7), 3))
        for _ in range(50):
            idx = rng.permutation(len(rsets))
            h0 = [rsets[i] for i in idx[1:1 + int(rng.integers(0, 4))]]
            p = float(rng.uniform(0.1, 0.9))
            want = exact_conditional_prob(CliqueConditioning(6, p, positives=h0), rsets[idx[0]])
            assert pi_star(H(6, 3, h0), rsets[idx[0]], p) == pytest.approx(want, abs=1e-12)


class TestExtraCliqueSum:
    def test_empty(self):
        assert extra_clique_sum(H(8, 4, []), 1, 0.3) == 0.0

    def test_full_enumeration(self):
        h0, p = H(8, 4, [(1, 2, 3, 4)]), 0.3
        covered = set(combinations((1, 2, 3, 4), 2))
        want = 0.0
        for rest in combinations(range(2, 9), 3):
            h = (1,) + rest
            if h == (1, 2, 3, 4):
                continue
            m = sum(e not in covered for e in combinations(h, 2))
            want += p ** m - p ** 6
        assert extra_clique_sum(h0, 1, p) == pytest.approx(want, abs=1e-15)

    def test_random_vs_term_by_term(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            rsets = list(combinations(range(1, 8), 4))
            h0 = H(7, 4, [rsets[i] for i in rng.choice(len(rsets), size=3, replace=False)])
            v, p = int(rng.integers(1, 8)), float(rng.uniform(0.1, 0.9))
            want = sum(pi_star(h0, h, p) - p ** 6 for h in rsets if v in h and h not in h0)
            assert extra_clique_sum(h0, v, p) == pytest.approx(want, abs=1e-12)


class TestClassify:
    def test_clean_cycle_middle_triangle(self):
        h = H(6, 3, [(1, 2, 3), (3, 4, 5), (5, 6, 1)])
        assert classify_extra_cliques(clique_expansion(h), h) == [((1, 3, 5), MIDDLE)]

    def test_avoidable_pair(self):
        # {1,5} is not an edge, so the expansion has no 4-clique besides the pair
        h = H(5, 4, [(1, 2, 3, 4), (2, 3, 4, 5)])
        assert classify_extra_cliques(clique_expansion(h), h) == []
        # these three expand to K6: all other 4-sets are extra
        h = H(6, 4, [(1, 2, 3, 4), (1, 2, 5, 6), (3, 4, 5, 6)])
        out = classify_extra_cliques(clique_expansion(h), h)
        assert len(out) == math.comb(6, 4) - 3 and all(lab == AVOIDABLE for _, lab in out)

    def test_disjoint_edges(self):
        h = H(8, 3, [(1, 2, 3), (4, 5, 6)])
        assert classify_extra_cliques(clique_expansion(h), h) == []

    def test_expansion_never_unexplained(self):
        rng = np.random.default_rng(4)
        for _ in range(150):
            r = int(rng.integers(3, 5))
            rsets = list(combinations(range(1, 9), r))
            h = H(8, r, [rsets[i] for i in rng.choice(len(rsets), size=int(rng.integers(1, 6)), replace=False)])
            assert all(lab != UNEXPLAINED for _, lab in classify_extra_cliques(clique_expansion(h), h))
