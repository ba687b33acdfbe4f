from itertools import combinations, permutations, product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cliquehit.condprob import (CliqueConditioning, InconsistentConditioning, NoAcceptances, TooLarge,
                                enumerate_no_clause, exact_conditional_prob, harris_check,
                                mc_conditional_prob, prob_no_clause)
from cliquehit.harness import random_conditioning


def naive_conditional(cond, target):
    """Sum over every assignment of all C(n,2) edges, no shortcuts."""
    edges = list(combinations(range(1, cond.n + 1), 2))
    idx = {e: i for i, e in enumerate(edges)}

    def clique(x, rset):
        return all(x[idx[e]] for e in combinations(sorted(rset), 2))

    num = den = 0.0
    for x in product((0, 1), repeat=len(edges)):
        if any(not x[idx[e]] for e in cond.forced_edges):
            continue
        if not all(clique(x, h) for h in cond.positives) or any(clique(x, h) for h in cond.negatives):
            continue
        w = cond.p ** sum(x) * (1 - cond.p) ** (len(x) - sum(x))
        den += w
        if clique(x, target):
            num += w
    return num / den


class TestExact:
    def test_unconditioned(self):
        assert exact_conditional_prob(CliqueConditioning(5, 0.5), (1, 2, 3)) == pytest.approx(0.125, abs=1e-15)

    def test_positive_forces_shared_edge(self):
        cond = CliqueConditioning(4, 0.5, positives=[(1, 2, 4)])
        assert exact_conditional_prob(cond, (1, 2, 3)) == pytest.approx(0.25, abs=1e-15)

    def test_negative_shares_an_edge(self):
        cond = CliqueConditioning(4, 0.5, negatives=[(1, 2, 4)])
        p = 0.5
        expect = p ** 3 * (1 - p ** 2) / (1 - p ** 3)
        assert exact_conditional_prob(cond, (1, 2, 3)) == pytest.approx(expect, abs=1e-12)
        assert exact_conditional_prob(cond, (1, 2, 3)) == pytest.approx(0.1071428571, abs=1e-9)

    def test_random_conditionings_vs_full_enumeration(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            cond, target = random_conditioning(5, rng)
            want = naive_conditional(cond, target)
            for engine in ("enumerate", "dpll"):
                assert exact_conditional_prob(cond, target, engine=engine) == pytest.approx(want, abs=1e-12)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            cond, target = random_conditioning(5, rng)
            base = exact_conditional_prob(cond, target)
            for perm in list(permutations(range(1, 6)))[::17]:
                f = dict(zip(range(1, 6), perm))
                mv = lambda fam: [tuple(f[v] for v in h) for h in fam]
                c2 = CliqueConditioning(5, cond.p, positives=mv(cond.positives), negatives=mv(cond.negatives))
                assert exact_conditional_prob(c2, mv([target])[0]) == pytest.approx(base, abs=1e-12)

    def test_more_positives_never_lower(self):
        rng = np.random.default_rng(8)
        rsets = list(combinations(range(1, 6), 3))
        for _ in range(60):
            idx = rng.permutation(len(rsets))
            target, pos = rsets[idx[0]], [rsets[i] for i in idx[1:4]]
            p = float(rng.uniform(0.1, 0.9))
            small = exact_conditional_prob(CliqueConditioning(5, p, positives=pos[:1]), target)
            big = exact_conditional_prob(CliqueConditioning(5, p, positives=pos), target)
            assert big >= small - 1e-12
            assert small >= p ** 3 - 1e-12

    def test_cap(self):
        negs = list(combinations(range(1, 9), 3))[:40]
        cond = CliqueConditioning(8, 0.5, negatives=[h for h in negs if h != (1, 2, 3)])
        with pytest.raises(TooLarge):
            exact_conditional_prob(cond, (1, 2, 3), cap=10)

    def test_inconsistent(self):
        with pytest.raises(InconsistentConditioning):
            CliqueConditioning(4, 0.5, positives=[(1, 2, 3)], negatives=[(1, 2, 3)])
        with pytest.raises(InconsistentConditioning):
            CliqueConditioning(4, 0.5, negatives=[(1, 2, 3)], forced_edges=[(1, 2), (1, 3), (2, 3)])
        with pytest.raises(InconsistentConditioning):
            CliqueConditioning(4, 1.0, negatives=[(1, 2, 3)])


@given(st.lists(st.integers(1, (1 << 12) - 1), max_size=7), st.floats(0.05, 0.95))
def test_model_counter_matches_enumeration(clauses, p):
    assert prob_no_clause(clauses, p) == pytest.approx(enumerate_no_clause(clauses, p), abs=1e-12)


class TestMonteCarlo:
    def test_unconditioned(self):
        est, hw = mc_conditional_prob(CliqueConditioning(5, 0.5), (1, 2, 3), 10 ** 5, 0)
        assert abs(est - 0.125) <= 3 * hw

    def test_deterministic(self):
        cond = CliqueConditioning(5, 0.4, negatives=[(1, 2, 4)])
        assert mc_conditional_prob(cond, (1, 2, 3), 5000, 9) == mc_conditional_prob(cond, (1, 2, 3), 5000, 9)

    def test_agrees_with_exact(self):
        rng = np.random.default_rng(17)
        bad = 0
        for i in range(50):
            cond, target = random_conditioning(5, rng)
            est, hw = mc_conditional_prob(cond, target, 20_000, i)
            bad += abs(est - exact_conditional_prob(cond, target)) > 3 * max(hw, 1e-12)
        assert bad == 0

    def test_no_acceptances(self):
        negs = [h for h in combinations(range(1, 6), 3) if h != (1, 2, 3)]
        cond = CliqueConditioning(5, 0.999, negatives=negs)
        with pytest.raises(NoAcceptances):
            mc_conditional_prob(cond, (1, 2, 3), 10, 0)

    def test_bad_trials(self):
        with pytest.raises(ValueError):
            mc_conditional_prob(CliqueConditioning(4, 0.5), (1, 2, 3), 0, 0)


class TestHarris:
    def test_identical_events(self):
        rep = harris_check(3, 0.3, lambda x: x[:, 0], lambda x: x[:, 0], 10 ** 5, 0)
        assert rep.gap == pytest.approx(0.21, abs=0.01) and rep.consistent

    def test_complementary_events(self):
        rep = harris_check(3, 0.3, lambda x: x[:, 0], lambda x: ~x[:, 0], 10 ** 4, 0, same_direction=False)
        assert rep.gap <= 0 and rep.consistent

    def test_random_threshold_events(self):
        rng = np.random.default_rng(2)
        ok = 0
        for i in range(100):
            wa, wb = rng.random(10), rng.random(10)
            ta, tb = wa.sum() * rng.uniform(0.2, 0.8), wb.sum() * rng.uniform(0.2, 0.8)
            rep = harris_check(10, rng.uniform(0.2, 0.8, 10), lambda x: x @ wa >= ta,
                               lambda x: x @ wb >= tb, 4000, i)
            ok += rep.consistent
        assert ok == 100
