"""Couplings of G(n, p) with H(n, pi) so that hyperedges of H sit on cliques of G.

Both loops walk the potential hyperedges in lexicographic order.  The graph is
drawn up front from its (conditioned) law and every "test A_j" reads the clique
indicator off it; revealing functions of a pre-drawn G one at a time has the
same joint law as drawing G conditionally at the end.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .condprob import TooLarge, _Counter, _reduce, conditional_all_present, enumerate_no_clause
from .hypercore import (UniformHypergraph, clean_three_cycles, clique_expansion, cliques,
                        find_avoidable_configuration)
from .procgen import as_seed_sequence, edge_rank, potential_edges, substream

logger = logging.getLogger(__name__)

YES, NO, STAR = "Y", "N", "*"
PI_BELOW = "pi_below_pi_at_heads"
CYCLE_MISMATCH = "cycle_mismatch"

# exact model counting gives up after this many branch nodes; the step is then
# computed over the clauses touching the target only and flagged
EXACT_BUDGET = 20_000
# cycle-category laws are enumerated exactly up to this many variables
ENUM_VARS = 22


@dataclass
class StepRecord:
    j: int
    hyperedge: tuple
    pi_j: float
    pi_j_prime: float | None
    coin: bool | None
    answer: str
    included: bool
    exact: bool = True


@dataclass
class CoupledOutcome:
    H: UniformHypergraph
    G: UniformHypergraph
    history: list = field(default_factory=list)
    failed: bool = False
    failure_reason: str | None = None
    pi: float = 0.0
    p: float = 0.0
    cycles_H: tuple = ()
    cycles_G: tuple = ()

    @property
    def yes(self) -> list:
        return [st.hyperedge for st in self.history if st.answer == YES]

    @property
    def no(self) -> list:
        return [st.hyperedge for st in self.history if st.answer == NO]

    @property
    def star(self) -> list:
        return [st.hyperedge for st in self.history if st.answer == STAR]

    @property
    def approximate_steps(self) -> int:
        return sum(1 for st in self.history if not st.exact)

    def to_json(self) -> str:
        return json.dumps({
            "H": json.loads(self.H.to_json()), "G": json.loads(self.G.to_json()),
            "failed": self.failed, "failure_reason": self.failure_reason,
            "pi": self.pi, "p": self.p,
            "cycles_H": [list(map(list, c)) for c in self.cycles_H],
            "cycles_G": [list(map(list, c)) for c in self.cycles_G],
            "history": [{"j": st.j, "hyperedge": list(st.hyperedge), "pi_j": st.pi_j,
                         "pi_j_prime": st.pi_j_prime, "coin": st.coin, "answer": st.answer,
                         "included": st.included, "exact": st.exact} for st in self.history],
        })


def coupling_pi(n: int, p: float, r: int, s: int = 2, delta: float = 0.1) -> float:
    """pi = (1 - n^-delta) p^C(r, s)."""
    return (1.0 - n ** (-delta)) * p ** math.comb(r, s)


class _Space:
    """Bit positions of the s-sets on 1..n and the clique mask of each r-set."""

    def __init__(self, n: int, r: int, s: int):
        self.n, self.r, self.s = n, r, s
        self.rsets = [tuple(int(x) for x in row) for row in potential_edges(n, r)]
        self.masks = [self.mask(h) for h in self.rsets]

    def mask(self, vertex_set) -> int:
        m = 0
        for e in combinations(sorted(vertex_set), self.s):
            m |= 1 << edge_rank(self.n, self.s, e)
        return m

    def edges_mask(self, edges) -> int:
        m = 0
        for e in edges:
            m |= 1 << edge_rank(self.n, self.s, e)
        return m

    def draw(self, p: float, rng: np.random.Generator) -> int:
        bits = rng.random(math.comb(self.n, self.s)) < p
        return sum(1 << int(i) for i in np.flatnonzero(bits))

    def graph(self, gmask: int) -> UniformHypergraph:
        all_e = potential_edges(self.n, self.s)
        edges = [tuple(int(v) for v in all_e[i]) for i in range(all_e.shape[0]) if gmask >> i & 1]
        return UniformHypergraph(self.n, self.s, tuple(edges))


def _cond_prob(clauses, forced, target, p, counter=None, budget=None) -> tuple[float, bool]:
    """Exact when the counter finishes in budget, else over the clauses meeting the target."""
    budget = EXACT_BUDGET if budget is None else budget
    try:
        return conditional_all_present(clauses, forced, target, p, engine="dpll", budget=budget,
                                       counter=counter)[0], True
    except TooLarge:
        t_free = target & ~forced
        red = _reduce(clauses, forced) or []
        near = [c for c in red if c & t_free]
        return conditional_all_present(near, 0, t_free, p, engine="dpll", budget=10**9)[0], False


def riordan_couple(n: int, r: int, p: float, seed, delta: float = 0.1, s: int = 2,
                   allow_clean_cycles: bool = False, exact_budget: int = EXACT_BUDGET) -> CoupledOutcome:
    """Step-by-step coupling of G ~ G(n, p) (or the s-uniform analogue) with H ~ H(n, pi).

    For graphs the loop is only guaranteed for r >= 4; ``allow_clean_cycles``
    lets it run at r = 3 anyway (failures are then recorded as usual).
    ``exact_budget`` caps the branch nodes of each exact count; steps beyond
    it use the clauses meeting the target only and are flagged inexact.
    """
    if not r > s >= 2:
        raise ValueError("need r > s >= 2")
    if s == 2 and r < 4 and not allow_clean_cycles:
        raise ValueError("for graphs use r >= 4, or modified_couple_r3 for r = 3")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    sp = _Space(n, r, s)
    pi = coupling_pi(n, p, r, s, delta)
    gmask = sp.draw(p, substream(seed, 0))
    coins = substream(seed, 1)
    counter = _Counter(p, exact_budget)

    clauses: list[int] = []
    forced = 0
    history = []
    included = []
    failed = False
    for j, (h, hm) in enumerate(zip(sp.rsets, sp.masks)):
        pij, exact = _cond_prob(clauses, forced, hm, p, counter, exact_budget)
        if pij >= pi:
            coin = bool(coins.random() < pi / pij)
            if coin:
                holds = (gmask & hm) == hm
                ans = YES if holds else NO
                inc = holds
                if holds:
                    forced |= hm
                else:
                    clauses.append(hm)
            else:
                ans, inc = STAR, False
        else:
            coin = bool(coins.random() < pi)
            ans, inc = STAR, coin
            failed = failed or coin
        if inc:
            included.append(h)
        history.append(StepRecord(j, h, pij, None, coin, ans, inc, exact))
    return CoupledOutcome(UniformHypergraph(n, r, tuple(included)), sp.graph(gmask), history,
                          failed, PI_BELOW if failed else None, pi, p)


# ---------------------------------------------------------------------------
# r = 3 with clean 3-cycles


@lru_cache(maxsize=16)
def _all_cycles(n: int) -> tuple:
    """Every clean 3-cycle on 1..n as (three triples, middle triangle)."""
    full = UniformHypergraph(n, 3, tuple(tuple(int(x) for x in e) for e in potential_edges(n, 3)))
    return tuple(clean_three_cycles(full))


def graph_cycles(G: UniformHypergraph) -> list:
    """Clean 3-cycles made of triangles of a graph."""
    return [c for c, _ in clean_three_cycles(cliques(G, 3))]


def hypergraph_cycles(H: UniformHypergraph) -> list:
    return [c for c, _ in clean_three_cycles(H)]


@dataclass(frozen=True)
class CycleLaw:
    """Truncated law of the clean-3-cycle collection: none / exactly one / other."""
    none: float
    each: float  # probability of exactly one specific cycle
    count: int  # number of potential cycles

    @property
    def other(self) -> float:
        return max(0.0, 1.0 - self.none - self.count * self.each)


def _cycle_clause_masks(n: int, kind: str) -> list[int]:
    cyc = _all_cycles(n)
    if kind == "H":
        return [sum(1 << edge_rank(n, 3, h) for h in c) for c, _ in cyc]
    sp = _Space(n, 3, 2)
    return [sp.mask(c[0]) | sp.mask(c[1]) | sp.mask(c[2]) for c, _ in cyc]


@lru_cache(maxsize=32)
def cycle_law(n: int, prob: float, kind: str, mc_trials: int = 40_000) -> CycleLaw:
    """Law of the cycle category under iid hyperedges ("H") or edges ("G").

    Exact by enumeration when there are at most ``ENUM_VARS`` variables,
    otherwise estimated by simulation with a fixed seed.
    """
    clauses = _cycle_clause_masks(n, kind)
    if not clauses:
        return CycleLaw(1.0, 0.0, 0)
    nvar = math.comb(n, 3 if kind == "H" else 2)
    if nvar <= ENUM_VARS:
        none = enumerate_no_clause(clauses, prob)
        first, rest = clauses[0], clauses[1:]
        each = prob ** bin(first).count("1") * enumerate_no_clause(rest, prob, forced=first)
        return CycleLaw(none, each, len(clauses))
    logger.info("cycle law for n=%d kind=%s estimated by simulation", n, kind)
    rng = np.random.default_rng([n, 0 if kind == "H" else 1, mc_trials])
    cols = np.array([[i for i in range(nvar) if c >> i & 1] for c in clauses])
    zero = one_first = total = 0
    while total < mc_trials:
        m = min(2000, mc_trials - total)
        x = rng.random((m, nvar)) < prob
        full = x[:, cols].all(axis=2)
        counts = full.sum(axis=1)
        zero += int((counts == 0).sum())
        one_first += int(((counts == 1) & full[:, 0]).sum())
        total += m
    return CycleLaw(zero / total, one_first / total, len(clauses))


def _relabel_to(cycle_src, cycle_dst, n, rng):
    """Uniform vertex permutation carrying one clean 3-cycle onto another."""
    (a1, b1, c1), (a2, b2, c2) = cycle_src, cycle_dst
    # vertex roles: the three meeting vertices and the three private ones
    def roles(c):
        a, b, cc = map(set, c)
        x, = a & b
        y, = b & cc
        z, = cc & a
        return [x, y, z, *(a - {x, z}), *(b - {x, y}), *(cc - {y, z})]
    src_orders = [roles(perm) for perm in permutations((a1, b1, c1))]
    dst = roles((a2, b2, c2))
    src = src_orders[rng.integers(len(src_orders))]
    mapping = dict(zip(src, dst))
    rest_src = [v for v in range(1, n + 1) if v not in mapping]
    rest_dst = [v for v in range(1, n + 1) if v not in mapping.values()]
    for v, w in zip(rest_src, rng.permutation(rest_dst).tolist()):
        mapping[v] = w
    return mapping


def _sample_with_category(n: int, prob: float, kind: str, category, rng, budget: int):
    """Rejection-sample a graph ("G") or 3-graph ("H") whose cycle collection has
    the given category: None, a specific cycle, or "other"."""
    arity = 3 if kind == "H" else 2
    all_e = potential_edges(n, arity)
    for _ in range(budget):
        bits = rng.random(all_e.shape[0]) < prob
        X = UniformHypergraph(n, arity, tuple(tuple(int(v) for v in all_e[i]) for i in np.flatnonzero(bits)))
        cyc = hypergraph_cycles(X) if kind == "H" else graph_cycles(X)
        if category is None and not cyc:
            return X
        if category == "other" and len(cyc) >= 2:
            return X
        if isinstance(category, tuple) and len(cyc) == 1:
            mp = _relabel_to(cyc[0], category, n, rng)
            return UniformHypergraph.from_edges(n, arity, (tuple(mp[v] for v in e) for e in X.edges))
    raise RuntimeError(f"conditional sampling of {kind} exceeded {budget} attempts")


def modified_couple_r3(n: int, p: float, seed, delta: float = 0.1, retry_budget: int = 200_000) -> CoupledOutcome:
    """Coupling for r = 3: match clean 3-cycle collections, then run the two-probability loop.

    The collections are coupled by a maximal coupling of their laws truncated
    to {no cycle, exactly one cycle c, anything else}; "anything else" on
    either side, or unequal draws, is recorded as ``cycle_mismatch``.
    """
    pi = coupling_pi(n, p, 3, 2, delta)
    cyc = [c for c, _ in _all_cycles(n)]
    law_g = cycle_law(n, p, "G")
    law_h = cycle_law(n, pi, "H")
    rng_c = substream(seed, 0)
    rng_g = substream(seed, 1)
    coins = substream(seed, 2)

    cats = [None] + cyc
    mg = np.array([law_g.none] + [law_g.each] * len(cyc) + [law_g.other])
    mh = np.array([law_h.none] + [law_h.each] * len(cyc) + [law_h.other])
    overlap = np.minimum(mg[:-1], mh[:-1])
    w = overlap.sum()
    labels = cats + ["other"]
    if rng_c.random() < w:
        pick = labels[int(rng_c.choice(len(overlap), p=overlap / w))]
        cat_g = cat_h = pick
    else:
        rg, rh = mg.copy(), mh.copy()
        rg[:-1] -= overlap
        rh[:-1] -= overlap
        rg, rh = np.clip(rg, 0, None), np.clip(rh, 0, None)
        cat_g = labels[int(rng_c.choice(len(rg), p=rg / rg.sum()))]
        cat_h = labels[int(rng_c.choice(len(rh), p=rh / rh.sum()))]

    if cat_g != cat_h or cat_g == "other":
        G = _sample_with_category(n, p, "G", cat_g, rng_g, retry_budget)
        H = _sample_with_category(n, pi, "H", cat_h, rng_g, retry_budget)
        return CoupledOutcome(H, G, [], True, CYCLE_MISMATCH, pi, p,
                              tuple(hypergraph_cycles(H)), tuple(graph_cycles(G)))

    G = _sample_with_category(n, p, "G", cat_g, rng_g, retry_budget)
    chosen = [] if cat_g is None else [cat_g]
    sp = _Space(n, 3, 2)
    gmask = sp.edges_mask(G.edges)

    # graph side: forced edges of the chosen cycle, clauses for every other cycle
    g_forced = 0
    for c in chosen:
        for h in c:
            g_forced |= sp.mask(h)
    g_clauses = [sp.mask(c[0]) | sp.mask(c[1]) | sp.mask(c[2]) for c in cyc if c not in chosen]
    # hypergraph side: same over hyperedge variables
    hbit = lambda h: 1 << edge_rank(n, 3, h)
    h_forced = 0
    for c in chosen:
        for h in c:
            h_forced |= hbit(h)
    h_clauses = [hbit(c[0]) | hbit(c[1]) | hbit(c[2]) for c in cyc if c not in chosen]
    h_absent = 0
    g_counter, h_counter = _Counter(p, EXACT_BUDGET), _Counter(pi, EXACT_BUDGET)

    cycle_edges = {h for c in chosen for h in c}
    history = []
    included = sorted(cycle_edges)
    failed = False
    for j, (h, hm) in enumerate(zip(sp.rsets, sp.masks)):
        if h in cycle_edges:
            continue
        pij, ex1 = _cond_prob(g_clauses, g_forced, hm, p, g_counter)
        live = [c for c in h_clauses if not c & h_absent]
        pij2, ex2 = _cond_prob(live, h_forced, hbit(h), pi, h_counter)
        exact = ex1 and ex2
        if pij >= pij2:
            if pij == 0.0:
                coin, ans, inc = None, NO, False
                g_clauses.append(hm)
            else:
                coin = bool(coins.random() < pij2 / pij)
                if coin:
                    holds = (gmask & hm) == hm
                    ans, inc = (YES, True) if holds else (NO, False)
                    if holds:
                        g_forced |= hm
                    else:
                        g_clauses.append(hm)
                else:
                    ans, inc = STAR, False
        else:
            coin = bool(coins.random() < pij2)
            ans, inc = STAR, coin
            failed = failed or coin
        if inc:
            included.append(h)
            h_forced |= hbit(h)
        else:
            h_absent |= hbit(h)
        history.append(StepRecord(j, h, pij, pij2, coin, ans, inc, exact))
    H = UniformHypergraph(n, 3, tuple(included))
    return CoupledOutcome(H, G, history, failed, PI_BELOW if failed else None, pi, p,
                          tuple(chosen), tuple(chosen))


# ---------------------------------------------------------------------------
# extra cliques


def pi_star(H0: UniformHypergraph, target, p: float, s: int = 2) -> float:
    """P(target spans a clique | every hyperedge of H0 spans a clique) = p^m,
    m the number of s-subsets of the target not inside any hyperedge of H0."""
    t = tuple(sorted(target))
    if t in H0:
        raise ValueError("target is a hyperedge of H0")
    covered = clique_expansion(H0, s).edge_set if len(H0) else frozenset()
    m = sum(1 for e in combinations(t, s) if e not in covered)
    return p ** m


def extra_clique_sum(H0: UniformHypergraph, v: int, p: float, s: int = 2) -> float:
    """Sum over r-sets h containing v, h not in H0, of pi_star(H0, h) - p^C(r, s).

    Only r-sets containing an s-subset of some hyperedge of H0 contribute, so
    those are the only ones enumerated.
    """
    r, n = H0.arity, H0.n
    if not len(H0):
        return 0.0
    base = p ** math.comb(r, s)
    exp_edges = clique_expansion(H0, s).edges
    cand = set()
    for e in exp_edges:
        u = set(e) | {v}
        if len(u) > r:
            continue
        rest = [w for w in range(1, n + 1) if w not in u]
        for extra in combinations(rest, r - len(u)):
            cand.add(tuple(sorted(u | set(extra))))
    total = 0.0
    for h in cand:
        if h in H0:
            continue
        total += pi_star(H0, h, p, s) - base
    return total


MIDDLE = "middle_triangle"
AVOIDABLE = "avoidable"
UNEXPLAINED = "unexplained"


def classify_extra_cliques(G: UniformHypergraph, H: UniformHypergraph) -> list[tuple[tuple, str]]:
    """Label each r-clique of G that is not a hyperedge of H.

    ``middle_triangle``: (r = 3) the middle triangle of a clean 3-cycle of H.
    ``avoidable``: H has an avoidable configuration, searched first among the
    hyperedges meeting the clique in at least ``G.arity`` vertices.
    ``unexplained``: neither.
    """
    if G.n != H.n:
        raise ValueError("G and H live on different vertex sets")
    r, s = H.arity, G.arity
    extras = [T for T in cliques(G, r).edges if T not in H.edge_set]
    if not extras:
        return []
    middles = {m for _, m in clean_three_cycles(H)} if r == 3 else set()
    global_witness = None
    searched_global = False
    out = []
    for T in extras:
        if T in middles:
            out.append((T, MIDDLE))
            continue
        ts = set(T)
        near = [h for h in H.edges if len(ts & set(h)) >= s]
        if len(near) >= 2 and find_avoidable_configuration(H.sub(near)) is not None:
            out.append((T, AVOIDABLE))
            continue
        if not searched_global:
            global_witness = find_avoidable_configuration(H)
            searched_global = True
        out.append((T, AVOIDABLE if global_witness is not None else UNEXPLAINED))
    return out
