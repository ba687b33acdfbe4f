"""Coupled process orders, exceptional hyperedges, the random set R, thinning, and the full chain."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np

from . import kernels
from .factorsolve import BudgetExceeded, clique_factor, perfect_matching
from .hypercore import UniformHypergraph, cliques, low_degree_vertices
from .procgen import (ProcessTrace, edge_rank, g_default, hitting_time_clique_cover,
                      hitting_time_min_degree, potential_edges, substream, child_seed, seed_label, window_params)
from .staticcoupling import riordan_couple


class PreconditionError(ValueError):
    """Input violates a structural precondition; ``witness`` says where."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class PartnerPair:
    u: tuple
    v: tuple
    shared: tuple  # the common s-edge(s) of the two cliques
    xi_prime: tuple  # one dummy time per shared edge


@dataclass
class TimeOrders:
    tau_edge: dict
    tau_hyperedge: dict
    partner_pairs: list
    s: int
    r: int
    sigma_G: list = field(default_factory=list)
    sigma_H: list = field(default_factory=list)

    def __post_init__(self):
        self.sigma_G = sorted(self.tau_edge, key=lambda e: (self.tau_edge[e], e))
        self.sigma_H = sorted(self.tau_hyperedge, key=lambda h: (self.tau_hyperedge[h], h))

    @property
    def S1(self) -> set:
        return {pp.u for pp in self.partner_pairs}

    @property
    def S2(self) -> set:
        return {pp.v for pp in self.partner_pairs}

    def clique_time(self, h) -> float:
        """tau(E(h)): arrival time of the last s-edge of the clique on h."""
        return max(self.tau_edge[e] for e in combinations(h, self.s))


def _overlap_check(H: UniformHypergraph, s: int):
    """Pairs overlapping in >= s vertices, keyed by overlap size."""
    by_sub: dict = {}
    for i, h in enumerate(H.edges):
        for sub in combinations(h, s):
            by_sub.setdefault(sub, []).append(i)
    pairs = {}
    for idx in by_sub.values():
        for i, j in combinations(idx, 2):
            if (i, j) not in pairs:
                pairs[(i, j)] = len(set(H.edges[i]) & set(H.edges[j]))
    return pairs


def build_time_orders(G: UniformHypergraph, H: UniformHypergraph, seed, dummy_edges: bool | None = None,
                      edge_times: dict | None = None, dummy_times: dict | None = None) -> TimeOrders:
    """Auxiliary times for the edges of G and the hyperedges of H.

    Each edge gets an iid uniform time; a hyperedge gets the latest time among
    the edges of its clique.  With ``dummy_edges`` (the default for graphs),
    the lexicographically larger hyperedge of each pair overlapping in exactly
    s vertices swaps the shared edge for its own iid dummy time.  Without
    dummies no two hyperedges may overlap in s or more vertices.

    ``edge_times`` and ``dummy_times`` (keyed by the larger hyperedge of a
    pair) replace the random draws, for hand-built instances.
    """
    s, r = G.arity, H.arity
    if dummy_edges is None:
        dummy_edges = s == 2
    if G.n != H.n or r <= s:
        raise ValueError("need G and H on the same vertices with H.arity > G.arity")
    gset = G.edge_set
    for h in H.edges:
        for e in combinations(h, s):
            if e not in gset:
                raise PreconditionError("H is not contained in cl(G)", witness=h)
    overlaps = _overlap_check(H, s)
    if dummy_edges:
        big = [(H.edges[i], H.edges[j]) for (i, j), k in overlaps.items() if k > s]
        if big:
            raise PreconditionError(f"hyperedges overlapping in more than {s} vertices", witness=big[0])
        count: dict = {}
        for (i, j) in overlaps:
            count[i] = count.get(i, 0) + 1
            count[j] = count.get(j, 0) + 1
        multi = [H.edges[i] for i, c in count.items() if c > 1]
        if multi:
            raise PreconditionError("a hyperedge has more than one partner", witness=multi[0])
        pair_idx = sorted(overlaps)
        verts = [set(H.edges[i]) | set(H.edges[j]) for i, j in pair_idx]
        for a, b in combinations(range(len(verts)), 2):
            if verts[a] & verts[b]:
                raise PreconditionError("partner pairs are not vertex-disjoint",
                                        witness=(pair_idx[a], pair_idx[b]))
    elif overlaps:
        (i, j), _ = next(iter(sorted(overlaps.items())))
        raise PreconditionError(f"two hyperedges overlap in at least {s} vertices",
                                witness=(H.edges[i], H.edges[j]))

    rng = substream(seed, 0)
    xi = rng.random(len(G.edges))
    tau_edge = {e: float(x) for e, x in zip(G.edges, xi)}
    if edge_times is not None:
        tau_edge.update({tuple(sorted(e)): float(x) for e, x in edge_times.items()})
    pairs = []
    if dummy_edges:
        for i, j in sorted(overlaps):
            u, v = H.edges[i], H.edges[j]
            shared = tuple(sorted(set(combinations(u, s)) & set(combinations(v, s))))
            xp = tuple(float(x) for x in rng.random(len(shared)))
            if dummy_times is not None and v in dummy_times:
                xp = tuple(float(x) for x in np.atleast_1d(dummy_times[v]))
            pairs.append(PartnerPair(u, v, shared, xp))
    dummy_for = {pp.v: pp for pp in pairs}
    tau_h = {}
    for h in H.edges:
        pp = dummy_for.get(h)
        times = [tau_edge[e] for e in combinations(h, s) if pp is None or e not in pp.shared]
        if pp is not None:
            times.extend(pp.xi_prime)
        tau_h[h] = max(times)
    return TimeOrders(tau_edge, tau_h, pairs, s, r)


class HittingComparison(NamedTuple):
    t_G: float | None
    t_H: float | None
    equal: bool


def hitting_comparison(orders: TimeOrders, G: UniformHypergraph, H: UniformHypergraph) -> HittingComparison:
    """Auxiliary-time hitting times; None when the event never happens."""
    n, r = G.n, H.arity
    t_G = t_H = None
    if orders.sigma_G:
        arr = np.array(orders.sigma_G, dtype=np.int64) - 1
        k = kernels.clique_cover_hit(arr, n, r)
        if k > 0:
            t_G = orders.tau_edge[orders.sigma_G[k - 1]]
    if orders.sigma_H:
        arr = np.array(orders.sigma_H, dtype=np.int64) - 1
        k = kernels.min_degree_hit(arr, n)
        if k > 0:
            t_H = orders.tau_hyperedge[orders.sigma_H[k - 1]]
    return HittingComparison(t_G, t_H, t_G is not None and t_G == t_H)


@dataclass
class ExceptionalSet:
    members: list
    t_G: float | None
    t_H: float | None
    within_S2: bool
    partners_late: bool | None  # every member's partner arrives after t_H; None unless t_G == t_H


def exceptional_set(orders: TimeOrders, G: UniformHypergraph, H: UniformHypergraph) -> ExceptionalSet:
    """E = H(t_H) minus cl(G(t_G)).

    Two facts are asserted where they are theorems of the construction:
    E lies inside S2 whenever t_G >= t_H, and when t_G = t_H every member's
    partner arrives strictly after t_H.
    """
    cmp = hitting_comparison(orders, G, H)
    if cmp.t_G is None or cmp.t_H is None:
        raise ValueError("a hitting time is undefined")
    Ht = [h for h in orders.sigma_H if orders.tau_hyperedge[h] <= cmp.t_H]
    members = [h for h in Ht if orders.clique_time(h) > cmp.t_G]
    S2 = orders.S2
    within = all(h in S2 for h in members)
    if cmp.t_G >= cmp.t_H:
        assert within, "exceptional hyperedge outside S2 although t_G >= t_H"
    late = None
    if cmp.equal:
        partner_of = {pp.v: pp.u for pp in orders.partner_pairs}
        late = all(orders.tau_hyperedge[partner_of[h]] > cmp.t_H for h in members)
        assert late, "exceptional hyperedge whose partner is already present"
    return ExceptionalSet(members, cmp.t_G, cmp.t_H, within, late)


def check_partner_inequality(orders: TimeOrders) -> bool:
    """max(tau(E(u)), tau(E(v))) <= max(tau(u), tau(v)) for every pair."""
    return all(
        max(orders.clique_time(pp.u), orders.clique_time(pp.v))
        <= max(orders.tau_hyperedge[pp.u], orders.tau_hyperedge[pp.v])
        for pp in orders.partner_pairs)


class IsolatedDiagnostic(NamedTuple):
    t_minus: float
    isolated: list
    all_low_degree: bool
    all_touch_non_partner: bool


def isolated_diagnostic(orders: TimeOrders, H: UniformHypergraph, pi_minus: float, pi_plus: float,
                        g_value: float) -> IsolatedDiagnostic:
    """Isolated vertices of the prefix of H at the lower quantile, and two checks on them.

    The quantile solves F(t) = pi_minus / pi_plus with F(y) = y^C(r, s), the law
    of tau for a hyperedge without a partner (members of S2 follow a slightly
    different law, so the prefix is exact only off S2).  The checks: every
    isolated vertex is low-degree in H, and each one lies in some hyperedge of
    H outside the partner pairs.
    """
    t_minus = (pi_minus / pi_plus) ** (1.0 / math.comb(orders.r, orders.s))
    covered = {v for h, t in orders.tau_hyperedge.items() if t <= t_minus for v in h}
    isolated = [v for v in range(1, H.n + 1) if v not in covered]
    low = set(low_degree_vertices(H, g_value))
    paired = orders.S1 | orders.S2
    free_cover = {v for h in H.edges if h not in paired for v in h}
    return IsolatedDiagnostic(t_minus, isolated, all(v in low for v in isolated),
                              all(v in free_cover for v in isolated))


def process_from_orders(n: int, arity: int, ordered, rng) -> ProcessTrace:
    """Given items first (in order), then every other potential edge uniformly."""
    ranks = [edge_rank(n, arity, e) for e in ordered]
    taken = np.zeros(math.comb(n, arity), dtype=bool)
    taken[ranks] = True
    rest = np.flatnonzero(~taken)
    return ProcessTrace(n, arity, np.concatenate([np.array(ranks, dtype=np.int64), rng.permutation(rest)]))


# ---------------------------------------------------------------------------
# the random set R


@dataclass
class RandomSetBundle:
    T_H: int
    I: list
    R_prime: set
    R: set
    F: set
    pi_I: float
    pi_R: float
    pi_h: dict
    x_h: dict
    trace: ProcessTrace  # process continued by I, then the rest

    @property
    def F_in_R(self) -> bool:
        return self.F <= self.R


def default_constants(r: int) -> tuple[float, float]:
    """(c_I, c_R) at their asymptotic values 10 r! and 10 r^4."""
    return 10.0 * math.factorial(r), 10.0 * r ** 4


def random_set_probs(n: int, r: int, g_value: float, c_I=None, c_R=None) -> tuple[float, float]:
    dI, dR = default_constants(r)
    c_I = dI if c_I is None else c_I
    c_R = dR if c_R is None else c_R
    pi_I = c_I * g_value / n ** (r - 1)
    pi_R = c_R * g_value / n
    if pi_R > 1:
        raise ValueError(f"pi_R = {pi_R:.4g} > 1 at n={n}; pass a smaller c_R (pi_R = c_R g / n)")
    if pi_I > 1:
        raise ValueError(f"pi_I = {pi_I:.4g} > 1 at n={n}; pass a smaller c_I")
    return pi_I, pi_R


def _potential_partners(h, n):
    hs = set(h)
    others = [v for v in range(1, n + 1) if v not in hs]
    r = len(h)
    for pair in combinations(h, 2):
        for extra in combinations(others, r - 2):
            yield tuple(sorted(pair + extra))


def exclusive_partners(H_T: UniformHypergraph) -> dict:
    """X_h: absent r-sets meeting h in exactly two vertices and no other
    hyperedge of H_T in two or more."""
    present = H_T.edge_set
    n = H_T.n
    by_pair: dict = {}
    for h in H_T.edges:
        for pr in combinations(h, 2):
            by_pair.setdefault(pr, []).append(h)
    out = {}
    for h in H_T.edges:
        xs = set()
        for cand in _potential_partners(h, n):
            if cand in present:
                continue
            touching = {g for pr in combinations(cand, 2) for g in by_pair.get(pr, ())}
            if touching == {h}:
                xs.add(cand)
        out[h] = xs
    return out


def _random_set_on(trace: ProcessTrace, T_H: int, k: int, g_value: float, pi_I: float, pi_R: float, rng):
    """R', R and F read off a process whose arrivals T_H+1..T_H+k form I."""
    n = trace.n
    H_T = trace.prefix(T_H)
    X = exclusive_partners(H_T)
    x_h = {h: len(xs) for h, xs in X.items()}
    pi_h = {h: 1.0 - (1.0 - pi_I) ** x for h, x in x_h.items()}
    worst = max(pi_h.values(), default=0.0)
    if worst > pi_R:
        raise PreconditionError(f"pi_h = {worst:.4g} exceeds pi_R = {pi_R:.4g}; lower c_I or raise c_R")
    I = [trace.edge(i) for i in range(T_H, T_H + k)]
    I_set = set(I)
    R_prime = {h for h, xs in X.items() if xs & I_set}
    R = set(R_prime)
    for h in H_T.edges:
        if h not in R_prime and pi_h[h] < 1.0:
            if rng.random() < (pi_R - pi_h[h]) / (1.0 - pi_h[h]):
                R.add(h)
    window = int(math.floor(g_value * n))
    nxt = [trace.edge(i) for i in range(T_H, min(len(trace), T_H + window))]
    F = set()
    for h in H_T.edges:
        hs = set(h)
        if any(len(hs & set(x)) == 2 for x in nxt):
            F.add(h)
    return RandomSetBundle(T_H, I, R_prime, R, F, pi_I, pi_R, pi_h, x_h, trace)


def build_random_set(trace_H: ProcessTrace, r: int, g_value: float, c_I=None, c_R=None, seed=0) -> RandomSetBundle:
    """R containing each hyperedge of H_{T_H} independently with probability pi_R,
    built so that hyperedges gaining a partner soon after T_H land in R.

    The process is continued past T_H by I (iid pi_I over absent hyperedges)
    in uniform order, then everything else in uniform order.
    """
    n = trace_H.n
    pi_I, pi_R = random_set_probs(n, r, g_value, c_I, c_R)
    T_H = hitting_time_min_degree(trace_H)
    if T_H < 0:
        raise ValueError("the trace never reaches minimum degree 1")
    rng = substream(seed, 0)
    prefix_ranks = trace_H.order[:T_H]
    taken = np.zeros(math.comb(n, r), dtype=bool)
    taken[prefix_ranks] = True
    absent = np.flatnonzero(~taken)
    inI = rng.random(absent.size) < pi_I
    I_ranks = rng.permutation(absent[inI])
    rest = rng.permutation(absent[~inI])
    cont = ProcessTrace(n, r, np.concatenate([prefix_ranks, I_ranks, rest]))
    return _random_set_on(cont, T_H, int(I_ranks.size), g_value, pi_I, pi_R, rng)


# ---------------------------------------------------------------------------
# thinning


class ThinResult(NamedTuple):
    trace: ProcessTrace
    t0: int
    min_degree_ok: bool
    removed: np.ndarray  # per position of the original trace


def thin_process(trace: ProcessTrace, pi_R: float, seed, T_H: int | None = None,
                 prefix_removed: np.ndarray | None = None) -> ThinResult:
    """Delete each arrival independently with probability pi_R.

    ``t0`` counts the survivors among the first T_H arrivals; ``min_degree_ok``
    says whether those survivors still cover every vertex (i.e. t0 is the
    thinned hitting time).  ``prefix_removed`` fixes the deletions among the
    first T_H arrivals instead of sampling them.
    """
    if not 0.0 <= pi_R < 1.0:
        raise ValueError("pi_R must lie in [0, 1)")
    if T_H is None:
        T_H = hitting_time_min_degree(trace)
    rng = substream(seed, 0)
    removed = rng.random(len(trace)) < pi_R
    if prefix_removed is not None:
        removed[:T_H] = np.asarray(prefix_removed, dtype=bool)
    keep = ~removed
    ok = bool(kernels.degree_ok_after_thinning(trace.edge_array(T_H) - 1, keep[:T_H], trace.n, T_H))
    t0 = int(keep[:T_H].sum())
    thinned = ProcessTrace(trace.n, trace.arity, trace.order[keep],
                           None if trace.u_values is None else trace.u_values[keep])
    return ThinResult(thinned, t0, ok, removed)


# ---------------------------------------------------------------------------
# the chain


VERDICT_FIELDS = ["seed", "n", "r", "s", "stage", "containment", "matching", "factor", "t_eq",
                  "E_size", "E_in_S2", "E_in_F", "partner_within", "F_in_R", "thin_ok",
                  "coupling_failed", "approx_steps", "iso_count", "iso_low_degree", "iso_touch_non_partner",
                  "T_G", "T_H", "runtime_couple", "runtime_orders",
                  "runtime_chain", "runtime_solve"]


def _verdict(seed, n, r, s, **kw) -> dict:
    row = {k: None for k in VERDICT_FIELDS}
    row.update(seed=seed, n=n, r=r, s=s, stage="ok")
    row.update(kw)
    return row


# exact-count budget per coupling step inside the chain; larger instances
# fall back to the local approximation (flagged per step)
CHAIN_EXACT_BUDGET = 50


def coupled_pair(n: int, r: int, s: int, seed, delta: float = 0.1, exact_budget: int = CHAIN_EXACT_BUDGET):
    """(G, H) coupled at (p_+, pi_+) by the step-by-step loop."""
    w = window_params(n, r, s, delta)
    out = riordan_couple(n, r, w.p_plus, child_seed(seed, 0), delta=delta, s=s,
                         allow_clean_cycles=(s == 2 and r == 3), exact_budget=exact_budget)
    return out, w


def partner_within(orders: TimeOrders, members, window: int, t_H: float) -> bool:
    """Each member's partner arrives within ``window`` steps after the hitting time
    (false for a member without a partner)."""
    pos = {h: i for i, h in enumerate(orders.sigma_H)}
    T = sum(1 for h in orders.sigma_H if orders.tau_hyperedge[h] <= t_H)
    partner_of = {pp.v: pp.u for pp in orders.partner_pairs}
    return all(h in partner_of and pos[partner_of[h]] + 1 - T <= window for h in members)


def _chain(n: int, r: int, s: int, seed, dummy_edges: bool, c_I=None, c_R=None,
           delta: float = 0.1, solve_budget: int = 5_000_000,
           exact_budget: int = CHAIN_EXACT_BUDGET, full: bool = True) -> dict:
    t0 = time.perf_counter()
    label = seed_label(seed)
    try:
        outcome, w = coupled_pair(n, r, s, seed, delta, exact_budget)
    except ValueError as exc:
        return _verdict(label, n, r, s, stage=f"window: {exc}")
    t1 = time.perf_counter()
    G, H = outcome.G, outcome.H
    base = dict(coupling_failed=outcome.failed, approx_steps=outcome.approximate_steps,
                runtime_couple=t1 - t0)
    try:
        orders = build_time_orders(G, H, child_seed(seed, 1), dummy_edges=dummy_edges)
    except PreconditionError as exc:
        return _verdict(label, n, r, s, stage=f"time_orders: {exc}", **base)
    t2 = time.perf_counter()
    base["runtime_orders"] = t2 - t1
    rng = substream(seed, 2)
    gtrace = process_from_orders(n, s, orders.sigma_G, rng)
    htrace = process_from_orders(n, r, orders.sigma_H, rng)
    T_G = hitting_time_clique_cover(gtrace, r)
    T_H = hitting_time_min_degree(htrace)
    cmp = hitting_comparison(orders, G, H)
    row = dict(base, T_G=T_G, T_H=T_H, t_eq=cmp.equal)
    iso = isolated_diagnostic(orders, H, w.pi_minus, w.pi_plus, w.g_value)
    row.update(iso_count=len(iso.isolated), iso_low_degree=iso.all_low_degree,
               iso_touch_non_partner=iso.all_touch_non_partner)
    E = []
    if cmp.t_G is not None and cmp.t_H is not None:
        ex = exceptional_set(orders, G, H)
        E = ex.members
        row.update(E_size=len(E), E_in_S2=ex.within_S2,
                   partner_within=partner_within(orders, E, int(math.floor(w.g_value * n)), cmp.t_H))
    else:
        row.update(stage="hitting_undefined")
    if not full:
        row.update(runtime_chain=time.perf_counter() - t2)
        return _verdict(label, n, r, s, **row)
    H_T = htrace.prefix(T_H)
    G_T = gtrace.prefix(T_G)

    if dummy_edges:
        try:
            pi_I, pi_R = random_set_probs(n, r, w.g_value, c_I, c_R)
            # a uniform continuation is distributed as "I first, then the rest" with
            # |I| ~ Bin(remaining, pi_I) independent of the order
            k = int(rng.binomial(len(htrace) - T_H, pi_I))
            bundle = _random_set_on(htrace, T_H, k, w.g_value, pi_I, pi_R, rng)
        except (ValueError, PreconditionError) as exc:
            row.update(stage=f"random_set: {exc}")
            return _verdict(label, n, r, s, **row)
        row.update(F_in_R=bundle.F_in_R, E_in_F=set(E) <= bundle.F)
        removed_prefix = np.array([htrace.edge(i) in bundle.R for i in range(T_H)], dtype=bool)
        # fresh continuation for the thinned process, glued through (H_{T_H}, R)
        fresh = ProcessTrace(n, r, np.concatenate([htrace.order[:T_H], substream(seed, 3).permutation(htrace.order[T_H:])]))
        thin = thin_process(fresh, pi_R, child_seed(seed, 4), T_H=T_H, prefix_removed=removed_prefix)
        row.update(thin_ok=thin.min_degree_ok)
        T_thin = hitting_time_min_degree(thin.trace)
        H_final = thin.trace.prefix(T_thin) if T_thin > 0 else thin.trace.prefix(thin.t0)
    else:
        H_final = H_T
    t3 = time.perf_counter()
    clg = cliques(G_T, r).edge_set
    row["containment"] = all(h in clg for h in H_final.edges)
    try:
        row["matching"] = perfect_matching(H_final, solve_budget) is not None if n % r == 0 else None
        row["factor"] = clique_factor(G_T, r, solve_budget) is not None if n % r == 0 else None
    except BudgetExceeded:
        row["stage"] = "solver_budget"
    t4 = time.perf_counter()
    row.update(runtime_chain=t3 - t2, runtime_solve=t4 - t3)
    return _verdict(label, n, r, s, **row)


def chain_coupling(n: int, r: int, seed, c_I=None, c_R=None, delta: float = 0.1,
                   exact_budget: int = CHAIN_EXACT_BUDGET) -> dict:
    """One run of the full chain for graphs; returns a verdict row (see VERDICT_FIELDS).

    Rejections at any stage are reported in ``stage`` rather than raised.
    """
    return _chain(n, r, 2, seed, True, c_I, c_R, delta, exact_budget=exact_budget)


def hitting_trial(n: int, r: int, seed, s: int = 2, delta: float = 0.1,
                  exact_budget: int = CHAIN_EXACT_BUDGET) -> dict:
    """The chain up to the exceptional set: coupling, time orders, t_G vs t_H."""
    return _chain(n, r, s, seed, s == 2, delta=delta, exact_budget=exact_budget, full=False)
