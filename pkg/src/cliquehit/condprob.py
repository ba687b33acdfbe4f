"""Conditional clique probabilities over independent edge indicators.

Every conditioning used by the couplings has the same shape: some edges are
known present, and some edge sets are known not to be fully present (a clique
that was answered "no", or a forbidden pattern).  Such a set is a *clause*;
the quantity of interest is

    P(all edges of T present | forced edges present, no clause fully present)

which equals ``p^|T \\ F| * Z(F + T) / Z(F)`` where ``Z(F)`` is the probability
that no clause is completed once the edges ``F`` are fixed present.  Clauses
that share no variable with ``T`` (even transitively) cancel from the ratio,
so only the clause component around ``T`` is ever counted.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .procgen import edge_rank

logger = logging.getLogger(__name__)

DEFAULT_CAP = 26
# brute force is used up to this many variables in "auto" mode
ENUM_LIMIT = 16


class TooLarge(RuntimeError):
    """More free variables than the exact engine's cap."""


class NoAcceptances(RuntimeError):
    """Rejection sampling accepted no sample."""


class InconsistentConditioning(ValueError):
    """The conditioning event has probability zero."""


# ---------------------------------------------------------------------------
# weighted model counting over monotone "not all present" clauses


def _reduce(clauses: Iterable[int], forced: int) -> list[int] | None:
    """Strip forced bits; None if some clause becomes fully forced."""
    out = set()
    for c in clauses:
        c &= ~forced
        if c == 0:
            return None
        out.add(c)
    # a clause containing another clause is implied by it
    ordered = sorted(out, key=lambda c: bin(c).count("1"))
    kept: list[int] = []
    for c in ordered:
        if not any(k & c == k for k in kept):
            kept.append(c)
    return kept


def _split(clauses: list[int]) -> list[list[int]]:
    groups: list[tuple[int, list[int]]] = []
    for c in clauses:
        hit = [g for g in groups if g[0] & c]
        if not hit:
            groups.append((c, [c]))
            continue
        mask, members = c, [c]
        for g in hit:
            mask |= g[0]
            members.extend(g[1])
            groups.remove(g)
        groups.append((mask, members))
    return [g[1] for g in groups]


class _Counter:
    MEMO_LIMIT = 200_000  # entries kept before the memo is dropped

    def __init__(self, p: float, budget: int):
        self.p = p
        self.q = 1.0 - p
        self.memo: dict[frozenset, float] = {}
        self.budget = budget
        self.nodes = 0

    def count(self, clauses: list[int]) -> float:
        if not clauses:
            return 1.0
        if len(clauses) == 1:
            return 1.0 - self.p ** bin(clauses[0]).count("1")
        key = frozenset(clauses)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.nodes += 1
        if self.nodes > self.budget:
            raise TooLarge(f"model counter exceeded {self.budget} nodes")
        parts = _split(clauses)
        if len(parts) > 1:
            val = 1.0
            for part in parts:
                val *= self.count(part)
                if val == 0.0:
                    break
        else:
            # branch on the most frequent variable
            freq: dict[int, int] = {}
            for c in clauses:
                x = c
                while x:
                    low = x & -x
                    freq[low] = freq.get(low, 0) + 1
                    x ^= low
            bit = max(freq, key=lambda b: (freq[b], -b))
            absent = [c for c in clauses if not c & bit]
            val = self.q * self.count(absent)
            present = _reduce(clauses, bit)
            if present is not None:
                val += self.p * self.count(present)
        if len(self.memo) >= self.MEMO_LIMIT:
            self.memo.clear()
        self.memo[key] = val
        return val


def prob_no_clause(clauses: Iterable[int], p: float, forced: int = 0, budget: int = 2_000_000) -> float:
    """P(no clause has all its variables present), variables iid Bernoulli(p),
    with the variables in ``forced`` fixed present."""
    red = _reduce(clauses, forced)
    if red is None:
        return 0.0
    return _Counter(p, budget).count(red)


def _compact(clauses: list[int], extra: int = 0) -> tuple[list[int], int, int]:
    """Renumber the variables used by ``clauses`` and ``extra`` to 0..k-1."""
    used = extra
    for c in clauses:
        used |= c
    bits = []
    x = used
    while x:
        low = x & -x
        bits.append(low)
        x ^= low
    pos = {b: i for i, b in enumerate(bits)}

    def remap(c):
        out, y = 0, c
        while y:
            low = y & -y
            out |= 1 << pos[low]
            y ^= low
        return out

    return [remap(c) for c in clauses], remap(extra), len(bits)


def enumerate_no_clause(clauses: list[int], p: float, forced: int = 0) -> float:
    """Brute-force counterpart of :func:`prob_no_clause` (for up to ~26 variables)."""
    red = _reduce(clauses, forced)
    if red is None:
        return 0.0
    if not red:
        return 1.0
    comp, _, k = _compact(red)
    if k > 62:
        raise TooLarge(f"{k} variables is beyond brute force")
    return float(kernels.wmc_enumerate(np.array(comp, dtype=np.int64), k, p))


def component_around(clauses: list[int], target: int) -> tuple[list[int], int]:
    """Clauses transitively sharing variables with ``target``; also their variable mask."""
    mask = target
    picked = [False] * len(clauses)
    grew = True
    while grew:
        grew = False
        for i, c in enumerate(clauses):
            if not picked[i] and c & mask:
                picked[i] = True
                mask |= c
                grew = True
    return [c for c, k in zip(clauses, picked) if k], mask


def conditional_all_present(clauses: list[int], forced: int, target: int, p: float,
                            engine: str = "auto", cap: int | None = None,
                            budget: int = 2_000_000, counter: "_Counter | None" = None) -> tuple[float, int]:
    """P(target vars all present | forced present, no clause complete).

    Returns ``(probability, number of free variables counted)``.  A shared
    ``counter`` (same p) reuses memoised sub-counts across calls.
    """
    red = _reduce(clauses, forced)
    if red is None:
        raise InconsistentConditioning("a clause is fully forced")
    t_free = target & ~forced
    if t_free == 0:
        return 1.0, 0
    comp, mask = component_around(red, t_free)
    k = bin(mask).count("1")
    if cap is not None and k > cap:
        raise TooLarge(f"{k} free edge variables exceed the cap of {cap}")
    base = p ** bin(t_free).count("1")
    if not comp:
        return base, k
    use_enum = engine == "enumerate" or (engine == "auto" and k <= ENUM_LIMIT)
    if use_enum:
        z0 = enumerate_no_clause(comp, p)
        z1 = enumerate_no_clause(comp, p, t_free)
    else:
        if counter is None:
            counter = _Counter(p, budget)
        else:
            counter.nodes = 0
            counter.budget = budget
        z0 = counter.count(comp)
        r1 = _reduce(comp, t_free)
        z1 = 0.0 if r1 is None else counter.count(r1)
    if z0 <= 0.0:
        raise InconsistentConditioning("conditioning has probability zero")
    return base * z1 / z0, k


# ---------------------------------------------------------------------------
# clique conditionings


def _edges_of(vertex_set, s: int):
    return combinations(sorted(vertex_set), s)


@dataclass(frozen=True)
class CliqueConditioning:
    """Clique events on ``G`` with iid edges of arity ``s`` (graphs: s = 2).

    ``positives``: r-sets known to span cliques.  ``negatives``: r-sets known
    not to.  ``forced_edges``: extra edges known present.
    ``forbidden_patterns``: edge sets known not to be fully present.
    """
    n: int
    p: float
    positives: frozenset = frozenset()
    negatives: frozenset = frozenset()
    forced_edges: frozenset = frozenset()
    forbidden_patterns: tuple = ()
    s: int = 2
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        norm = lambda fam: frozenset(tuple(sorted(x)) for x in fam)
        object.__setattr__(self, "positives", norm(self.positives))
        object.__setattr__(self, "negatives", norm(self.negatives))
        object.__setattr__(self, "forced_edges", norm(self.forced_edges))
        object.__setattr__(self, "forbidden_patterns", tuple(norm(f) for f in self.forbidden_patterns))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be a probability")
        if self.positives & self.negatives:
            raise InconsistentConditioning("an r-set is both positive and negative")
        if self.p == 0.0 and (self.positives or self.forced_edges):
            raise InconsistentConditioning("edges forced present at p = 0")
        if self.p == 1.0 and self.clauses():
            raise InconsistentConditioning("a clause is forbidden at p = 1")
        if _reduce(self.clauses(), self.forced_mask()) is None:
            raise InconsistentConditioning("some forbidden set is entirely forced present")

    def var(self, edge) -> int:
        e = tuple(sorted(edge))
        if len(e) != self.s or e[0] < 1 or e[-1] > self.n:
            raise ValueError(f"{edge!r} is not an edge of arity {self.s} on 1..{self.n}")
        idx = self._index.get(e)
        if idx is None:
            idx = self._index[e] = edge_rank(self.n, self.s, e)
        return idx

    def mask_of(self, edges) -> int:
        m = 0
        for e in edges:
            m |= 1 << self.var(e)
        return m

    def clique_mask(self, rset) -> int:
        return self.mask_of(_edges_of(rset, self.s))

    def forced_mask(self) -> int:
        m = self.mask_of(self.forced_edges)
        for h in self.positives:
            m |= self.clique_mask(h)
        return m

    def clauses(self) -> list[int]:
        out = [self.clique_mask(h) for h in sorted(self.negatives)]
        out.extend(self.mask_of(f) for f in self.forbidden_patterns)
        return out

    def free_touched(self, target) -> int:
        """Free edge variables in the clause component around ``target``."""
        red = _reduce(self.clauses(), self.forced_mask()) or []
        t_free = self.clique_mask(target) & ~self.forced_mask()
        return bin(component_around(red, t_free)[1]).count("1") if t_free else 0


def exact_conditional_prob(cond: CliqueConditioning, target, cap: int = DEFAULT_CAP, engine: str = "auto") -> float:
    """P(target spans a clique | cond), exactly.

    Only free edges in the clause component connected to the target's free
    edges are summed over; raises :class:`TooLarge` when they exceed ``cap``.
    ``engine`` is ``"enumerate"`` (brute force), ``"dpll"`` (branching model
    counter with component splitting) or ``"auto"``.
    """
    tgt = cond.clique_mask(target)
    val, _ = conditional_all_present(cond.clauses(), cond.forced_mask(), tgt, cond.p, engine=engine, cap=cap)
    return val


def mc_conditional_prob(cond: CliqueConditioning, target, trials: int, seed) -> tuple[float, float]:
    """Rejection-sampling estimate with a 95% normal half-width."""
    if trials < 1:
        raise ValueError("trials must be positive")
    forced = cond.forced_mask()
    red = _reduce(cond.clauses(), forced)
    if red is None:
        raise InconsistentConditioning("a clause is fully forced")
    t_free = cond.clique_mask(target) & ~forced
    if t_free == 0:
        return 1.0, 0.0
    comp, mask = component_around(red, t_free)
    comp_c, t_c, k = _compact(comp, t_free)
    rng = np.random.default_rng(seed)
    acc = hits = 0
    done = 0
    clause_cols = [np.array([i for i in range(k) if c >> i & 1]) for c in comp_c]
    t_cols = np.array([i for i in range(k) if t_c >> i & 1])
    while done < trials:
        m = min(trials - done, 200_000)
        x = rng.random((m, k)) < cond.p
        ok = np.ones(m, dtype=bool)
        for cols in clause_cols:
            ok &= ~x[:, cols].all(axis=1)
        acc += int(ok.sum())
        hits += int((ok & x[:, t_cols].all(axis=1)).sum())
        done += m
    if acc == 0:
        raise NoAcceptances(f"no sample out of {trials} satisfied the conditioning")
    est = hits / acc
    return est, 1.96 * math.sqrt(est * (1 - est) / acc)


@dataclass(frozen=True)
class HarrisReport:
    p_ab: float
    p_a: float
    p_b: float
    gap: float
    half_width: float
    same_direction: bool

    @property
    def consistent(self) -> bool:
        """The gap has the predicted sign up to 3 half-widths."""
        if self.same_direction:
            return self.gap >= -3 * self.half_width
        return self.gap <= 3 * self.half_width


def harris_check(n_vars: int, probs, event_a: Callable, event_b: Callable, trials: int, seed,
                 same_direction: bool = True) -> HarrisReport:
    """Monte Carlo look at P(A and B) - P(A) P(B) for monotone events.

    The oracles map a boolean sample matrix (trials x n_vars) to a boolean
    vector.  ``same_direction`` says both are up-sets (or both down-sets), in
    which case the gap should be >= 0; otherwise it should be <= 0.
    """
    probs = np.broadcast_to(np.asarray(probs, dtype=float), (n_vars,))
    rng = np.random.default_rng(seed)
    x = rng.random((trials, n_vars)) < probs
    a = np.asarray(event_a(x), dtype=float)
    b = np.asarray(event_b(x), dtype=float)
    pa, pb, pab = a.mean(), b.mean(), (a * b).mean()
    # gap is the sample covariance; its standard error from the centred products
    cov_terms = (a - pa) * (b - pb)
    hw = 1.96 * cov_terms.std(ddof=1) / math.sqrt(trials) if trials > 1 else float("inf")
    return HarrisReport(pab, pa, pb, pab - pa * pb, hw, same_direction)
