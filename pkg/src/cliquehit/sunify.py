"""s-uniform clique factors: the chain without dummy edges, and the two counting bounds it relies on."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .timecoupling import CHAIN_EXACT_BUDGET, _chain


def suniform_chain(n: int, r: int, s: int, seed, dummy_edges: bool = False, c_I=None, c_R=None,
                   delta: float = 0.1, exact_budget: int = CHAIN_EXACT_BUDGET) -> dict:
    """One run of the chain with G an s-uniform hypergraph.

    For s >= 3 no dummy edges are used, so S2 is empty and the exceptional set
    must be empty whenever t_G >= t_H (asserted inside the exceptional-set
    step; overlapping hyperedges are rejected by the time-order step).  With
    s = 2 and ``dummy_edges=True`` this is exactly :func:`chain_coupling`.
    """
    if not r > s >= 2:
        raise ValueError("need r > s >= 2")
    if dummy_edges and s != 2:
        raise ValueError("dummy edges are only defined for graphs (s = 2)")
    return _chain(n, r, s, seed, dummy_edges, c_I, c_R, delta, exact_budget=exact_budget)


def compositions(total: int, parts: int, lo: int, hi: int):
    """Ordered tuples of ``parts`` integers in [lo, hi] summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(lo, min(hi, total - lo * (parts - 1)) + 1):
        for rest in compositions(total - first, parts - 1, lo, hi):
            yield (first,) + rest


@dataclass(frozen=True)
class PartitionRow:
    r: int
    s: int
    t: int
    max_lhs: Fraction
    rhs: Fraction
    passed: bool
    argmax: tuple

    def as_dict(self) -> dict:
        return {"r": self.r, "s": self.s, "t": self.t, "maxLHS": int(self.max_lhs),
                "RHS": int(self.rhs), "pass": self.passed}


def verify_partition_bound(r: int, s: int) -> list[PartitionRow]:
    """Exhaustively check sum_i C(c_i, s) <= C(r-t+1, s).

    For each t in 2..r-s+1 the maximum of the left side over all compositions
    (c_1..c_t) of r with parts in 1..r-t+1 is compared with the right side.
    """
    if not r > s >= 2:
        raise ValueError("need r > s >= 2")
    rows = []
    for t in range(2, r - s + 2):
        best, arg = None, None
        for comp in compositions(r, t, 1, r - t + 1):
            v = Fraction(sum(math.comb(c, s) for c in comp))
            if best is None or v > best:
                best, arg = v, comp
        rhs = Fraction(math.comb(r - t + 1, s))
        rows.append(PartitionRow(r, s, t, best, rhs, best <= rhs, arg))
    return rows


def w_function(t, r: int, s: int):
    """w(t) = t - r + (r-1) C(r-t+1, s) / C(r, s), vectorised over t.

    C(x, s) for real x is the falling-factorial product x(x-1)...(x-s+1)/s!.
    """
    t = np.asarray(t, dtype=np.float64)
    x = r - t + 1
    fb = np.ones_like(t)
    for i in range(s):
        fb = fb * (x - i) / (i + 1)
    return t - r + (r - 1) * fb / math.comb(r, s)


@dataclass(frozen=True)
class WReport:
    r: int
    s: int
    grid_points: int
    w_at_2: float
    w_at_2_expected: float
    w_at_end: float
    w_at_end_expected: float
    convex: bool
    ends_ordered: bool
    max_at_2: bool
    all_negative: bool
    degenerate: bool

    def as_dict(self) -> dict:
        return dict(asdict(self), passed=self.passed)

    @property
    def passed(self) -> bool:
        return (math.isclose(self.w_at_2, self.w_at_2_expected, rel_tol=1e-12, abs_tol=1e-12)
                and math.isclose(self.w_at_end, self.w_at_end_expected, rel_tol=1e-12, abs_tol=1e-12)
                and self.convex and self.ends_ordered and self.max_at_2 and self.all_negative)


def verify_w_function(r: int, s: int, grid_points: int = 100) -> WReport:
    """Evaluate w on a grid of [2, r-s+1] and check the endpoint values,
    strict convexity (second differences > 0), the maximum at t = 2, and negativity.

    When r - s + 1 = 2 the grid is the single point t = 2.
    """
    if not r > s >= 3:
        raise ValueError("need r > s >= 3")
    if grid_points < 100:
        raise ValueError("use at least 100 grid points")
    hi = r - s + 1
    degenerate = hi == 2
    grid = np.array([2.0]) if degenerate else np.linspace(2.0, hi, grid_points)
    vals = w_function(grid, r, s)
    tol = 1e-12 * max(1.0, float(np.abs(vals).max()))
    d2 = np.diff(vals, 2)
    convex = bool(np.all(d2 > 0)) if d2.size else True
    w2 = float(w_function(2.0, r, s))
    wend = float(w_function(float(hi), r, s))
    return WReport(
        r, s, int(grid.size), w2, 1 - s + s / r, wend, 1 - s + (r - 1) / math.comb(r, s),
        convex, w2 >= wend, bool(vals.max() <= w2 + tol), bool(np.all(vals < 0)), degenerate)


def verify_all(r_max: int = 10, grid_points: int = 100) -> dict:
    """Both bounds for every 3 <= s < r <= r_max; returns rows, reports and the elapsed time."""
    t0 = time.perf_counter()
    parts, ws = [], []
    for r in range(4, r_max + 1):
        for s in range(3, r):
            parts.extend(verify_partition_bound(r, s))
            ws.append(verify_w_function(r, s, grid_points))
    return {"partition": parts, "w": ws, "seconds": time.perf_counter() - t0,
            "passed": all(p.passed for p in parts) and all(w.passed for w in ws)}
