"""Random processes via the standard coupling, hitting times, and the critical window."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import kernels
from .hypercore import UniformHypergraph


def g_default(n: int) -> float:
    """max(1, ln ln max(n, 16)): grows without bound but slower than ln n / ln ln n."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return max(1.0, math.log(math.log(max(n, 16))))


@dataclass(frozen=True)
class WindowParams:
    n: int
    r: int
    s: int
    delta: float
    g_value: float
    pi_minus: float
    pi_plus: float
    p_minus: float
    p_plus: float

    def report(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.__dict__.items())


def window_params(n: int, r: int, s: int = 2, delta: float = 0.1, g=g_default) -> WindowParams:
    """Critical window for isolated vertices in H(n, pi) and the matching p for s-sets."""
    if not n > r > s >= 2:
        raise ValueError(f"need n > r > s >= 2, got n={n} r={r} s={s}")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    gv = float(g(n)) if callable(g) else float(g)
    ln = math.log(n)
    if ln <= gv:
        raise ValueError(f"ln n = {ln:.4f} does not exceed g = {gv:.4f}")
    deg = math.comb(n - 1, r - 1)
    pim, pip = (ln - gv) / deg, (ln + gv) / deg
    scale = 1.0 - n ** (-delta)
    expo = 1.0 / math.comb(r, s)
    pm, pp = (pim / scale) ** expo, (pip / scale) ** expo
    if pip > 1 or pp > 1:
        raise ValueError(f"n={n} is too small for r={r}: pi_+={pip:.4g}, p_+={pp:.4g}")
    return WindowParams(n, r, s, delta, gv, pim, pip, pm, pp)


def chernoff_bounds(n: int, p: float, t: float) -> tuple[float, float]:
    """(upper, lower) tail bounds for X ~ Bin(n, p) deviating by t from np."""
    mu = n * p
    if t < 0 or t > max(mu, n - mu) + 1e-12:
        raise ValueError(f"t={t} outside [0, max(np, n-np)]")
    if t == 0:
        return 1.0, 1.0
    upper = math.exp(-t * t / (2 * (mu + t / 3))) if t <= n - mu + 1e-12 else 0.0
    lower = math.exp(-t * t / (2 * mu)) if mu > 0 and t <= mu + 1e-12 else 0.0
    return upper, lower


@lru_cache(maxsize=64)
def _potential_edges(n: int, k: int) -> np.ndarray:
    arr = np.array(list(combinations(range(1, n + 1), k)), dtype=np.int64).reshape(-1, k)
    arr.setflags(write=False)
    return arr


def potential_edges(n: int, k: int) -> np.ndarray:
    """All k-subsets of 1..n, one per row, lexicographic."""
    return _potential_edges(n, k)


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(index)])


def seed_label(seed) -> str:
    """Compact printable form of a seed: "a:b" for SeedSequence([a, b]), plus spawn keys."""
    if isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        base = ":".join(map(str, ent)) if isinstance(ent, (list, tuple, np.ndarray)) else str(ent)
        return base + "".join(f"/{k}" for k in seed.spawn_key)
    if isinstance(seed, (list, tuple)):
        return ":".join(map(str, seed))
    return str(seed)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (list, tuple)):
        return np.random.SeedSequence([int(x) for x in seed])
    return np.random.SeedSequence(int(seed))


def child_seed(seed, k: int) -> np.random.SeedSequence:
    """Child number ``k`` of ``seed``, derived without mutating it."""
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (k,))


def substream(seed, k: int) -> np.random.Generator:
    """Independent generator number ``k`` derived from ``seed``."""
    return np.random.default_rng(child_seed(seed, k))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class ProcessTrace:
    """An ordering of potential edges.

    ``order`` holds lexicographic ranks into ``potential_edges(n, arity)``;
    ``u_values[i]`` is the uniform mark of ``order[i]`` when present.
    """
    n: int
    arity: int
    order: np.ndarray
    u_values: np.ndarray | None = None
    seed: object = None

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        total = math.comb(self.n, self.arity)
        if order.size and (order.min() < 0 or order.max() >= total):
            raise ValueError("edge rank out of range")
        if np.unique(order).size != order.size:
            raise ValueError("order repeats an edge")
        object.__setattr__(self, "order", order)
        if self.u_values is not None:
            u = np.asarray(self.u_values, dtype=np.float64)
            if u.shape != order.shape or np.any(np.diff(u) < 0):
                raise ValueError("u_values must align with order and ascend")
            object.__setattr__(self, "u_values", u)

    def __len__(self):
        return int(self.order.size)

    @property
    def complete(self) -> bool:
        return self.order.size == math.comb(self.n, self.arity)

    def edge_array(self, t: int | None = None) -> np.ndarray:
        """Rows of 1-based vertices for the first t arrivals."""
        sel = self.order if t is None else self.order[:t]
        return potential_edges(self.n, self.arity)[sel]

    def edge(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in potential_edges(self.n, self.arity)[self.order[i]])

    def prefix(self, t: int) -> UniformHypergraph:
        return UniformHypergraph(self.n, self.arity, tuple(map(tuple, self.edge_array(t).tolist())))

    def count_at(self, pi: float) -> int:
        if self.u_values is None:
            raise ValueError("trace has no marks")
        return int(np.searchsorted(self.u_values, pi, side="right"))

    def prefix_at(self, pi: float) -> UniformHypergraph:
        """H_pi = {h : U_h <= pi}."""
        return self.prefix(self.count_at(pi))

    def to_json(self) -> str:
        seed = self.seed
        if isinstance(seed, np.random.SeedSequence):
            seed = {"entropy": seed.entropy if isinstance(seed.entropy, int) else list(seed.entropy)}
        return json.dumps({
            "n": self.n, "arity": self.arity, "seed": seed,
            "order": self.edge_array().tolist(),
            "u_values": None if self.u_values is None else self.u_values.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ProcessTrace":
        d = json.loads(text)
        n, k = int(d["n"]), int(d["arity"])
        ranks = [edge_rank(n, k, e) for e in d["order"]]
        return cls(n, k, np.array(ranks, dtype=np.int64), d.get("u_values"), d.get("seed"))


def edge_rank(n: int, k: int, edge) -> int:
    """Lexicographic rank of a k-subset of 1..n."""
    e = sorted(int(v) for v in edge)
    rank, prev = 0, 0
    for i, v in enumerate(e):
        for w in range(prev + 1, v):
            rank += math.comb(n - w, k - i - 1)
        prev = v
    return rank


def marks_to_order(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending order of 64-bit marks, ties by rank; returns (order, u in [0,1))."""
    order = np.argsort(bits, kind="stable")
    u = (bits[order] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return order.astype(np.int64), u


def standard_process(n: int, arity: int, seed) -> ProcessTrace:
    """Independent 64-bit uniform marks on all potential edges, sorted ascending."""
    if n < arity:
        raise ValueError("n must be at least the arity")
    rng = make_rng(seed)
    bits = rng.integers(0, np.iinfo(np.uint64).max, size=math.comb(n, arity), dtype=np.uint64, endpoint=True)
    order, u = marks_to_order(bits)
    return ProcessTrace(n, arity, order, u, seed)


def hitting_time_min_degree(trace: ProcessTrace) -> int:
    """Smallest t such that the first t edges cover every vertex (-1 if never)."""
    return int(kernels.min_degree_hit(trace.edge_array() - 1, trace.n))


def hitting_time_clique_cover(trace: ProcessTrace, r: int) -> int:
    """Smallest t such that every vertex lies in an r-clique of the first t edges (-1 if never)."""
    if r <= trace.arity:
        raise ValueError("r must exceed the trace arity")
    return int(kernels.clique_cover_hit(trace.edge_array() - 1, trace.n, r))
