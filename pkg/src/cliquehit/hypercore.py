"""Uniform hypergraphs and the structural detectors used by the bad events.

Vertices are the integers ``1..n``.  An edge is a strictly increasing tuple of
``arity`` vertices, and a hypergraph keeps its edges in lexicographic order so
that every derived quantity is reproducible.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

Edge = tuple[int, ...]


@dataclass(frozen=True)
class UniformHypergraph:
    n: int
    arity: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        if self.arity < 2:
            raise ValueError(f"arity must be at least 2, got {self.arity}")
        canon = []
        for e in self.edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != self.arity or len(set(t)) != self.arity:
                raise ValueError(f"edge {e!r} does not have {self.arity} distinct vertices")
            if t[0] < 1 or t[-1] > self.n:
                raise ValueError(f"edge {e!r} has a vertex outside 1..{self.n}")
            canon.append(t)
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a!r}")
        object.__setattr__(self, "edges", tuple(canon))

    @classmethod
    def from_edges(cls, n: int, arity: int, edges: Iterable[Sequence[int]]) -> "UniformHypergraph":
        """Build from any iterable of edges, silently dropping repeats."""
        return cls(n, arity, tuple({tuple(sorted(e)) for e in edges}))

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    def __contains__(self, edge) -> bool:
        return tuple(sorted(edge)) in self.edge_set

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def masks(self) -> tuple[int, ...]:
        # bit v set iff vertex v is in the edge
        return tuple(sum(1 << v for v in e) for e in self.edges)

    def degrees(self) -> np.ndarray:
        """Degree array; entry ``i`` is the degree of vertex ``i + 1``."""
        d = np.zeros(self.n, dtype=np.int64)
        for e in self.edges:
            for v in e:
                d[v - 1] += 1
        return d

    def incidence(self) -> dict[int, list[int]]:
        """Vertex -> indices of incident edges."""
        inc = defaultdict(list)
        for i, e in enumerate(self.edges):
            for v in e:
                inc[v].append(i)
        return inc

    def covered_vertices(self) -> set[int]:
        return {v for e in self.edges for v in e}

    def sub(self, edges: Iterable[Sequence[int]]) -> "UniformHypergraph":
        return UniformHypergraph.from_edges(self.n, self.arity, edges)

    def union(self, other: "UniformHypergraph") -> "UniformHypergraph":
        if (other.n, other.arity) != (self.n, self.arity):
            raise ValueError("hypergraphs differ in n or arity")
        return UniformHypergraph.from_edges(self.n, self.arity, self.edge_set | other.edge_set)

    def difference(self, other: Iterable[Sequence[int]]) -> "UniformHypergraph":
        drop = {tuple(sorted(e)) for e in other}
        return UniformHypergraph(self.n, self.arity, tuple(e for e in self.edges if e not in drop))

    # serialization

    def to_text(self) -> str:
        lines = [f"{self.n} {self.arity}"]
        lines.extend(" ".join(map(str, e)) for e in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "UniformHypergraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) != 2:
            raise ValueError("missing 'n k' header")
        n, k = int(rows[0][0]), int(rows[0][1])
        return cls(n, k, tuple(tuple(int(x) for x in r) for r in rows[1:]))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "arity": self.arity, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text: str) -> "UniformHypergraph":
        d = json.loads(text)
        return cls(int(d["n"]), int(d["arity"]), tuple(tuple(e) for e in d["edges"]))


@dataclass(frozen=True)
class BadEventFlags:
    b1: bool
    b2: bool
    b3: bool
    b4: bool
    b5: bool
    # keyed "b1".."b5"; present exactly for the flags that are true
    witness: dict = field(default_factory=dict)

    @property
    def any(self) -> bool:
        return self.b1 or self.b2 or self.b3 or self.b4 or self.b5

    def as_dict(self) -> dict:
        return {"b1": self.b1, "b2": self.b2, "b3": self.b3, "b4": self.b4, "b5": self.b5}


# ---------------------------------------------------------------------------
# connectivity and nullity


def _components(edges: Sequence[Edge]) -> list[list[Edge]]:
    parent: dict[int, int] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        for v in e:
            parent.setdefault(v, v)
        root = find(e[0])
        for v in e[1:]:
            rv = find(v)
            if rv != root:
                parent[rv] = root
    groups: dict[int, list[Edge]] = defaultdict(list)
    for e in edges:
        groups[find(e[0])].append(e)
    return sorted(groups.values())


def edge_nullity(edges: Sequence[Edge], arity: int) -> int:
    """Nullity of a bare edge collection (covered vertices only)."""
    if not edges:
        return 0
    v = len({x for e in edges for x in e})
    c = len(_components(edges))
    return (arity - 1) * len(edges) + c - v


def nullity(H: UniformHypergraph) -> int:
    """``(k-1) e(H) + c(H) - v(H)`` where v and c see only covered vertices.

    The empty hypergraph has nullity 0.
    """
    return edge_nullity(H.edges, H.arity)


def is_connected(edges: Sequence[Edge]) -> bool:
    return len(edges) > 0 and len(_components(edges)) == 1


# ---------------------------------------------------------------------------
# avoidable configurations


def _strip_leaves(edges: Sequence[Edge]) -> list[Edge]:
    """Drop edges sharing at most one vertex with the rest, until none remain.

    A smallest connected edge set of nullity >= 2 never contains such an edge:
    removing it keeps the set connected and changes the nullity by zero.
    """
    alive = list(edges)
    changed = True
    while changed:
        changed = False
        count: dict[int, int] = defaultdict(int)
        for e in alive:
            for v in e:
                count[v] += 1
        keep = []
        for e in alive:
            if sum(1 for v in e if count[v] > 1) <= 1:
                changed = True
            else:
                keep.append(e)
        alive = keep
    return alive


def _connected_subsets(adj: list[set[int]], k: int) -> Iterator[tuple[int, ...]]:
    # ESU enumeration: every connected k-subset exactly once
    m = len(adj)

    def extend(sub, closed, ext, root):
        if len(sub) == k:
            yield tuple(sub)
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            fresh = [u for u in adj[w] if u > root and u not in closed]
            yield from extend(sub + [w], closed | adj[w] | {w}, ext + fresh, root)

    for v in range(m):
        nbrs = [u for u in adj[v] if u > v]
        yield from extend([v], adj[v] | {v}, nbrs, v)


def find_avoidable_configuration(H: UniformHypergraph, max_edges: int | None = None) -> UniformHypergraph | None:
    """A connected sub-hypergraph of nullity >= 2 on at most ``max_edges`` edges.

    ``max_edges`` defaults to ``2 ** (arity + 1)``.  The search first peels
    leaf edges, skips components whose total nullity is below 2 (nullity can
    only grow as a connected set absorbs neighbours), and then enumerates
    connected subsets by increasing size, so the witness returned is a smallest
    one.  Worst case is exponential in ``max_edges``; after peeling, sparse
    inputs leave only a handful of short cycles to explore.
    """
    if H.arity < 3:
        raise ValueError("avoidable configurations are defined for arity >= 3")
    cap = 2 ** (H.arity + 1) if max_edges is None else max_edges
    core = _strip_leaves(H.edges)
    comps = [c for c in _components(core) if edge_nullity(c, H.arity) >= 2]
    if not comps:
        return None
    for size in range(2, cap + 1):
        for comp in comps:
            if len(comp) < size:
                continue
            adj = [set() for _ in comp]
            masks = [sum(1 << v for v in e) for e in comp]
            for i, j in combinations(range(len(comp)), 2):
                if masks[i] & masks[j]:
                    adj[i].add(j)
                    adj[j].add(i)
            for idx in _connected_subsets(adj, size):
                chosen = [comp[i] for i in idx]
                if edge_nullity(chosen, H.arity) >= 2:
                    return H.sub(chosen)
    return None


# ---------------------------------------------------------------------------
# local structures


def partner_pairs(H: UniformHypergraph) -> list[tuple[Edge, Edge]]:
    """All unordered pairs of edges meeting in exactly two vertices."""
    if H.arity < 3:
        raise ValueError("partner pairs need arity >= 3")
    by_pair: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, e in enumerate(H.edges):
        for pr in combinations(e, 2):
            by_pair[pr].append(i)
    found = set()
    for idx in by_pair.values():
        for i, j in combinations(idx, 2):
            if len(set(H.edges[i]) & set(H.edges[j])) == 2:
                found.add((i, j))
    return [(H.edges[i], H.edges[j]) for i, j in sorted(found)]


def clean_three_cycles(H: UniformHypergraph) -> list[tuple[tuple[Edge, Edge, Edge], tuple[int, int, int]]]:
    """Triples of 3-edges pairwise meeting in one vertex, the three meeting
    vertices distinct.  Each entry is ``(edges, middle_triangle)``."""
    if H.arity != 3:
        raise ValueError("clean 3-cycles are defined for 3-uniform hypergraphs")
    inc = H.incidence()
    E = H.edges
    out = set()
    for a in range(len(E)):
        sa = set(E[a])
        for x in E[a]:
            for b in inc[x]:
                if b <= a:
                    continue
                sb = set(E[b])
                if sa & sb != {x}:
                    continue
                for y in sa - {x}:
                    for c in inc[y]:
                        if c <= b:
                            continue
                        sc = set(E[c])
                        if sa & sc != {y}:
                            continue
                        meet = sb & sc
                        if len(meet) != 1 or x in sc:
                            continue
                        (z,) = meet
                        if z in sa:
                            continue
                        out.add(((E[a], E[b], E[c]), tuple(sorted((x, y, z)))))
    return sorted(out)


def low_degree_vertices(H: UniformHypergraph, g_value: float) -> list[int]:
    """Vertices of degree at most ``7 * g_value``."""
    if g_value <= 0:
        raise ValueError("g_value must be positive")
    d = H.degrees()
    return [int(v) + 1 for v in np.flatnonzero(d <= 7 * g_value)]


# ---------------------------------------------------------------------------
# cliques


def cliques(G: UniformHypergraph, r: int) -> UniformHypergraph:
    """cl(G): every r-set all of whose ``G.arity``-subsets are edges of G."""
    s = G.arity
    if r <= s:
        raise ValueError(f"clique order r={r} must exceed the arity {s}")
    present = G.edge_set
    nbrs: dict[int, set[int]] = defaultdict(set)
    for e in G.edges:
        for v in e:
            nbrs[v].update(e)
    found = []

    def grow(cur: list[int]):
        if len(cur) == r:
            found.append(tuple(cur))
            return
        last = cur[-1] if cur else 0
        cand = range(last + 1, G.n + 1) if len(cur) < 1 else sorted(
            w for w in nbrs[cur[0]] if w > last)
        for w in cand:
            if len(cur) + 1 >= s:
                ok = all(tuple(sorted(sub + (w,))) in present for sub in combinations(cur, s - 1))
                if not ok:
                    continue
            grow(cur + [w])

    grow([])
    return UniformHypergraph(G.n, r, tuple(found))


def clique_expansion(H: UniformHypergraph, s: int = 2) -> UniformHypergraph:
    """Replace each hyperedge by the complete s-uniform hypergraph on its vertices."""
    if not 2 <= s < H.arity:
        raise ValueError("need 2 <= s < arity")
    return UniformHypergraph.from_edges(H.n, s, (sub for e in H.edges for sub in combinations(e, s)))


# ---------------------------------------------------------------------------
# bad events


def bad_events(H: UniformHypergraph, pi: float, g_value: float) -> BadEventFlags:
    """Evaluate B1..B5 with natural logarithms."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must be a probability")
    n, r = H.n, H.arity
    ln = math.log(n)
    witness = {}
    d = H.degrees()

    mean_deg = math.comb(n - 1, r - 1) * pi
    b1_thresh = mean_deg + max(mean_deg, 3 * ln)
    b1 = bool(d.max(initial=0) > b1_thresh)
    if b1:
        witness["b1"] = int(np.argmax(d)) + 1

    conf = find_avoidable_configuration(H)
    b2 = conf is not None
    if b2:
        witness["b2"] = conf

    low = low_degree_vertices(H, g_value)
    b3 = len(low) > ln ** (8 * g_value)
    if b3:
        witness["b3"] = low

    pairs = partner_pairs(H)
    b4 = len(pairs) > ln ** 3
    if b4:
        witness["b4"] = pairs

    iso = np.flatnonzero(d == 0)
    b5 = iso.size > 0
    if b5:
        witness["b5"] = int(iso[0]) + 1
    return BadEventFlags(b1, b2, b3, b4, b5, witness)
