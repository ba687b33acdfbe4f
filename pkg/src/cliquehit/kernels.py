"""Hot loops: process hitting times, exact cover, and weighted model counting.

All vertex ids inside this module are 0-based.  Every function is plain
numba-compatible Python, so the pure-numpy path (``CLIQUEHIT_DISABLE_NUMBA=1``)
executes identical logic.
"""
import numpy as np

from ._accel import njit


@njit
def binom_table(nmax, kmax):
    t = np.zeros((nmax + 1, kmax + 1), dtype=np.int64)
    for a in range(nmax + 1):
        t[a, 0] = 1
        for b in range(1, min(a, kmax) + 1):
            t[a, b] = t[a - 1, b - 1] + (t[a - 1, b] if b <= a - 1 else 0)
    return t


@njit
def colex_rank(verts, binom):
    # verts sorted ascending, 0-based
    rk = 0
    for i in range(verts.shape[0]):
        rk += binom[verts[i], i + 1]
    return rk


@njit
def min_degree_hit(order_edges, n):
    """1-based step at which every vertex is covered, or -1."""
    seen = np.zeros(n, dtype=np.bool_)
    left = n
    m, k = order_edges.shape
    for t in range(m):
        for j in range(k):
            v = order_edges[t, j]
            if not seen[v]:
                seen[v] = True
                left -= 1
        if left == 0:
            return t + 1
    return -1


@njit
def _subset_index(r, s):
    # all s-subsets of range(r) as rows, lexicographic
    binom = binom_table(r, s)
    cnt = binom[r, s]
    out = np.empty((cnt, s), dtype=np.int64)
    cur = np.arange(s)
    for row in range(cnt):
        out[row] = cur
        i = s - 1
        while i >= 0 and cur[i] == r - s + i:
            i -= 1
        if i < 0:
            break
        cur[i] += 1
        for j in range(i + 1, s):
            cur[j] = cur[j - 1] + 1
    return out


@njit
def clique_cover_hit(order_edges, n, r):
    """1-based step at which every vertex lies in an r-clique, or -1.

    ``order_edges`` rows are s-sets (s = arity) in arrival order.  When an
    s-set arrives the only new r-cliques are those containing it, so we scan
    the (r - s)-sets W outside it and test the C(r, s) sub-s-sets of e + W.
    """
    m, s = order_edges.shape
    binom = binom_table(n, r)
    present = np.zeros(binom[n, s] + 1, dtype=np.bool_)
    covered = np.zeros(n, dtype=np.bool_)
    left = n
    subs = _subset_index(r, s)
    d = r - s
    others = np.empty(n - s, dtype=np.int64)
    union = np.empty(r, dtype=np.int64)
    buf = np.empty(s, dtype=np.int64)
    w = np.empty(d, dtype=np.int64)
    for t in range(m):
        e = order_edges[t]
        present[colex_rank(e, binom)] = True
        # vertices outside e
        q = 0
        for v in range(n):
            inside = False
            for j in range(s):
                if e[j] == v:
                    inside = True
            if not inside:
                others[q] = v
                q += 1
        if q < d:
            continue
        for j in range(d):
            w[j] = j
        while True:
            # merge e and others[w] into a sorted union
            a = 0
            b = 0
            for pos in range(r):
                if b >= d or (a < s and e[a] < others[w[b]]):
                    union[pos] = e[a]
                    a += 1
                else:
                    union[pos] = others[w[b]]
                    b += 1
            ok = True
            for row in range(subs.shape[0]):
                for j in range(s):
                    buf[j] = union[subs[row, j]]
                if not present[colex_rank(buf, binom)]:
                    ok = False
                    break
            if ok:
                for pos in range(r):
                    if not covered[union[pos]]:
                        covered[union[pos]] = True
                        left -= 1
            # next combination of d out of q
            i = d - 1
            while i >= 0 and w[i] == q - d + i:
                i -= 1
            if i < 0:
                break
            w[i] += 1
            for j in range(i + 1, d):
                w[j] = w[j - 1] + 1
        if left == 0:
            return t + 1
    return -1


@njit
def exact_cover(edges, n, budget):
    """Partition range(n) into rows of ``edges``.

    Returns ``(status, chosen)`` with status 1 = found, 0 = none exists,
    -1 = node budget exhausted.  Depth-first with fail-first branching on the
    uncovered vertex having fewest usable edges.
    """
    m = edges.shape[0]
    r = edges.shape[1]
    empty = np.zeros(0, dtype=np.int64)
    if n == 0:
        return 1, empty
    deg = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        for j in range(r):
            deg[edges[i, j] + 1] += 1
    ptr = np.cumsum(deg)
    idx = np.empty(m * r, dtype=np.int64)
    fill = ptr[:-1].copy()
    for i in range(m):
        for j in range(r):
            v = edges[i, j]
            idx[fill[v]] = i
            fill[v] += 1
    covered = np.zeros(n, dtype=np.bool_)
    blocked = np.zeros(m, dtype=np.int64)
    levels = n // r + 1
    stack_v = np.zeros(levels, dtype=np.int64)
    stack_pos = np.zeros(levels, dtype=np.int64)
    chosen = np.zeros(levels, dtype=np.int64)
    depth = 0
    ncov = 0
    nodes = 0
    fresh = True
    while True:
        dead = False
        if fresh:
            if ncov == n:
                return 1, chosen[:depth].copy()
            best = -1
            bestc = m + 1
            for v in range(n):
                if covered[v]:
                    continue
                c = 0
                for q in range(ptr[v], ptr[v + 1]):
                    if blocked[idx[q]] == 0:
                        c += 1
                if c < bestc:
                    bestc = c
                    best = v
                    if c == 0:
                        break
            if bestc == 0:
                dead = True
            else:
                stack_v[depth] = best
                stack_pos[depth] = ptr[best]
                fresh = False
        if not dead:
            v = stack_v[depth]
            advanced = False
            while stack_pos[depth] < ptr[v + 1]:
                e = idx[stack_pos[depth]]
                stack_pos[depth] += 1
                if blocked[e] == 0:
                    nodes += 1
                    if nodes > budget:
                        return -1, empty
                    for j in range(r):
                        u = edges[e, j]
                        covered[u] = True
                        for q in range(ptr[u], ptr[u + 1]):
                            blocked[idx[q]] += 1
                    ncov += r
                    chosen[depth] = e
                    depth += 1
                    fresh = True
                    advanced = True
                    break
            if advanced:
                continue
        # backtrack
        if depth == 0:
            return 0, empty
        depth -= 1
        e = chosen[depth]
        for j in range(r):
            u = edges[e, j]
            covered[u] = False
            for q in range(ptr[u], ptr[u + 1]):
                blocked[idx[q]] -= 1
        ncov -= r
        fresh = False


@njit
def wmc_enumerate(clauses, k, p):
    """Sum of p^|a| (1-p)^(k-|a|) over a in {0,1}^k containing no clause.

    Clauses are bitmasks over the k variables; a clause is violated when all
    of its variables are 1.
    """
    weights = np.empty(k + 1)
    for c in range(k + 1):
        weights[c] = p ** c * (1.0 - p) ** (k - c)
    nc = clauses.shape[0]
    total = 0.0
    for a in range(1 << k):
        bad = False
        for i in range(nc):
            if (a & clauses[i]) == clauses[i]:
                bad = True
                break
        if bad:
            continue
        x = a
        c = 0
        while x:
            x &= x - 1
            c += 1
        total += weights[c]
    return total


@njit
def degree_ok_after_thinning(order_edges, keep, n, upto):
    """Whether the kept rows among the first ``upto`` cover every vertex."""
    seen = np.zeros(n, dtype=np.bool_)
    left = n
    k = order_edges.shape[1]
    for t in range(upto):
        if not keep[t]:
            continue
        for j in range(k):
            v = order_edges[t, j]
            if not seen[v]:
                seen[v] = True
                left -= 1
    return left == 0
