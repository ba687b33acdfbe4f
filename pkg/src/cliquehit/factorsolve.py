"""Exact perfect-matching and clique-factor search."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .hypercore import UniformHypergraph, cliques

DEFAULT_BUDGET = 5_000_000


class BudgetExceeded(RuntimeError):
    """The exact-cover search hit its node budget before deciding."""


@dataclass(frozen=True)
class Factor:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(sorted(tuple(sorted(b)) for b in self.blocks)))

    def check(self, n: int) -> None:
        seen = [v for b in self.blocks for v in b]
        if sorted(seen) != list(range(1, n + 1)):
            raise ValueError("blocks do not partition 1..n")

    def to_json(self) -> str:
        return json.dumps([list(b) for b in self.blocks])

    @classmethod
    def from_json(cls, text: str) -> "Factor":
        return cls(tuple(tuple(b) for b in json.loads(text)))


def perfect_matching(H: UniformHypergraph, budget: int = DEFAULT_BUDGET) -> Factor | None:
    """A perfect matching of H, or None if there is none.

    Raises BudgetExceeded when the search gives up; that is never reported
    as "no matching".
    """
    if H.n % H.arity:
        raise ValueError(f"n={H.n} is not divisible by arity {H.arity}")
    arr = np.array(H.edges, dtype=np.int64).reshape(-1, H.arity) - 1
    status, chosen = kernels.exact_cover(arr, H.n, budget)
    if status < 0:
        raise BudgetExceeded(f"exact cover exceeded {budget} nodes")
    if status == 0:
        return None
    return Factor(tuple(H.edges[i] for i in chosen))


def clique_factor(G: UniformHypergraph, r: int, budget: int = DEFAULT_BUDGET) -> Factor | None:
    """A partition of the vertices into r-sets each spanning a clique of G."""
    if G.n % r:
        raise ValueError(f"n={G.n} is not divisible by r={r}")
    return perfect_matching(cliques(G, r), budget)
