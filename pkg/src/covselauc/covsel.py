"""Covariance selection by iterative proportional fitting (IPF).

Given a source covariance and a model graph, find the unique covariance that
matches the source on the diagonal and on every edge while its precision is
zero off the graph. Works for any edge set, so it doubles as an independent
check on the closed forms in :mod:`covselauc.models`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import symmat
from .errors import InvalidCliqueCover, NoConvergence

log = logging.getLogger(__name__)


def adjacency(edges: Iterable[tuple[int, int]], n: int) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        if i != j:
            adj[i].add(j)
            adj[j].add(i)
    return adj


def maximal_cliques(edges: Iterable[tuple[int, int]], n: int) -> list[tuple[int, ...]]:
    """All maximal cliques, Bron-Kerbosch with Tomita pivoting.

    Each clique is a sorted tuple and the list is sorted lexicographically.
    Isolated vertices come back as singletons.
    """
    adj = adjacency(edges, n)
    found: list[tuple[int, ...]] = []

    def expand(r: list[int], p: set[int], x: set[int]) -> None:
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: (len(p & adj[u]), -u))
        for v in sorted(p - adj[pivot]):
            expand(r + [v], p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand([], set(range(n)), set())
    return sorted(found)


@dataclass(frozen=True)
class IpfConfig:
    max_iterations: int = 500
    convergence_tol: float = 1e-10
    clique_cover: Optional[Sequence[Sequence[int]]] = None


def check_cover(cliques: Sequence[Sequence[int]], edges: Iterable[tuple[int, int]], n: int) -> None:
    adj = adjacency(edges, n)
    for clique in cliques:
        for a in clique:
            if not 0 <= a < n:
                raise InvalidCliqueCover(f"vertex {a} outside 0..{n - 1}")
            for b in clique:
                if a != b and b not in adj[a]:
                    raise InvalidCliqueCover(f"clique {tuple(clique)} uses non-edge {(a, b)}")
    members = [set(c) for c in cliques]
    for i, j in edges:
        if not any(i in m and j in m for m in members):
            raise InvalidCliqueCover(f"edge {(i, j)} is not inside any clique")
    covered = set().union(*members) if members else set()
    if covered != set(range(n)):
        raise InvalidCliqueCover(f"vertices {sorted(set(range(n)) - covered)} not covered")


def ipf_select(source, edges: Iterable[tuple[int, int]], cfg: IpfConfig | None = None) -> np.ndarray:
    """Covariance-selection model of ``source`` on the graph ``edges``.

    Starting from the identity, each clique update resets the precision block
    ``K[C, C] += inv(source[C, C]) - inv(model[C, C])`` so the model marginal
    on ``C`` equals the source marginal while the conditional of the rest
    given ``C`` is unchanged. Sweeps repeat until no entry moves by more than
    ``cfg.convergence_tol``.
    """
    cfg = cfg or IpfConfig()
    s = symmat.as_symmetric(source)
    n = s.shape[0]
    symmat.cholesky(s)
    edges = list(edges)
    cliques = [tuple(c) for c in cfg.clique_cover] if cfg.clique_cover is not None \
        else maximal_cliques(edges, n)
    check_cover(cliques, edges, n)
    blocks = [(np.array(c, dtype=int), symmat.inverse(s[np.ix_(c, c)])) for c in cliques]

    precision = np.eye(n)
    sigma = np.eye(n)
    residual = np.inf
    for sweep in range(1, cfg.max_iterations + 1):
        previous = sigma
        for c, target in blocks:
            idx = np.ix_(c, c)
            marginal = sigma[idx]
            precision[idx] += target - symmat.inverse(marginal)
            # same update in covariance form: only |C|-sized inverses needed
            gain = sigma[:, c] @ symmat.inverse(marginal)
            sigma = sigma + gain @ (s[idx] - marginal) @ gain.T
            sigma = 0.5 * (sigma + sigma.T)
        # resynchronise with the precision to stop drift between the two forms
        sigma = symmat.inverse(precision)
        residual = float(np.max(np.abs(sigma - previous)))
        log.debug("ipf sweep %d residual %.3e", sweep, residual)
        if residual <= cfg.convergence_tol:
            return sigma
    raise NoConvergence(cfg.max_iterations, residual)
