"""Equicorrelated source covariance and its pth-order star / chain models.

Vertices are 0-based here; the CLI and docs count from 1. Edges are ``(i, j)``
tuples with ``i < j`` in lexicographic order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import symmat
from .errors import InvalidOrder, InvalidRho

Edge = tuple[int, int]


class Family(str, enum.Enum):
    STAR = "star"
    CHAIN = "chain"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ToeplitzSpec:
    """Unit-diagonal covariance with every off-diagonal entry equal to ``rho``."""

    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidOrder(f"dimension n must be an integer >= 2, got {self.n}")
        if not -1.0 / (self.n - 1) < self.rho < 1.0:
            raise InvalidRho(
                f"rho={self.rho} outside the positive definite interval "
                f"(-1/{self.n - 1}, 1) for n={self.n}"
            )


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    p: int = 1
    edges: frozenset = field(default_factory=frozenset)


def check_order(n: int, p: int) -> None:
    if int(p) != p or not 1 <= p <= n - 1:
        raise InvalidOrder(f"model order p={p} outside 1..{n - 1} for n={n}")


def star_edges(n: int, p: int) -> list[Edge]:
    """Hubs ``0..p-1`` form a clique and every leaf attaches to every hub."""
    check_order(n, p)
    return [(i, j) for i in range(p) for j in range(i + 1, n)]


def chain_edges(n: int, p: int) -> list[Edge]:
    """Every pair at index distance 1..p."""
    check_order(n, p)
    return [(i, j) for i in range(n) for j in range(i + 1, min(i + p, n - 1) + 1)]


def model_edges(spec: ModelSpec, n: int) -> list[Edge]:
    family = Family(spec.family)
    if family is Family.STAR:
        return star_edges(n, spec.p)
    if family is Family.CHAIN:
        return chain_edges(n, spec.p)
    edges = sorted((min(i, j), max(i, j)) for i, j in spec.edges)
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {(i, j)} is not a pair of distinct vertices in 0..{n - 1}")
    return sorted(set(edges))


def toeplitz_source(spec: ToeplitzSpec) -> np.ndarray:
    sigma = np.full((spec.n, spec.n), float(spec.rho))
    np.fill_diagonal(sigma, 1.0)
    return symmat.frozen(sigma)


def star_leaf_correlation(p: int, rho: float) -> float:
    return p * rho * rho / ((p - 1) * rho + 1.0)


def star_model(spec: ToeplitzSpec, p: int) -> np.ndarray:
    """Covariance of the pth-order star model.

    Pairs touching a hub keep ``rho``; leaves are conditionally independent
    given the hubs, so a leaf-leaf pair gets ``p rho^2 / ((p-1) rho + 1)``.
    """
    n, rho = spec.n, float(spec.rho)
    check_order(n, p)
    sigma = np.full((n, n), rho)
    sigma[p:, p:] = star_leaf_correlation(p, rho)
    np.fill_diagonal(sigma, 1.0)
    symmat.cholesky(sigma)
    return symmat.frozen(sigma)


def chain_lags(n: int, p: int, rho: float) -> np.ndarray:
    """Correlation as a function of index distance for the pth-order chain.

    Distances 1..p carry ``rho``; each further value is the sum of the p
    preceding ones scaled by ``rho / ((p-1) rho + 1)``.
    """
    check_order(n, p)
    beta = rho / ((p - 1) * rho + 1.0)
    lags = np.empty(n)
    lags[0] = 1.0
    lags[1:p + 1] = rho
    window = p * rho
    for d in range(p + 1, n):
        lags[d] = beta * window
        window += lags[d] - lags[d - p]
    return lags


def chain_model(spec: ToeplitzSpec, p: int) -> np.ndarray:
    """Covariance of the pth-order Markov chain model (p-banded precision)."""
    lags = chain_lags(spec.n, p, float(spec.rho))
    idx = np.arange(spec.n)
    sigma = lags[np.abs(idx[:, None] - idx[None, :])]
    symmat.cholesky(sigma)
    return symmat.frozen(sigma)


def build_model(spec: ToeplitzSpec, family: Family | str, p: int) -> np.ndarray:
    family = Family(family)
    if family is Family.STAR:
        return star_model(spec, p)
    if family is Family.CHAIN:
        return chain_model(spec, p)
    raise ValueError("custom models have no closed form; use covsel.ipf_select")
