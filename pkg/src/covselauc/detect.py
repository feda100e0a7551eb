"""Detection-theoretic quality measures of a covariance-selection model.

The source ``N(0, S)`` is the null hypothesis and the model ``N(0, M)`` the
alternative. Everything here is driven by the eigenvalues ``lam`` of the
correlation approximation matrix ``S @ inv(M)``:

* log-likelihood ratio ``l(x) = -c + x' K x`` with ``c = -1/2 log|S inv(M)|``;
* under the source, ``K0 = 1/2 sum (1 - lam_i) W_i^2``;
* under the model, ``K1 = 1/2 sum (1/lam_i - 1) Z_i^2``;
* ``AUC = Pr(L1 - L0 > 0)`` with independent draws under each hypothesis.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gchisq, symmat
from .errors import (DimensionMismatch, InvalidKappa, InvalidOrder, InvalidRho,
                     NotPositiveDefinite, QuadratureFailure)
from .models import check_order

MC_BLOCK = 1 << 16
MIN_MC_SAMPLES = 1000


@dataclass(frozen=True)
class Cam:
    """Spectrum summary of the correlation approximation matrix."""

    eigenvalues: np.ndarray
    trace: float
    log_det: float

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)


@dataclass(frozen=True)
class LlrtWeights:
    c: float
    w0: np.ndarray
    w1: np.ndarray


class AucMethod(str, enum.Enum):
    MONTE_CARLO = "monte_carlo"
    QUADRATURE = "quadrature"
    UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class AucResult:
    value: float
    method: AucMethod
    std_error: float = 0.0
    samples_or_nodes: int = 0


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.p0.tolist(), self.p1.tolist()))


def cam(source, model) -> Cam:
    """CAM of ``model`` for ``source``.

    The eigenvalues come from the symmetric congruence
    ``inv(L) @ source @ inv(L).T`` with ``model = L @ L.T``, which is similar
    to ``source @ inv(model)``.
    """
    s = symmat.as_symmetric(source)
    m = symmat.as_symmetric(model)
    if s.shape != m.shape:
        raise DimensionMismatch(f"source is {s.shape}, model is {m.shape}")
    symmat.cholesky(s)
    if np.array_equal(s, m):
        lam = np.ones(s.shape[0])
    else:
        lam = symmat.eigvals_sym(symmat.whiten(s, symmat.cholesky(m)))
    if not np.all(lam > 0):
        raise NotPositiveDefinite("CAM has a non-positive eigenvalue")
    lam.flags.writeable = False
    return Cam(lam, float(np.sum(lam)), float(np.sum(np.log(lam))))


def kl_divergence(c: Cam) -> float:
    """``D(source || model) = 1/2 (tr - n - log|CAM|)``."""
    return max(0.0, 0.5 * (c.trace - c.n - c.log_det))


def reverse_kl(c: Cam) -> float:
    """``D(model || source) = 1/2 (sum 1/lam - n + log|CAM|)``."""
    return max(0.0, 0.5 * (float(np.sum(1.0 / c.eigenvalues)) - c.n + c.log_det))


def kl_closed_form(n: int, p: int, rho: float) -> float:
    """KL divergence of the pth-order star (equivalently chain) model of the
    n-dimensional equicorrelated source."""
    check_order(n, p)
    if not -1.0 / (n - 1) < rho < 1.0:
        raise InvalidRho(f"rho={rho} outside (-1/{n - 1}, 1)")
    # regrouped so both terms vanish identically at p = n - 1 and at rho = 0
    b = p * rho + 1.0
    return 0.5 * (n - p - 1) * math.log(b / ((p - 1) * rho + 1.0)) + 0.5 * math.log(b / ((n - 1) * rho + 1.0))


def llrt_weights(c: Cam) -> LlrtWeights:
    lam = c.eigenvalues
    w0 = 0.5 * (1.0 - lam)
    w1 = 0.5 * (1.0 / lam - 1.0)
    w0.flags.writeable = False
    w1.flags.writeable = False
    return LlrtWeights(-0.5 * c.log_det, w0, w1)


def auc_upper_bound(kl: float) -> float:
    """``1 - exp(-kl - 1)``: the AUC ceiling implied by a KL divergence."""
    if kl < 0:
        raise ValueError(f"KL divergence must be nonnegative, got {kl}")
    return -math.expm1(-kl - 1.0)


def asymptotic_kl_bound(kappa: float) -> float:
    """Limit bound on the KL divergence when ``p = ceil(n / kappa)``."""
    if not kappa > 1:
        raise InvalidKappa(f"kappa must exceed 1, got {kappa}")
    return 0.5 * (kappa - 1.0) - 0.5 * math.log(kappa)


def proportional_order(n: int, kappa: float) -> int:
    if not kappa > 1:
        raise InvalidKappa(f"kappa must exceed 1, got {kappa}")
    p = math.ceil(n / kappa)
    if p > n - 1:
        raise InvalidOrder(f"p=ceil({n}/{kappa})={p} leaves no room for a model of n={n}")
    return p


# -- Monte Carlo -----------------------------------------------------------

def _stream(seed: int, block: int) -> np.random.Generator:
    # counter-based generator keyed by (seed, block): blocks are reproducible
    # no matter which worker draws them
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _quadratic_block(groups, size: int, rng: np.random.Generator) -> np.ndarray:
    values, dofs = groups
    out = np.zeros(size)
    for w, h in zip(values, dofs):
        if h == 1:
            z = rng.standard_normal(size)
            out += w * (z * z)
        else:
            out += w * rng.chisquare(h, size)
    return out


def _draw(parts, count: int, seed: int, workers: int) -> np.ndarray:
    """Sum of independent weighted chi-squared parts, block by block.

    ``parts`` is a list of ``(sign, groups)``; each block draws the parts in
    order from its own stream.
    """
    blocks = [(b, min(MC_BLOCK, count - b * MC_BLOCK)) for b in range(-(-count // MC_BLOCK))]

    def run(block):
        index, size = block
        rng = _stream(seed, index)
        total = np.zeros(size)
        for sign, groups in parts:
            total += sign * _quadratic_block(groups, size, rng)
        return total

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, blocks))
    else:
        chunks = [run(b) for b in blocks]
    return np.concatenate(chunks) if chunks else np.zeros(0)


def _check_count(count: int) -> None:
    if count < 1:
        raise ValueError(f"sample count must be positive, got {count}")


def sample_l0(w: LlrtWeights, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draws of the log-likelihood ratio under the source, ``-c + K0``."""
    _check_count(count)
    return -w.c + _draw([(1.0, gchisq.group_weights(w.w0))], count, seed, workers)


def sample_l1(w: LlrtWeights, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draws of the log-likelihood ratio under the model, ``-c + K1``."""
    _check_count(count)
    return -w.c + _draw([(1.0, gchisq.group_weights(w.w1))], count, seed, workers)


def sample_l_delta(w: LlrtWeights, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draws of ``L1 - L0 = K1 - K0``; the constant cancels.

    Components sharing a weight are drawn together as one chi-squared variable
    with the combined degrees of freedom.
    """
    _check_count(count)
    parts = [(1.0, gchisq.group_weights(w.w1)), (-1.0, gchisq.group_weights(w.w0))]
    return _draw(parts, count, seed, workers)


def auc_monte_carlo(w: LlrtWeights, count: int, seed: int, workers: int = 1) -> AucResult:
    """Fraction of positive ``L1 - L0`` draws; exact zeros count one half."""
    if count < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples, got {count}")
    d = sample_l_delta(w, count, seed, workers)
    value = (np.count_nonzero(d > 0) + 0.5 * np.count_nonzero(d == 0)) / count
    return AucResult(float(value), AucMethod.MONTE_CARLO, math.sqrt(value * (1 - value) / count), count)


# -- quadrature ------------------------------------------------------------

def delta_weights(w: LlrtWeights) -> np.ndarray:
    """Weights of ``L1 - L0`` as a single generalized chi-squared variable."""
    return np.concatenate([w.w1, -w.w0])


def auc_quadrature(w: LlrtWeights, tol: float = gchisq.QUAD_TOL) -> AucResult:
    value, err = gchisq.sf(delta_weights(w), 0.0, tol=tol, return_error=True)
    if err > tol:
        raise QuadratureFailure(f"Imhof error bound {err:.2e} above {tol:.1e}")
    return AucResult(value, AucMethod.QUADRATURE, 0.0, int(delta_weights(w).size))


def roc_points(w: LlrtWeights, thresholds, tol: float = gchisq.QUAD_TOL) -> RocCurve:
    """False-alarm and detection probabilities ``Pr(L0 >= t)``, ``Pr(L1 >= t)``."""
    tau = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(tau) < 0):
        raise ValueError("thresholds must be sorted ascending")
    p0 = np.array([gchisq.sf(w.w0, t + w.c, tol=tol) for t in tau])
    p1 = np.array([gchisq.sf(w.w1, t + w.c, tol=tol) for t in tau])
    return RocCurve(tau, p0, p1)
