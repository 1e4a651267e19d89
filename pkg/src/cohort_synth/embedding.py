"""Exact t-SNE on a precomputed distance matrix, plus coordinate
normalization to (-1, 1).

The O(N^2) formulation is deliberate: corpora here stay around 10^4 rows,
and an exact gradient keeps the optimizer reproducible and testable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradient, PerplexityTooLarge
from .rng import substream

_EPS = 1e-12


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iters: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_start: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    init_scale: float = 1e-4
    entropy_tol: float = 1e-5
    search_iters: int = 50
    gain_increment: float = 0.05


@dataclass
class EmbeddingCoords:
    Y: np.ndarray  # (N, 2)
    kl_trace: np.ndarray  # KL divergence at the start of each iteration


def proximity_to_distance(P: np.ndarray) -> np.ndarray:
    """D = 1 - P with a zeroed diagonal."""
    P = np.asarray(P, dtype=np.float64)
    D = 1.0 - P
    np.fill_diagonal(D, 0.0)
    return D


def conditional_neighbor_probs(
    D: np.ndarray, perplexity: float, search_iters: int = 50, entropy_tol: float = 1e-5
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row Gaussian kernels on squared distances, with each row's
    precision binary-searched so the row entropy hits log2(perplexity).

    Returns (conditional probabilities with zero diagonal, row entropies
    in bits).
    """
    n = D.shape[0]
    D2 = np.asarray(D, dtype=np.float64) ** 2
    target = np.log2(perplexity)
    beta = np.ones(n)
    beta_lo = np.zeros(n)
    beta_hi = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    off_diag = ~np.eye(n, dtype=bool)

    P = np.zeros((n, n))
    entropy = np.zeros(n)
    for _ in range(search_iters):
        W = np.exp(-D2 * beta[:, None]) * off_diag
        sums = np.maximum(W.sum(axis=1), _EPS)
        P = W / sums[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            logP = np.where(P > 0, np.log2(np.maximum(P, _EPS)), 0.0)
        entropy = -(P * logP).sum(axis=1)
        diff = entropy - target
        done = np.abs(diff) <= entropy_tol
        if done.all():
            break
        # Entropy shrinks as beta grows: too much entropy -> raise beta.
        high = (diff > 0) & ~done
        low = (diff < 0) & ~done
        beta_lo[high] = beta[high]
        beta_hi[low] = beta[low]
        beta[high] = np.where(np.isinf(beta_hi[high]), beta[high] * 2.0, (beta[high] + beta_hi[high]) / 2.0)
        beta[low] = np.where(beta_lo[low] == 0.0, beta[low] / 2.0, (beta[low] + beta_lo[low]) / 2.0)
    return P, entropy


def tsne_embed(D: np.ndarray, params: TsneParams = TsneParams(), seed: int = 0) -> EmbeddingCoords:
    """Standard exact t-SNE with early exaggeration and momentum schedule.

    Deterministic given (D, params, seed); the returned trace holds the KL
    divergence of the un-exaggerated target at every iteration.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if params.perplexity >= n:
        raise PerplexityTooLarge(f"perplexity {params.perplexity} must be < N = {n}")
    if n < 3 * params.perplexity:
        warnings.warn(f"N = {n} is below 3x perplexity; the embedding may be unstable")

    cond, _ = conditional_neighbor_probs(D, params.perplexity, params.search_iters, params.entropy_tol)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, _EPS)
    np.fill_diagonal(P, 0.0)

    rng = substream(seed, "tsne-init")
    Y = rng.standard_normal((n, 2)) * params.init_scale
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_trace = np.empty(params.iters)

    P_log = np.log(np.maximum(P, _EPS))
    for it in range(params.iters):
        exaggerated = it < params.exaggeration_iters
        P_active = P * params.early_exaggeration if exaggerated else P
        if it == params.exaggeration_iters:
            # Fresh optimizer state for the un-exaggerated phase; stale
            # velocity from the compression phase fights the true objective.
            velocity[:] = 0.0
            gains[:] = 1.0

        sums = (Y**2).sum(axis=1)
        sq = np.maximum(sums[:, None] + sums[None, :] - 2.0 * (Y @ Y.T), 0.0)
        num = 1.0 / (1.0 + sq)
        np.fill_diagonal(num, 0.0)
        Q_raw = num / num.sum()

        kl_trace[it] = float((P * (P_log - np.log(np.maximum(Q_raw, _EPS)))).sum())

        W = (P_active - Q_raw) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        if not np.isfinite(grad).all():
            raise NonFiniteGradient(it)

        # Per-parameter adaptive gains: grow where the gradient keeps
        # direction against the velocity, shrink where it flips. The gentle
        # increment keeps the post-exaggeration descent monotone.
        same_sign = (grad > 0) == (velocity < 0)
        gains = np.where(same_sign, gains + params.gain_increment, gains * 0.8)
        np.clip(gains, 0.01, None, out=gains)

        momentum = params.momentum_start if it < params.momentum_switch_iter else params.momentum_late
        velocity = momentum * velocity - params.learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if not np.isfinite(Y).all():
            raise NonFiniteGradient(it)

    return EmbeddingCoords(Y=Y, kl_trace=kl_trace)


def normalize_coords(coords: EmbeddingCoords) -> EmbeddingCoords:
    """Affine map per dimension onto [-1, 1]; a zero-range dimension maps to 0."""
    Y = np.asarray(coords.Y, dtype=np.float64)
    lo = Y.min(axis=0)
    hi = Y.max(axis=0)
    span = hi - lo
    out = np.zeros_like(Y)
    for dim in range(Y.shape[1]):
        if span[dim] > 0:
            out[:, dim] = 2.0 * (Y[:, dim] - lo[dim]) / span[dim] - 1.0
    return EmbeddingCoords(Y=out, kl_trace=coords.kl_trace)


def write_embedding_csv(case_ids, coords: EmbeddingCoords, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("case_id,x,y\n")
        for case_id, (x, y) in zip(case_ids, coords.Y):
            fh.write(f"{case_id},{x!r},{y!r}\n")


def write_kl_trace_csv(coords: EmbeddingCoords, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iter,kl\n")
        for i, v in enumerate(coords.kl_trace):
            fh.write(f"{i},{v!r}\n")
