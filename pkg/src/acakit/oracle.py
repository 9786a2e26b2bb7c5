"""Reference error measures for cross approximations.

Three oracles: truncated-SVD errors (the Frobenius-optimal baseline for
any rank), exhaustive greedy pivot search on small dense matrices (the
best any cross method could do one rank at a time), and the derived
quantities used to compare methods (normalized excess error and the gain
of one method over another).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import DenseCapExceededError
from .lowrank import Skeleton, dense

__all__ = [
    "DegenerateSvdError",
    "ErrorReport",
    "GeneticRankResult",
    "GeneticSearchResult",
    "InfiniteGainError",
    "gain",
    "genetic_search",
    "relative_error",
    "svd_rank_errors",
    "tilde_error",
]

GENETIC_CAP_DEFAULT = 64
SVD_FLOOR = 1e-14


class DegenerateSvdError(ValueError):
    """SVD error too small for a meaningful normalized comparison."""


class InfiniteGainError(ArithmeticError):
    """Reference method already sits at the SVD floor; gain is unbounded."""


@dataclass(frozen=True)
class ErrorReport:
    """Relative Frobenius error of one method at one rank.

    tilde_error is the excess over the SVD baseline, (e - e_svd)/e_svd;
    None when the baseline is degenerate.  kernel_evals counts the scalar
    kernel evaluations spent to reach the rank.
    """

    rank: int
    rel_error: float
    svd_error: float
    tilde_error: float | None
    method: str
    kernel_evals: int = 0


def svd_rank_errors(a: np.ndarray, k_max: int) -> np.ndarray:
    """Best possible relative Frobenius error at ranks 1..k_max.

    For singular values s_1 >= s_2 >= ..., the optimal rank-k error is
    sqrt(sum_{i>k} s_i^2) / |A|_F.
    """
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    tail = np.concatenate([np.cumsum((s * s)[::-1])[::-1], [0.0]])
    fro = math.sqrt(float(tail[0]))
    if fro == 0.0:
        raise ValueError("zero matrix has no relative error")
    k_max = min(k_max, *a.shape)
    errors = np.sqrt(np.maximum(tail[1 : k_max + 1], 0.0)) / fro
    return errors


def relative_error(a: np.ndarray, skeleton: Skeleton) -> float:
    """|A - U V^T|_F / |A|_F against the dense matrix."""
    return float(np.linalg.norm(a - dense(skeleton)) / np.linalg.norm(a))


def tilde_error(rel_error: float, svd_error: float) -> float:
    """Normalized excess over the SVD baseline: (e - e_svd)/e_svd."""
    if svd_error <= SVD_FLOOR:
        raise DegenerateSvdError("SVD error at or below floor")
    return (rel_error - svd_error) / svd_error


def gain(e_aca: float, e_acagp: float, e_svd: float) -> float:
    """How much closer one method sits to the SVD baseline than another:

        (e_aca - e_svd) / (e_acagp - e_svd).
    """
    excess = e_acagp - e_svd
    if excess <= SVD_FLOOR:
        raise InfiniteGainError("method error at the SVD baseline")
    return (e_aca - e_svd) / excess


@dataclass(frozen=True)
class GeneticRankResult:
    rank: int
    pivot: tuple[int, int]
    rel_error: float


@dataclass(frozen=True, eq=False)
class GeneticSearchResult:
    """Greedy exhaustive pivot search outcome.

    ranks[k-1] holds the best pivot at step k and the relative error after
    applying it; grids[k-1] (when requested) holds the full per-pivot
    error landscape of step k, NaN at excluded pivots.
    """

    ranks: tuple[GeneticRankResult, ...]
    grids: tuple[np.ndarray, ...] | None = None


def genetic_search(
    a: np.ndarray,
    k_max: int,
    cap: int = GENETIC_CAP_DEFAULT,
    return_grids: bool = False,
) -> GeneticSearchResult:
    """Greedy exhaustive pivot minimization on a small dense matrix.

    At every rank each unused (i, j) pair is tried as the next cross pivot
    and the pair minimizing the resulting dense Frobenius error wins, ties
    going to the lexicographically smallest pair.  Pivots below 1e-12
    times max|a_ij| are skipped.  Crosses are scaled exactly like skeleton
    columns, so errors compare bit-for-bit with skeleton reconstructions.

    Globally optimal per rank given the previous picks, hence a lower
    envelope for any single-pivot-per-rank strategy; exponential cost is
    avoided by never reconsidering earlier ranks.
    """
    a = np.asarray(a, dtype=float)
    n, m = a.shape
    if n > cap or m > cap:
        raise DenseCapExceededError(f"{n}x{m} exceeds genetic cap of {cap}")
    fro = float(np.linalg.norm(a))
    if fro == 0.0:
        raise ValueError("zero matrix has no relative error")
    floor = 1e-12 * float(np.abs(a).max())
    residual = a.copy()
    used_rows = np.zeros(n, dtype=bool)
    used_cols = np.zeros(m, dtype=bool)
    results: list[GeneticRankResult] = []
    grids: list[np.ndarray] = []
    for k in range(1, min(k_max, n, m) + 1):
        best_err = math.inf
        best: tuple[int, int, np.ndarray, np.ndarray] | None = None
        grid = np.full((n, m), np.nan) if return_grids else None
        for i in range(n):
            if used_rows[i]:
                continue
            for j in range(m):
                if used_cols[j]:
                    continue
                pivot = residual[i, j]
                if abs(pivot) < floor:
                    continue
                scale = math.sqrt(abs(pivot))
                sign = 1.0 if pivot > 0.0 else -1.0
                u = sign * residual[:, j] / scale
                v = residual[i, :] / scale
                err = float(np.linalg.norm(residual - np.outer(u, v)))
                if grid is not None:
                    grid[i, j] = err / fro
                if err < best_err:
                    best_err = err
                    best = (i, j, u, v)
        if best is None:
            break
        i, j, u, v = best
        residual = residual - np.outer(u, v)
        used_rows[i] = True
        used_cols[j] = True
        results.append(GeneticRankResult(k, (i, j), best_err / fro))
        if grid is not None:
            grids.append(grid)
    return GeneticSearchResult(
        ranks=tuple(results),
        grids=tuple(grids) if return_grids else None,
    )
