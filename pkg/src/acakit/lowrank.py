"""Rank-revealing cross approximation of kernel interaction matrices.

A rank-k skeleton stores scaled cross vectors U (n x k) and V (m x k) such
that A ~= U V^T, built one residual row/column pair at a time.  Only k rows
and k columns of the matrix are ever evaluated; the Frobenius norm of the
approximant is tracked by a recursion instead of forming U V^T.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import PointCloud
from .kernel import KernelHandle

__all__ = [
    "NormUpdate",
    "PivotRecord",
    "PivotsExhaustedError",
    "Skeleton",
    "StoppingParams",
    "aca",
    "compression_ratio",
    "default_max_rank",
    "dense",
    "pivot_row_rule",
    "residual_entry",
    "skeleton_to_json",
    "update_norms",
]

# Pivots smaller than this fraction of the first pivot terminate a run.
PIVOT_FLOOR_REL = 1e-12


class PivotsExhaustedError(RuntimeError):
    """No unused pivot candidates remain."""


@dataclass(frozen=True)
class StoppingParams:
    """Termination controls for a cross-approximation run.

    Args:
        epsilon: relative residual tolerance; the run stops once the norm
            of the last added cross drops below epsilon times the
            approximant norm.
        k_max: rank cap; defaults to half the smaller cloud size and is
            always clamped to min(n, m).
        epsilon_p: absolute pivot floor.  When None, pivots are compared
            against PIVOT_FLOOR_REL times the first pivot magnitude.
    """

    epsilon: float
    k_max: int | None = None
    epsilon_p: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError("epsilon must be finite and positive")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.epsilon_p is not None and self.epsilon_p < 0.0:
            raise ValueError("epsilon_p must be non-negative")


@dataclass(frozen=True)
class PivotRecord:
    """One accepted pivot: placement in the run plus how it was chosen."""

    rank: int
    i: int
    j: int
    pivot_value: float
    selector: str

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "i": self.i,
            "j": self.j,
            "pivot_value": self.pivot_value,
            "selector": self.selector,
        }


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Rank-k cross approximation A ~= U V^T.

    Column l of U is sign(p_l) * u~_l / sqrt(|p_l|) and column l of V is
    v~_l / sqrt(|p_l|), where u~_l, v~_l are the residual column/row of the
    l-th cross and p_l its pivot value.  Pivot rows and columns are
    distinct by construction.
    """

    u_matrix: np.ndarray  # (n, k)
    v_matrix: np.ndarray  # (m, k)
    pivot_rows: tuple[int, ...]
    pivot_cols: tuple[int, ...]
    pivot_values: np.ndarray  # (k,)
    approx_norm: float
    residual_norm: float
    eval_count_snapshot: int
    pivot_trace: tuple[PivotRecord, ...] = ()
    rank_eval_counts: tuple[int, ...] = ()
    norm_clamped: bool = False
    central_row_count: int = 0
    central_col_count: int = 0

    @property
    def rank(self) -> int:
        return self.u_matrix.shape[1]


class NormUpdate(NamedTuple):
    approx_norm: float
    residual_norm: float
    clamped: bool


def default_max_rank(n: int, m: int) -> int:
    """Default rank cap: half the smaller cloud size, at least 1."""
    return max(1, min(n, m) // 2)


def _resolve_k_max(stop: StoppingParams, n: int, m: int) -> int:
    k = stop.k_max if stop.k_max is not None else default_max_rank(n, m)
    return min(k, n, m)


def update_norms(
    approx_norm: float,
    u_stack: np.ndarray,
    v_stack: np.ndarray,
    u_new: np.ndarray,
    v_new: np.ndarray,
) -> NormUpdate:
    """Advance the Frobenius norm of the approximant by one cross.

    With A'_k = A'_{k-1} + u_k v_k^T,

        |A'_k|^2 = |A'_{k-1}|^2 + 2 sum_l (u_k.u_l)(v_l.v_k) + |u_k|^2 |v_k|^2,

    so the norm update costs O(k(n+m)) instead of O(nm).  Floating-point
    cancellation can push the radicand below zero; it is clamped to zero
    and flagged.
    """
    norm_u = float(np.linalg.norm(u_new))
    norm_v = float(np.linalg.norm(v_new))
    residual_norm = norm_u * norm_v
    cross = 2.0 * float((u_stack.T @ u_new) @ (v_stack.T @ v_new))
    radicand = approx_norm * approx_norm + cross + residual_norm * residual_norm
    clamped = radicand < 0.0
    if clamped:
        radicand = 0.0
    return NormUpdate(math.sqrt(radicand), residual_norm, clamped)


def pivot_row_rule(
    used_rows: np.ndarray,
    prev_u: np.ndarray | None,
    rng: np.random.Generator,
) -> int:
    """Next pivot row for the classical method.

    The first row is drawn uniformly from the unused rows; afterwards the
    unused row with the largest entry of the previous scaled column wins,
    ties going to the smallest index.
    """
    unused = np.flatnonzero(~used_rows)
    if unused.size == 0:
        raise PivotsExhaustedError("all rows used")
    if prev_u is None:
        return int(unused[rng.integers(unused.size)])
    scores = np.abs(prev_u).copy()
    scores[used_rows] = -1.0
    return int(np.argmax(scores))


class _SkeletonBuilder:
    """Incremental cross-approximation state shared by every pivot strategy.

    Holds the growing U/V factors, residual row/column evaluation against
    them, the norm recursion, and the bookkeeping that ends up on the
    final Skeleton.
    """

    def __init__(
        self, x: PointCloud, y: PointCloud, kernel: KernelHandle, k_cap: int
    ):
        self.x = x
        self.y = y
        self.kernel = kernel
        n, m = len(x), len(y)
        self._u = np.zeros((n, k_cap))
        self._v = np.zeros((m, k_cap))
        self.rank = 0
        self.pivot_rows: list[int] = []
        self.pivot_cols: list[int] = []
        self.pivot_values: list[float] = []
        self.approx_norm = 0.0
        self.residual_norm = math.inf
        self.norm_clamped = False
        self.trace: list[PivotRecord] = []
        self.rank_eval_counts: list[int] = []
        self._start_count = kernel.eval_count

    @property
    def u_stack(self) -> np.ndarray:
        return self._u[:, : self.rank]

    @property
    def v_stack(self) -> np.ndarray:
        return self._v[:, : self.rank]

    def residual_row(self, i: int) -> np.ndarray:
        """Row i of the current residual A - U V^T (one row of kernel evals)."""
        row = self.kernel.eval_row(self.x, self.y, i)
        if self.rank:
            row = row - self.v_stack @ self._u[i, : self.rank]
        return row

    def residual_col(self, j: int) -> np.ndarray:
        col = self.kernel.eval_col(self.x, self.y, j)
        if self.rank:
            col = col - self.u_stack @ self._v[j, : self.rank]
        return col

    def residual_probe(self, i: int, j: int) -> float:
        """Single residual entry (one kernel evaluation)."""
        value = self.kernel.eval(self.x.points[i], self.y.points[j])
        if self.rank:
            value -= float(self._u[i, : self.rank] @ self._v[j, : self.rank])
        return value

    def residual_row_subset(self, i: int, cols: np.ndarray) -> np.ndarray:
        values = self.kernel.eval_row_subset(self.x, self.y, i, cols)
        if self.rank:
            values = values - self._v[cols, : self.rank] @ self._u[i, : self.rank]
        return values

    def residual_col_subset(self, j: int, rows: np.ndarray) -> np.ndarray:
        values = self.kernel.eval_col_subset(self.x, self.y, j, rows)
        if self.rank:
            values = values - self._u[rows, : self.rank] @ self._v[j, : self.rank]
        return values

    def pivot_floor(self, explicit: float | None) -> float:
        """Pivot magnitudes at or below this value stop a run."""
        if explicit is not None:
            return explicit
        if not self.pivot_values:
            return 0.0
        return PIVOT_FLOOR_REL * abs(self.pivot_values[0])

    def add_cross(
        self,
        i: int,
        j: int,
        pivot: float,
        residual_row: np.ndarray,
        residual_col: np.ndarray,
        selector: str,
    ) -> None:
        scale = math.sqrt(abs(pivot))
        sign = 1.0 if pivot > 0.0 else -1.0
        u_new = sign * residual_col / scale
        v_new = residual_row / scale
        upd = update_norms(self.approx_norm, self.u_stack, self.v_stack, u_new, v_new)
        self._u[:, self.rank] = u_new
        self._v[:, self.rank] = v_new
        self.approx_norm = upd.approx_norm
        self.residual_norm = upd.residual_norm
        self.norm_clamped |= upd.clamped
        self.rank += 1
        self.pivot_rows.append(int(i))
        self.pivot_cols.append(int(j))
        self.pivot_values.append(float(pivot))
        self.trace.append(
            PivotRecord(self.rank, int(i), int(j), float(pivot), selector)
        )
        self.rank_eval_counts.append(self.kernel.eval_count - self._start_count)

    def converged(self, epsilon: float) -> bool:
        return self.residual_norm <= epsilon * self.approx_norm

    def build(self, central_rows: int = 0, central_cols: int = 0) -> Skeleton:
        u = self._u[:, : self.rank].copy()
        v = self._v[:, : self.rank].copy()
        u.setflags(write=False)
        v.setflags(write=False)
        values = np.array(self.pivot_values)
        values.setflags(write=False)
        return Skeleton(
            u_matrix=u,
            v_matrix=v,
            pivot_rows=tuple(self.pivot_rows),
            pivot_cols=tuple(self.pivot_cols),
            pivot_values=values,
            approx_norm=self.approx_norm,
            residual_norm=self.residual_norm if self.rank else 0.0,
            eval_count_snapshot=self.kernel.eval_count,
            pivot_trace=tuple(self.trace),
            rank_eval_counts=tuple(self.rank_eval_counts),
            norm_clamped=self.norm_clamped,
            central_row_count=central_rows,
            central_col_count=central_cols,
        )


def aca(
    x: PointCloud,
    y: PointCloud,
    kernel: KernelHandle,
    stop: StoppingParams,
    rng: np.random.Generator,
) -> Skeleton:
    """Cross approximation with partially pivoted greedy selection.

    Each step evaluates one residual row (chosen by pivot_row_rule), takes
    the largest unused entry as the pivot column, evaluates that residual
    column, and appends the scaled cross.  A row whose remaining entries
    all sit at the pivot floor is skipped without spending a rank.  Rank k
    costs exactly k(n+m) kernel evaluations.

    Returns the skeleton accumulated so far when rows or columns run out.
    """
    n, m = len(x), len(y)
    k_max = _resolve_k_max(stop, n, m)
    builder = _SkeletonBuilder(x, y, kernel, k_max)
    used_rows = np.zeros(n, dtype=bool)
    used_cols = np.zeros(m, dtype=bool)
    prev_u: np.ndarray | None = None
    while builder.rank < k_max and not used_cols.all():
        try:
            i_k = pivot_row_rule(used_rows, prev_u, rng)
        except PivotsExhaustedError:
            break
        row = builder.residual_row(i_k)
        used_rows[i_k] = True
        scores = np.abs(row)
        scores[used_cols] = -1.0
        j_k = int(np.argmax(scores))
        pivot = float(row[j_k])
        if abs(pivot) <= builder.pivot_floor(stop.epsilon_p):
            continue  # residual row vanishes; try another row
        col = builder.residual_col(j_k)
        used_cols[j_k] = True
        selector = "random" if builder.rank == 0 else "partial"
        builder.add_cross(i_k, j_k, pivot, row, col, selector)
        prev_u = builder._u[:, builder.rank - 1]
        if builder.converged(stop.epsilon):
            break
    return builder.build()


def residual_entry(
    skeleton: Skeleton,
    i: int,
    j: int,
    kernel: KernelHandle,
    x: PointCloud,
    y: PointCloud,
) -> float:
    """a_ij - (U V^T)_ij, at the cost of a single kernel evaluation."""
    value = kernel.eval(x.points[i], y.points[j])
    return value - float(skeleton.u_matrix[i] @ skeleton.v_matrix[j])


def compression_ratio(skeleton: Skeleton, n: int, m: int) -> float:
    """Stored-entry fraction k(n+m)/(n*m)."""
    return skeleton.rank * (n + m) / (n * m)


def dense(skeleton: Skeleton) -> np.ndarray:
    """Materialize U V^T (testing and small problems only)."""
    return skeleton.u_matrix @ skeleton.v_matrix.T


def skeleton_to_json(skeleton: Skeleton, meta: dict | None = None) -> str:
    """Serialize a skeleton; U and V are stored as k vectors each."""
    payload: dict = {}
    if meta is not None:
        payload["meta"] = meta
    payload.update(
        {
            "rank": skeleton.rank,
            "pivot_rows": list(skeleton.pivot_rows),
            "pivot_cols": list(skeleton.pivot_cols),
            "U": skeleton.u_matrix.T.tolist(),
            "V": skeleton.v_matrix.T.tolist(),
            "approx_norm": skeleton.approx_norm,
            "pivot_trace": [rec.as_dict() for rec in skeleton.pivot_trace],
        }
    )
    return json.dumps(payload)
