"""Statistical comparison of pivot strategies over random cloud pairs.

Each realization draws a fresh cloud pair, runs the classical and the
geometry-aided method on the same clouds, and measures true relative
errors at every rank against the dense matrix, with the truncated SVD as
the per-realization optimum.  Because relative errors are log-normally
distributed across realizations, statistics are taken on log10 errors;
gains are aggregated geometrically.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._version import __version__
from .acagp import GpOptions, aca_gp
from .geometry import place_clouds
from .kernel import KernelHandle
from .lowrank import Skeleton, StoppingParams, aca
from .oracle import InfiniteGainError, gain, svd_rank_errors

__all__ = [
    "ExperimentConfig",
    "RankStats",
    "RealizationResult",
    "SweepPoint",
    "aggregate",
    "epsilon_r_rule",
    "render_benchmark_csv",
    "render_sweep_csv",
    "run_benchmark",
    "run_eps_sweep",
    "run_realization",
    "run_realizations",
]

METHODS = ("aca", "acagp", "svd")

# Practically unreachable residual tolerance: benchmark runs always
# proceed to k_max so every rank gets an error sample.
RUN_TO_RANK_EPSILON = 1e-30

# log10 guard for exactly-zero errors or gains (never hit in practice).
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark setting; defaults give the desk-scale reference run.

    Clouds are drawn in xi x 1 rectangles, n points against m, separated
    to target_dist.  Realization r uses seed base_seed + r for placement
    and for both methods, so any realization can be reproduced alone.
    """

    xi: float = 1.0
    n: int = 200
    m: int = 200
    target_dist: float = 1.5
    realizations: int = 100
    k_max: int = 10
    epsilon_r: float = 0.25
    base_seed: int = 42
    eta: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.xi <= 1.0:
            raise ValueError("xi must lie in (0, 1]")
        if self.n < 1 or self.m < 1:
            raise ValueError("cloud sizes must be at least 1")
        if self.target_dist <= 0.0:
            raise ValueError("target_dist must be positive")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if not 0.0 < self.epsilon_r <= 1.0:
            raise ValueError("epsilon_r must lie in (0, 1]")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True, eq=False)
class RealizationResult:
    """Per-rank outcomes of one cloud draw (arrays of length k_max)."""

    index: int
    theta: float
    errors: dict[str, np.ndarray]
    eval_counts: dict[str, np.ndarray]
    gains: np.ndarray  # NaN where the gain is unbounded
    inf_gains: np.ndarray
    central_row_count: int
    central_col_count: int


@dataclass(frozen=True, eq=False)
class RankStats:
    """Aggregated statistics for one rank.

    e_log_mean/e_log_std are mean and population standard deviation of
    log10 relative errors per method.  gain_log_mean is the geometric
    mean of the finite gains (None when no finite gain exists);
    gain_log_std stays in log10 units.  Unbounded gains are excluded and
    counted in inf_gain_count.
    """

    rank: int
    e_log_mean: dict[str, float]
    e_log_std: dict[str, float]
    gain_log_mean: float | None
    gain_log_std: float | None
    inf_gain_count: int
    kernel_evals_mean: dict[str, float]


@dataclass(frozen=True)
class SweepPoint:
    """Gain statistics of one (epsilon_r, rank) cell of a sweep."""

    epsilon_r: float
    rank: int
    gain_log_mean: float | None
    gain_log_std: float | None
    inf_gain_count: int


def epsilon_r_rule(k_max: int, cloud_size: int) -> float:
    """Rule-of-thumb central radius fraction 2*sqrt(k_max/cloud_size)
    (callers clamp to 1)."""
    if k_max < 1 or cloud_size < 1:
        raise ValueError("k_max and cloud_size must be positive")
    return 2.0 * math.sqrt(k_max / cloud_size)


def _per_rank_errors(a: np.ndarray, skeleton: Skeleton, k_max: int) -> np.ndarray:
    """True relative error after each of the first k_max crosses.

    Ranks beyond the skeleton's keep the final error (early termination).
    """
    fro = float(np.linalg.norm(a))
    residual = a.copy()
    out = np.empty(k_max)
    for l in range(k_max):
        if l < skeleton.rank:
            residual -= np.outer(skeleton.u_matrix[:, l], skeleton.v_matrix[:, l])
        out[l] = float(np.linalg.norm(residual)) / fro
    return out


def _per_rank_counts(skeleton: Skeleton, k_max: int) -> np.ndarray:
    counts = list(skeleton.rank_eval_counts[:k_max])
    pad = counts[-1] if counts else 0
    counts += [pad] * (k_max - len(counts))
    return np.asarray(counts, dtype=np.int64)


def run_realization(config: ExperimentConfig, index: int) -> RealizationResult:
    """Draw, place, approximate and measure one cloud pair.

    A single RNG stream seeded with base_seed + index drives placement,
    then the classical run, then the geometry-aided run; both methods see
    identical clouds.  Kernel evaluations are counted per method on
    separate handles.
    """
    rng = np.random.default_rng(config.base_seed + index)
    x, y, theta = place_clouds(
        config.xi, config.n, config.m, config.target_dist, rng
    )
    k_max = min(config.k_max, config.n, config.m)
    stop = StoppingParams(epsilon=RUN_TO_RANK_EPSILON, k_max=k_max)
    kern_aca = KernelHandle()
    skel_aca = aca(x, y, kern_aca, stop, rng)
    kern_gp = KernelHandle()
    skel_gp = aca_gp(
        x, y, kern_gp, stop, GpOptions(epsilon_r=config.epsilon_r), rng=rng
    )
    kern_dense = KernelHandle()
    a = kern_dense.assemble_dense(x, y)
    e_svd = svd_rank_errors(a, k_max)
    errors = {
        "aca": _per_rank_errors(a, skel_aca, k_max),
        "acagp": _per_rank_errors(a, skel_gp, k_max),
        "svd": e_svd,
    }
    eval_counts = {
        "aca": _per_rank_counts(skel_aca, k_max),
        "acagp": _per_rank_counts(skel_gp, k_max),
        "svd": np.full(k_max, len(x) * len(y), dtype=np.int64),
    }
    gains = np.empty(k_max)
    inf_gains = np.zeros(k_max, dtype=bool)
    for l in range(k_max):
        try:
            gains[l] = gain(errors["aca"][l], errors["acagp"][l], e_svd[l])
        except InfiniteGainError:
            gains[l] = np.nan
            inf_gains[l] = True
    return RealizationResult(
        index=index,
        theta=theta,
        errors=errors,
        eval_counts=eval_counts,
        gains=gains,
        inf_gains=inf_gains,
        central_row_count=skel_gp.central_row_count,
        central_col_count=skel_gp.central_col_count,
    )


def run_realizations(
    config: ExperimentConfig, threads: int | None = None
) -> list[RealizationResult]:
    """All realizations of a config, in index order.

    threads=None uses all cores.  Results are deterministic functions of
    (config, index), so the thread count never changes the output list.
    """
    indices = range(config.realizations)
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1:
        return [run_realization(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_realization(config, i), indices))


def aggregate(results: list[RealizationResult]) -> list[RankStats]:
    """Log-domain statistics per rank over a set of realizations.

    Concatenation-safe: aggregating the union of two result lists equals
    aggregating all results at once.
    """
    if not results:
        raise ValueError("nothing to aggregate")
    k_max = results[0].gains.shape[0]
    stats: list[RankStats] = []
    for l in range(k_max):
        e_log_mean: dict[str, float] = {}
        e_log_std: dict[str, float] = {}
        evals_mean: dict[str, float] = {}
        for method in METHODS:
            logs = np.log10(
                np.maximum([r.errors[method][l] for r in results], LOG_FLOOR)
            )
            e_log_mean[method] = float(np.mean(logs))
            e_log_std[method] = float(np.std(logs))
            evals_mean[method] = float(
                np.mean([r.eval_counts[method][l] for r in results])
            )
        gains = np.array([r.gains[l] for r in results])
        finite = gains[~np.isnan(gains)]
        inf_count = int(sum(bool(r.inf_gains[l]) for r in results))
        if finite.size:
            glogs = np.log10(np.maximum(finite, LOG_FLOOR))
            gain_log_mean: float | None = float(10.0 ** np.mean(glogs))
            gain_log_std: float | None = float(np.std(glogs))
        else:
            gain_log_mean = None
            gain_log_std = None
        stats.append(
            RankStats(
                rank=l + 1,
                e_log_mean=e_log_mean,
                e_log_std=e_log_std,
                gain_log_mean=gain_log_mean,
                gain_log_std=gain_log_std,
                inf_gain_count=inf_count,
                kernel_evals_mean=evals_mean,
            )
        )
    return stats


def run_benchmark(
    config: ExperimentConfig, threads: int | None = None
) -> list[RankStats]:
    """Aggregate statistics over config.realizations cloud draws."""
    return aggregate(run_realizations(config, threads))


def run_eps_sweep(
    config: ExperimentConfig,
    eps_values: list[float],
    threads: int | None = None,
) -> list[SweepPoint]:
    """Re-run the benchmark over a grid of central radius fractions.

    Every grid value reuses the same per-realization seeds, so cloud
    draws and the classical runs are shared and only the geometry-aided
    candidate pools vary.
    """
    if not eps_values:
        raise ValueError("empty epsilon_r grid")
    points: list[SweepPoint] = []
    for eps in eps_values:
        stats = run_benchmark(replace(config, epsilon_r=eps), threads)
        points.extend(
            SweepPoint(
                epsilon_r=eps,
                rank=s.rank,
                gain_log_mean=s.gain_log_mean,
                gain_log_std=s.gain_log_std,
                inf_gain_count=s.inf_gain_count,
            )
            for s in stats
        )
    return points


# --- CSV ---------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.9g}"


def config_echo(config: ExperimentConfig) -> str:
    """Resolved config on one line, defaults included."""
    return (
        f"xi={_fmt(config.xi)} n={config.n} m={config.m}"
        f" target_dist={_fmt(config.target_dist)}"
        f" realizations={config.realizations} k_max={config.k_max}"
        f" epsilon_r={_fmt(config.epsilon_r)} base_seed={config.base_seed}"
        f" eta={_fmt(config.eta)}"
    )


def _csv_header(config: ExperimentConfig) -> list[str]:
    return [
        f"# acakit {__version__}",
        f"# config: {config_echo(config)}",
        f"# seed: {config.base_seed}",
    ]


def _gain_cells(
    gain_log_mean: float | None, gain_log_std: float | None, inf_count: int
) -> tuple[str, str, str]:
    if gain_log_mean is None:
        mean_cell = "inf" if inf_count > 0 else ""
        std_cell = ""
    else:
        mean_cell = _fmt(gain_log_mean)
        std_cell = _fmt(gain_log_std)
    return mean_cell, std_cell, str(inf_count)


def render_benchmark_csv(stats: list[RankStats], config: ExperimentConfig) -> str:
    """One row per (rank, method); gain columns only on acagp rows."""
    lines = _csv_header(config)
    lines.append(
        "rank,method,e_log_mean,e_log_std,gain_log_mean,gain_log_std,"
        "inf_gain_count,kernel_evals_mean"
    )
    for s in stats:
        for method in METHODS:
            if method == "acagp":
                gm, gs, ic = _gain_cells(
                    s.gain_log_mean, s.gain_log_std, s.inf_gain_count
                )
            else:
                gm, gs, ic = "", "", ""
            lines.append(
                f"{s.rank},{method},{_fmt(s.e_log_mean[method])},"
                f"{_fmt(s.e_log_std[method])},{gm},{gs},{ic},"
                f"{_fmt(s.kernel_evals_mean[method])}"
            )
    return "\n".join(lines) + "\n"


def render_sweep_csv(points: list[SweepPoint], config: ExperimentConfig) -> str:
    lines = _csv_header(config)
    lines.append("epsilon_r,rank,gain_log_mean,gain_log_std,inf_gain_count")
    for p in points:
        gm, gs, ic = _gain_cells(p.gain_log_mean, p.gain_log_std, p.inf_gain_count)
        lines.append(f"{_fmt(p.epsilon_r)},{p.rank},{gm},{gs},{ic}")
    return "\n".join(lines) + "\n"
