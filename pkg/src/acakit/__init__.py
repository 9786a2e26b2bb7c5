"""Low-rank cross approximation of kernel interaction matrices between
planar point clouds, with geometry-aided pivot selection, reference
oracles and a statistical benchmark harness."""
from ._version import __version__
from .acagp import (
    CentralSubsets,
    CircleHeuristics,
    GpOptions,
    aca_gp,
    central_subset,
    default_epsilon_r,
    first_pivot,
    select_higher,
    select_rank2,
    select_rank3,
)
from .experiments import (
    ExperimentConfig,
    RankStats,
    RealizationResult,
    aggregate,
    epsilon_r_rule,
    run_benchmark,
    run_eps_sweep,
    run_realization,
    run_realizations,
)
from .geometry import (
    AdmissibilityParams,
    Circle,
    DegenerateGeometryError,
    Point2,
    PointCloud,
    barycenter,
    bounding_aspect_ratio,
    circumcircle,
    cloud_from_json,
    cloud_to_json,
    conjugate_circle,
    diameter_estimate,
    generate_cloud,
    is_admissible,
    place_clouds,
    point_circle_distance,
    relaxed_distance,
    true_distance,
)
from .kernel import (
    DenseCapExceededError,
    KernelHandle,
    KernelKind,
    SingularEvaluationError,
)
from .lowrank import (
    PivotRecord,
    PivotsExhaustedError,
    Skeleton,
    StoppingParams,
    aca,
    compression_ratio,
    default_max_rank,
    dense,
    pivot_row_rule,
    residual_entry,
    skeleton_to_json,
    update_norms,
)
from .oracle import (
    DegenerateSvdError,
    ErrorReport,
    GeneticSearchResult,
    InfiniteGainError,
    gain,
    genetic_search,
    relative_error,
    svd_rank_errors,
    tilde_error,
)

__all__ = [name for name in dir() if not name.startswith("_")]
