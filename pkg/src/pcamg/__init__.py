"""pcamg: path-cover adaptive algebraic multigrid for weighted graph
Laplacians, with an unsmoothed-aggregation baseline and a benchmark CLI."""

from .sparse import (
    SparseMatrix,
    GraphMeta,
    spmv,
    galerkin_product,
    square_pattern,
    laplacian_from_adjacency,
    adjacency_from_laplacian,
    gauss_seidel,
    project_out_constant,
)
from .graphs import (
    EdgeList,
    RhsKind,
    ParseError,
    grid_laplacian,
    ring_graph,
    read_matrix_market,
    read_edge_list,
    write_matrix_market,
    preprocess,
    make_rhs,
)
from .coarsening import (
    PathCover,
    Aggregation,
    mwm_aggregate,
    path_cover,
    cover_weight,
    reweight,
    path_cover_aggregate,
    aggregation_matrix,
    shorten_cover,
)
from .multigrid import (
    CycleParams,
    Hierarchy,
    CoarseSolver,
    mwm_setup,
    pc_setup,
    v_cycle,
    w_cycle,
    mg_pcg,
    composite_apply,
    coarse_solve,
    operator_complexity,
)
from .adaptive import (
    AdaptiveConfig,
    SolveReport,
    DivergenceError,
    THRESHOLD_PRESETS,
    approximate_smooth_error,
    solve_general,
    solve_homogeneous,
    baseline_uaamg,
)

__version__ = "0.1.0"
