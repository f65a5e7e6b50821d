"""Multilevel hierarchies and cycles: matching-based and path-cover-based
setup, V- and W-cycles, multigrid-preconditioned CG, the palindromic
composite preconditioner, and the coarsest-level direct solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .coarsening import (
    aggregation_matrix,
    mwm_aggregate,
    path_cover,
    path_cover_aggregate,
    reweight,
    shorten_cover,
    PathCover,
)
from .sparse import (
    SparseMatrix,
    adjacency_from_laplacian,
    galerkin_product,
    gauss_seidel,
    project_out_constant,
)

__all__ = [
    "CycleParams",
    "Hierarchy",
    "CoarseSolver",
    "mwm_setup",
    "pc_setup",
    "v_cycle",
    "w_cycle",
    "mg_pcg",
    "composite_apply",
    "coarse_solve",
    "operator_complexity",
]

log = logging.getLogger("pcamg")


@dataclass
class CycleParams:
    """Knobs for hierarchy depth and smoothing effort.

    Defaults run two forward pre-sweeps and two backward post-sweeps; the
    palindromic schedule keeps every cycle symmetric, which the CG and
    composite preconditioning paths rely on.
    """

    pre_sweeps: int = 2
    post_sweeps: int = 2
    coarse_size: int = 100
    max_levels: int = 30

    def __post_init__(self):
        if self.pre_sweeps < 1 or self.post_sweeps < 1:
            raise ValueError("pre_sweeps and post_sweeps must be >= 1")
        if self.coarse_size < 2:
            raise ValueError("coarse_size must be >= 2")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


class CoarseSolver:
    """Dense factorization of a coarsest-level operator.

    Operators with (numerically) zero row sums are singular graph
    Laplacians: those are grounded at vertex 0 and solutions are projected
    onto the zero-mean subspace. Operators whose row sums are nonzero (the
    smooth-vector-weighted coarse operators) are solved as-is so that their
    near-null direction, which encodes the adapted smooth component, is
    corrected rather than discarded. A defective factorization falls back
    to a truncated SVD pseudo-inverse.
    """

    def __init__(self, A: SparseMatrix):
        dense = A.to_dense()
        n = dense.shape[0]
        scale = float(np.max(np.abs(dense))) if dense.size else 1.0
        scale = max(scale, 1e-300)
        rowsums = dense @ np.ones(n)
        self.grounded = bool(np.max(np.abs(rowsums), initial=0.0) <= 1e-9 * scale)
        self._svd = None
        if self.grounded:
            g = dense.copy()
            g[0, :] = 0.0
            g[:, 0] = 0.0
            g[0, 0] = 1.0
            lu, piv = sla.lu_factor(g)
            if np.min(np.abs(np.diag(lu))) <= 1e-12 * scale:
                raise ValueError("grounded coarse matrix is singular (disconnected graph?)")
            self._lu = (lu, piv)
        else:
            lu, piv = sla.lu_factor(dense)
            if np.min(np.abs(np.diag(lu))) <= 1e-14 * scale or not np.all(np.isfinite(lu)):
                u, s, vt = np.linalg.svd(dense)
                cutoff = 1e-13 * (s[0] if s.size else 1.0)
                inv = np.where(s > cutoff, 1.0 / np.maximum(s, 1e-300), 0.0)
                self._svd = (u, inv, vt)
                self._lu = None
            else:
                self._lu = (lu, piv)

    def apply(self, b: np.ndarray) -> np.ndarray:
        if self.grounded:
            rhs = b.copy()
            rhs[0] = 0.0
            x = sla.lu_solve(self._lu, rhs)
            return project_out_constant(x)
        if self._svd is not None:
            u, inv, vt = self._svd
            return vt.T @ (inv * (u.T @ b))
        return sla.lu_solve(self._lu, b)


class Hierarchy:
    """Operators A_1..A_L, prolongations P_1..P_{L-1}, and the coarsest
    solver, with scipy handles cached for the cycling hot path."""

    def __init__(self, operators, prolongations, params: CycleParams):
        if len(operators) != len(prolongations) + 1:
            raise ValueError("need exactly one prolongation per coarse level")
        self.operators = operators
        self.prolongations = prolongations
        self.params = params
        self.coarse_solver = CoarseSolver(operators[-1])
        self._ops = [A.to_scipy() for A in operators]
        self._pro = [P.to_scipy() for P in prolongations]
        self._res = [P.to_scipy().T.tocsr() for P in prolongations]

    @property
    def n_levels(self) -> int:
        return len(self.operators)

    def level_sizes(self):
        return [A.n_rows for A in self.operators]


def operator_complexity(h: Hierarchy) -> float:
    """Total stored nonzeros across levels over the finest level's nonzeros."""
    return sum(A.nnz for A in h.operators) / h.operators[0].nnz


def mwm_setup(A: SparseMatrix, params: CycleParams | None = None) -> Hierarchy:
    """Multilevel hierarchy by recursive maximal weighted matching with
    boolean prolongations and Galerkin coarse operators."""
    params = params or CycleParams()
    operators = [A]
    prolongations = []
    while operators[-1].n_rows > params.coarse_size and len(operators) < params.max_levels:
        current = operators[-1]
        W = adjacency_from_laplacian(current)
        agg = mwm_aggregate(W)
        if agg.num_agg >= current.n_rows:
            raise RuntimeError(
                f"coarsening stagnated at {current.n_rows} vertices (no pair matched)"
            )
        P = aggregation_matrix(agg)
        operators.append(galerkin_product(P, current))
        prolongations.append(P)
    h = Hierarchy(operators, prolongations, params)
    log.debug("mwm_setup: levels=%s oc=%.3f", h.level_sizes(), operator_complexity(h))
    return h


def _sanitize_adjacency(M: SparseMatrix) -> SparseMatrix:
    """Coarse reweighted operator -> usable adjacency: absolute values,
    zero diagonal, explicit zeros dropped."""
    csr = M.to_scipy().copy()
    csr.data = np.abs(csr.data)
    csr.setdiag(0.0)
    csr.eliminate_zeros()
    return SparseMatrix.from_scipy(csr)


def _split_missing_edges(cover: PathCover, W: SparseMatrix) -> PathCover:
    """Split coarse paths wherever a consecutive pair is no longer a stored
    edge (possible after exact cancellation in the triple product)."""
    out = []
    for path in cover.paths:
        segment = [int(path[0])]
        for a, b in zip(path[:-1].tolist(), path[1:].tolist()):
            lo, hi = W.row_offsets[a], W.row_offsets[a + 1]
            cols = W.col_indices[lo:hi]
            pos = np.searchsorted(cols, b)
            if pos < cols.shape[0] and cols[pos] == b:
                segment.append(b)
            else:
                if len(segment) >= 2:
                    out.append(np.asarray(segment, dtype=np.int64))
                segment = [b]
        if len(segment) >= 2:
            out.append(np.asarray(segment, dtype=np.int64))
    return PathCover(out)


def pc_setup(
    A: SparseMatrix,
    e: np.ndarray,
    params: CycleParams | None = None,
    a2_row_cap=None,
) -> Hierarchy:
    """Hierarchy adapted to the smooth vector e.

    The graph is reweighted on the squared sparsity pattern by closeness of
    e, covered by vertex-disjoint paths, and aggregated along the paths.
    The level-1 prolongation carries e (so e is in its range); deeper
    levels reuse the shortened cover with boolean prolongations.
    """
    params = params or CycleParams()
    e = np.asarray(e, dtype=np.float64)
    if e.shape[0] != A.n_rows:
        raise ValueError("e must have one entry per vertex")
    if not np.all(np.isfinite(e)):
        raise ValueError("e must be finite")
    if not np.any(e != 0):
        raise ValueError("e must not be identically zero")

    Wt = reweight(A, e, row_cap=a2_row_cap)
    cover = path_cover(Wt)
    operators = [A]
    prolongations = []
    level = 1
    while operators[-1].n_rows > params.coarse_size and len(operators) < params.max_levels:
        current = operators[-1]
        agg, P = path_cover_aggregate(cover, Wt, level, e if level == 1 else None)
        if agg.num_agg >= current.n_rows:
            raise RuntimeError(
                f"coarsening stagnated at {current.n_rows} vertices (no pair matched)"
            )
        Wt = _sanitize_adjacency(galerkin_product(P, Wt))
        cover = _split_missing_edges(shorten_cover(cover, agg), Wt)
        operators.append(galerkin_product(P, current))
        prolongations.append(P)
        level += 1
    h = Hierarchy(operators, prolongations, params)
    log.debug("pc_setup: levels=%s oc=%.3f", h.level_sizes(), operator_complexity(h))
    return h


def _cycle(h: Hierarchy, level, b, x, params, gamma):
    A = h.operators[level]
    if level == h.n_levels - 1:
        x += h.coarse_solver.apply(b - h._ops[level] @ x)
        return x
    for _ in range(params.pre_sweeps):
        gauss_seidel(A, b, x, "forward")
    residual = b - h._ops[level] @ x
    coarse_b = h._res[level] @ residual
    coarse_x = np.zeros(h.operators[level + 1].n_rows)
    for _ in range(gamma):
        _cycle(h, level + 1, coarse_b, coarse_x, params, gamma)
    x += h._pro[level] @ coarse_x
    for _ in range(params.post_sweeps):
        gauss_seidel(A, b, x, "backward")
    return x


def _check_cycle_args(h, b, x):
    n = h.operators[0].n_rows
    if b.shape[0] != n or x.shape[0] != n:
        raise ValueError(f"b and x must have length {n}")


def v_cycle(h: Hierarchy, b, x, params: CycleParams | None = None) -> np.ndarray:
    """One V-cycle; x is improved in place and returned."""
    b = np.asarray(b, dtype=np.float64)
    _check_cycle_args(h, b, x)
    return _cycle(h, 0, b, x, params or h.params, gamma=1)


def w_cycle(h: Hierarchy, b, x, params: CycleParams | None = None) -> np.ndarray:
    """One W-cycle (two coarse corrections per level); x improved in place."""
    b = np.asarray(b, dtype=np.float64)
    _check_cycle_args(h, b, x)
    return _cycle(h, 0, b, x, params or h.params, gamma=2)


def mg_pcg(A: SparseMatrix, b, x0, precond, iters: int):
    """Exactly `iters` preconditioned CG steps on A x = b.

    precond maps a residual to a preconditioned correction and must be
    symmetric positive definite on the relevant subspace. When A
    annihilates constants the iterates are kept zero-mean. Returns
    (x, breakdown_flag); on breakdown the current iterate is returned.
    """
    As = A.to_scipy()
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x0, dtype=np.float64, copy=True)
    if b.shape[0] != A.n_rows or x.shape[0] != A.n_rows:
        raise ValueError("dimension mismatch in mg_pcg")
    n = A.n_rows
    kills_constants = bool(
        np.max(np.abs(As @ np.ones(n)), initial=0.0)
        <= 1e-9 * max(float(np.max(np.abs(A.values), initial=0.0)), 1e-300)
    )

    r = b - As @ x
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    for _ in range(iters):
        Ap = As @ p
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            return x, True
        alpha = rz / pAp
        x += alpha * p
        if kills_constants:
            x = project_out_constant(x)
        r -= alpha * Ap
        z = precond(r)
        rz_new = float(r @ z)
        if not np.isfinite(rz_new) or rz == 0.0:
            return x, True
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
    return x, False


def composite_apply(hierarchies, r: np.ndarray) -> np.ndarray:
    """Symmetric composite preconditioner over several hierarchies.

    Applies one V-cycle correction per hierarchy in palindromic order
    (1..m then m..1, each hierarchy twice), so the induced error
    propagation is a symmetric product of the per-hierarchy factors.
    """
    hierarchies = list(hierarchies)
    if not hierarchies:
        raise ValueError("composite preconditioner needs at least one hierarchy")
    A = hierarchies[0]._ops[0]
    n = hierarchies[0].operators[0].n_rows
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != n:
        raise ValueError(f"residual must have length {n}")
    x = np.zeros(n)
    first = True
    for h in hierarchies + hierarchies[::-1]:
        defect = r if first else r - A @ x
        x += v_cycle(h, defect, np.zeros(n), h.params)
        first = False
    return x


def coarse_solve(A_L: SparseMatrix, b: np.ndarray) -> np.ndarray:
    """Solve the singular coarsest system by grounding vertex 0.

    Row and column 0 are replaced by the identity, the grounded dense
    system is factorized and solved, and the result is projected onto the
    zero-mean subspace. b must be (numerically) orthogonal to constants.
    """
    dense = A_L.to_dense()
    n = dense.shape[0]
    scale = max(float(np.max(np.abs(dense))) if dense.size else 1.0, 1e-300)
    g = dense.copy()
    g[0, :] = 0.0
    g[:, 0] = 0.0
    g[0, 0] = 1.0
    lu, piv = sla.lu_factor(g)
    if np.min(np.abs(np.diag(lu))) <= 1e-12 * scale:
        raise ValueError("grounded coarse matrix is singular (disconnected graph?)")
    rhs = np.asarray(b, dtype=np.float64).copy()
    if rhs.shape[0] != n:
        raise ValueError(f"b must have length {n}")
    rhs[0] = 0.0
    return project_out_constant(sla.lu_solve((lu, piv), rhs))
