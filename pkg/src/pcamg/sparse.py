"""Sparse CSR storage and the matrix kernels the solver stack is built on:
SpMV, the Galerkin triple product, structural pattern squaring, graph
Laplacian constructors, and Gauss-Seidel relaxation."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import _kernels

__all__ = [
    "SparseMatrix",
    "GraphMeta",
    "spmv",
    "galerkin_product",
    "square_pattern",
    "laplacian_from_adjacency",
    "adjacency_from_laplacian",
    "gauss_seidel",
    "project_out_constant",
]


class SparseMatrix:
    """Immutable compressed sparse-row matrix in canonical form.

    Canonical form means: row_offsets non-decreasing with row_offsets[0] == 0
    and row_offsets[-1] == nnz, column indices strictly increasing within
    each row, and no duplicate (row, col) entries. Symmetric matrices store
    both triangles.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values", "_csr")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values, validate=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._csr = None
        if validate:
            self.validate()

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_scipy(cls, matrix) -> "SparseMatrix":
        """Wrap any scipy sparse matrix, canonicalizing it first."""
        csr = sp.csr_matrix(matrix)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        """Build from triplets; duplicate entries are summed."""
        coo = sp.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n_rows, n_cols)
        )
        return cls.from_scipy(coo)

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, format="csr"))

    # -- views -------------------------------------------------------------

    def to_scipy(self) -> sp.csr_matrix:
        """CSR view sharing this matrix's buffers (do not mutate)."""
        if self._csr is None:
            csr = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets),
                shape=(self.n_rows, self.n_cols),
            )
            self._csr = csr
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    @property
    def nnz(self) -> int:
        return int(self.col_indices.shape[0])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def is_symmetric(self, tol=0.0) -> bool:
        if self.n_rows != self.n_cols:
            return False
        d = self.to_scipy() - self.to_scipy().T
        if d.nnz == 0:
            return True
        return float(np.max(np.abs(d.data))) <= tol

    def validate(self):
        """Raise ValueError unless the matrix is in canonical form."""
        off = self.row_offsets
        if off.shape[0] != self.n_rows + 1:
            raise ValueError("row_offsets must have length n_rows + 1")
        if off[0] != 0 or off[-1] != self.col_indices.shape[0]:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if self.col_indices.shape[0] != self.values.shape[0]:
            raise ValueError("col_indices and values must have equal length")
        if self.col_indices.shape[0]:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing within each row <=> every adjacent pair
            # either increases or sits on a row boundary
            increasing = self.col_indices[1:] > self.col_indices[:-1]
            boundary = np.zeros(self.col_indices.shape[0] - 1, dtype=bool)
            starts = off[1:-1]
            boundary[starts[(starts > 0) & (starts < self.col_indices.shape[0])] - 1] = True
            if not np.all(increasing | boundary):
                raise ValueError("column indices must be strictly increasing per row")

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


class GraphMeta:
    """Cheap per-graph facts derived from a symmetric matrix."""

    __slots__ = ("n_vertices", "n_edges", "weights_positive")

    def __init__(self, n_vertices, n_edges, weights_positive):
        self.n_vertices = int(n_vertices)
        self.n_edges = int(n_edges)
        self.weights_positive = bool(weights_positive)

    @classmethod
    def from_adjacency(cls, W: SparseMatrix) -> "GraphMeta":
        offdiag = W.nnz - np.count_nonzero(W.diagonal())
        return cls(W.n_rows, offdiag // 2, bool(np.all(W.values > 0)))


def _require_square(A: SparseMatrix, name="matrix"):
    if A.n_rows != A.n_cols:
        raise ValueError(f"{name} must be square, got {A.n_rows}x{A.n_cols}")


def spmv(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """y = A @ x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.n_cols:
        raise ValueError(f"dimension mismatch: A has {A.n_cols} columns, x has length {x.shape[0]}")
    return A.to_scipy() @ x


def galerkin_product(P: SparseMatrix, A: SparseMatrix) -> SparseMatrix:
    """Coarse operator P^T A P in canonical form.

    Cancellation noise is pruned: an entry is dropped when its magnitude is
    below 1e-15 times the largest magnitude of both its row and its column,
    which keeps the drop rule symmetric.
    """
    _require_square(A)
    if P.n_rows != A.n_rows:
        raise ValueError(
            f"dimension mismatch: P has {P.n_rows} rows, A is {A.n_rows}x{A.n_cols}"
        )
    Ps = P.to_scipy()
    prod = (Ps.T @ A.to_scipy() @ Ps).tocsr()
    prod.sum_duplicates()
    prod.sort_indices()
    coo = prod.tocoo()
    if coo.nnz:
        absval = np.abs(coo.data)
        rowmax = np.zeros(prod.shape[0])
        np.maximum.at(rowmax, coo.row, absval)
        thresh = 1e-15 * rowmax
        keep = (absval >= thresh[coo.row]) | (absval >= thresh[coo.col])
        pruned = sp.coo_matrix(
            (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=prod.shape
        )
        return SparseMatrix.from_scipy(pruned)
    return SparseMatrix.from_scipy(prod)


def square_pattern(A: SparseMatrix, row_cap=None) -> SparseMatrix:
    """Symmetric boolean matrix with the off-diagonal support of A @ A.

    The product is structural: all stored entries count, values do not.
    With row_cap set, rows that exceed the cap keep only the row_cap
    strongest candidate columns, ranked by one- and two-step walk weight of
    the underlying adjacency; the result is re-symmetrized by union.
    """
    _require_square(A)
    B = A.to_scipy().copy()
    B.data = np.ones_like(B.data)
    S = (B @ B).tocsr()
    S.setdiag(0.0)
    S.eliminate_zeros()
    S.sort_indices()

    if row_cap is not None and row_cap >= 1:
        W = A.to_scipy().copy()
        W.data = np.abs(W.data)
        W.setdiag(0.0)
        W.eliminate_zeros()
        strength = ((W + W @ W).tocsr() + S * 0.0).tocsr()  # align patterns
        strength.sort_indices()
        keep = np.ones(S.nnz, dtype=bool)
        counts = np.diff(S.indptr)
        rows = np.repeat(np.arange(S.shape[0]), counts)
        score = np.zeros(S.nnz)
        # strength's pattern is a superset of S's; pick the aligned values
        for i in np.nonzero(counts > row_cap)[0]:
            lo, hi = S.indptr[i], S.indptr[i + 1]
            cols = S.indices[lo:hi]
            srow = strength.indices[strength.indptr[i]:strength.indptr[i + 1]]
            svals = strength.data[strength.indptr[i]:strength.indptr[i + 1]]
            pos = np.searchsorted(srow, cols)
            score[lo:hi] = svals[pos]
            order = np.argsort(-score[lo:hi], kind="stable")
            keep[lo + order[row_cap:]] = False
        capped = sp.coo_matrix(
            (S.data[keep], (rows[keep], S.indices[keep])), shape=S.shape
        ).tocsr()
        S = capped + capped.T  # union keeps the pattern symmetric

    S.sum_duplicates()
    S.eliminate_zeros()
    S.data = np.ones_like(S.data)
    return SparseMatrix.from_scipy(S)


def laplacian_from_adjacency(W: SparseMatrix) -> SparseMatrix:
    """L = D - W for a symmetric non-negative adjacency with zero diagonal."""
    _require_square(W)
    if W.nnz and np.any(W.values < 0):
        raise ValueError("adjacency weights must be non-negative")
    Ws = W.to_scipy()
    if np.any(Ws.diagonal() != 0):
        raise ValueError("adjacency must have zero diagonal")
    degree = np.asarray(Ws.sum(axis=1)).ravel()
    L = sp.diags(degree, format="csr") - Ws
    return SparseMatrix.from_scipy(L)


def adjacency_from_laplacian(L: SparseMatrix) -> SparseMatrix:
    """Recover W from L = D - W; requires non-positive off-diagonal entries."""
    _require_square(L)
    coo = L.to_scipy().tocoo()
    off = coo.row != coo.col
    if np.any(coo.data[off] > 0):
        raise ValueError("Laplacian off-diagonal entries must be non-positive")
    vals = -coo.data[off]
    nz = vals != 0
    W = sp.coo_matrix(
        (vals[nz], (coo.row[off][nz], coo.col[off][nz])), shape=L.shape
    )
    return SparseMatrix.from_scipy(W)


def gauss_seidel(A: SparseMatrix, b: np.ndarray, x: np.ndarray, direction="forward") -> np.ndarray:
    """One in-place Gauss-Seidel sweep; returns the mutated x.

    forward visits rows 0..n-1, backward n-1..0; row i is updated to
    (b_i - sum_{j != i} A_ij x_j) / A_ii. Structurally empty (or all-zero)
    rows are skipped; a zero diagonal on a nonzero row is an error.
    """
    _require_square(A)
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != A.n_rows or x.shape[0] != A.n_rows:
        raise ValueError("b and x must match the matrix dimension")
    bad = _kernels.gauss_seidel_sweep(
        A.row_offsets, A.col_indices, A.values, b, x, direction == "forward"
    )
    if bad >= 0:
        raise ValueError(f"zero diagonal in nonzero row {bad}")
    return x


def project_out_constant(x: np.ndarray) -> np.ndarray:
    """x minus its mean; the result sums to zero up to roundoff."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return x.copy()
    return x - x.mean()
