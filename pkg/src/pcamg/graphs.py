"""Graph sources: grid and ring generators, Matrix Market and edge-list
readers, the preprocessing pipeline that turns raw edge lists into connected
Laplacians, and right-hand-side generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from . import _kernels
from .sparse import SparseMatrix, laplacian_from_adjacency

__all__ = [
    "EdgeList",
    "RhsKind",
    "ParseError",
    "grid_laplacian",
    "ring_graph",
    "read_matrix_market",
    "read_edge_list",
    "write_matrix_market",
    "preprocess",
    "make_rhs",
]

RHS_VARIANTS = ("low_frequency", "zero_sum_random", "zero")


class ParseError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass
class EdgeList:
    """A raw graph as parallel endpoint/weight arrays (possibly directed,
    possibly with self-loops; preprocessing cleans those up)."""

    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_pairs(cls, n_vertices, edges) -> "EdgeList":
        """Build from an iterable of (u, v, w) tuples."""
        arr = list(edges)
        u = np.array([e[0] for e in arr], dtype=np.int64)
        v = np.array([e[1] for e in arr], dtype=np.int64)
        w = np.array([e[2] for e in arr], dtype=np.float64)
        return cls(n_vertices, u, v, w)

    @property
    def n_edges(self) -> int:
        return int(self.u.shape[0])

    def edges(self):
        """Iterate (u, v, w) tuples."""
        return zip(self.u.tolist(), self.v.tolist(), self.w.tolist())


@dataclass
class RhsKind:
    """Which right-hand side to generate; seed only matters for the random one."""

    variant: str
    seed: int = 0

    def __post_init__(self):
        if self.variant not in RHS_VARIANTS:
            raise ValueError(f"unknown rhs variant {self.variant!r}; expected one of {RHS_VARIANTS}")


def grid_laplacian(nx: int, ny: int) -> SparseMatrix:
    """Laplacian of the nx-by-ny 4-neighbour grid with unit weights.

    Vertices are numbered row-major: (row r, column c) -> r * nx + c.
    """
    if nx < 2 or ny < 2:
        raise ValueError("grid needs nx, ny >= 2")
    idx = np.arange(nx * ny).reshape(ny, nx)
    right_u = idx[:, :-1].ravel()
    right_v = idx[:, 1:].ravel()
    down_u = idx[:-1, :].ravel()
    down_v = idx[1:, :].ravel()
    us = np.concatenate([right_u, down_u])
    vs = np.concatenate([right_v, down_v])
    W = sp.coo_matrix(
        (np.ones(2 * us.shape[0]), (np.concatenate([us, vs]), np.concatenate([vs, us]))),
        shape=(nx * ny, nx * ny),
    )
    return laplacian_from_adjacency(SparseMatrix.from_scipy(W))


def ring_graph(n: int) -> SparseMatrix:
    """Laplacian of the degree-4 circulant ring: i connects to i+-1, i+-2 mod n."""
    if n < 5:
        raise ValueError("ring needs n >= 5")
    i = np.arange(n)
    us = np.concatenate([i, i])
    vs = np.concatenate([(i + 1) % n, (i + 2) % n])
    W = sp.coo_matrix(
        (np.ones(2 * us.shape[0]), (np.concatenate([us, vs]), np.concatenate([vs, us]))),
        shape=(n, n),
    )
    W = sp.csr_matrix(W)
    W.sum_duplicates()
    if np.any(W.data != 1.0):
        raise ValueError("ring construction produced parallel edges")  # n >= 5 prevents this
    return laplacian_from_adjacency(SparseMatrix.from_scipy(W))


def _tokenize(line):
    hash_pos = line.find("%")
    if hash_pos >= 0:
        line = line[:hash_pos]
    return line.split()


def read_matrix_market(path) -> EdgeList:
    """Read a coordinate-format Matrix Market file as an edge list.

    Supports pattern/real/integer fields with general or symmetric storage.
    Pattern entries get weight 1. Entries that duplicate another entry's
    unordered endpoint pair with the identical weight are kept once;
    mirrored entries with differing weights survive for preprocessing to
    merge. Indices in the file are 1-based.
    """
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError(path, 1, "empty file")

    banner = lines[0].strip().split()
    if len(banner) < 5 or banner[0] != "%%MatrixMarket":
        raise ParseError(path, 1, "missing %%MatrixMarket banner")
    obj, fmt, fld, symm = (t.lower() for t in banner[1:5])
    if obj != "matrix":
        raise ParseError(path, 1, f"unsupported object {obj!r}")
    if fmt != "coordinate":
        raise ParseError(path, 1, f"unsupported format {fmt!r}; only coordinate is accepted")
    if fld == "complex":
        raise ParseError(path, 1, "complex field is not supported")
    if fld not in ("pattern", "real", "integer"):
        raise ParseError(path, 1, f"unsupported field {fld!r}")
    if symm not in ("general", "symmetric"):
        raise ParseError(path, 1, f"unsupported symmetry {symm!r}")

    line_no = 1
    size = None
    for raw in lines[1:]:
        line_no += 1
        if raw.lstrip().startswith("%"):
            continue
        toks = raw.split()
        if not toks:
            continue
        if len(toks) != 3:
            raise ParseError(path, line_no, f"size line needs 3 tokens, got {len(toks)}")
        try:
            size = (int(toks[0]), int(toks[1]), int(toks[2]))
        except ValueError as exc:
            raise ParseError(path, line_no, f"bad size line: {exc}") from None
        break
    if size is None:
        raise ParseError(path, line_no, "missing size line")
    n_rows, n_cols, n_decl = size
    if n_rows != n_cols:
        raise ParseError(path, line_no, f"graph matrix must be square, got {n_rows}x{n_cols}")

    us, vs, ws = [], [], []
    want = 2 if fld == "pattern" else 3
    for raw in lines[line_no:]:
        line_no += 1
        toks = _tokenize(raw)
        if not toks:
            continue
        if len(toks) != want:
            raise ParseError(path, line_no, f"entry needs {want} tokens, got {len(toks)}")
        try:
            i = int(toks[0])
            j = int(toks[1])
            w = 1.0 if fld == "pattern" else float(toks[2])
        except ValueError as exc:
            raise ParseError(path, line_no, f"bad entry: {exc}") from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise ParseError(path, line_no, f"index ({i},{j}) outside 1..{n_rows}")
        us.append(i - 1)
        vs.append(j - 1)
        ws.append(w)
    if len(us) != n_decl:
        raise ParseError(path, line_no, f"declared {n_decl} entries, found {len(us)}")

    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    w = np.array(ws, dtype=np.float64)
    # drop exact mirrored duplicates: same unordered pair, same weight
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    order = np.lexsort((w, hi, lo))
    u, v, w, lo, hi = u[order], v[order], w[order], lo[order], hi[order]
    if u.shape[0]:
        dup = np.zeros(u.shape[0], dtype=bool)
        dup[1:] = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1]) & (w[1:] == w[:-1])
        u, v, w = u[~dup], v[~dup], w[~dup]
    return EdgeList(n_rows, u, v, w)


def read_edge_list(path) -> EdgeList:
    """Read a whitespace-separated "u v [w]" file; '#' starts a comment.

    Vertex ids may be arbitrary integers; they are re-indexed densely in
    first-appearance order. A missing weight defaults to 1.
    """
    path = str(path)
    ids = {}
    us, vs, ws = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            toks = stripped.split()
            if len(toks) not in (2, 3):
                raise ParseError(path, line_no, f"expected 'u v [w]', got {len(toks)} tokens")
            try:
                a = int(toks[0])
                b = int(toks[1])
                w = float(toks[2]) if len(toks) == 3 else 1.0
            except ValueError as exc:
                raise ParseError(path, line_no, f"non-numeric token: {exc}") from None
            for t in (a, b):
                if t not in ids:
                    ids[t] = len(ids)
            us.append(ids[a])
            vs.append(ids[b])
            ws.append(w)
    return EdgeList(
        len(ids),
        np.array(us, dtype=np.int64),
        np.array(vs, dtype=np.int64),
        np.array(ws, dtype=np.float64),
    )


def write_matrix_market(path, L: SparseMatrix, comment=None):
    """Write the adjacency of a Laplacian (or an adjacency itself) as a
    symmetric real coordinate Matrix Market file storing the lower triangle."""
    coo = L.to_scipy().tocoo()
    off = coo.row != coo.col
    vals = coo.data[off]
    rows = coo.row[off]
    cols = coo.col[off]
    if np.all(vals <= 0):  # looks like a Laplacian: store edge weights
        vals = -vals
    keep = rows > cols
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            fh.write(f"% {comment}\n")
        n = L.n_rows
        fh.write(f"{n} {n} {int(keep.sum())}\n")
        for r, c, w in zip(rows[keep], cols[keep], vals[keep]):
            fh.write(f"{r + 1} {c + 1} {w!r}\n")


def _bfs_component_sizes(n, adj):
    labels = csgraph.connected_components(adj, directed=False)[1]
    return labels, np.bincount(labels)


def preprocess(raw: EdgeList) -> SparseMatrix:
    """Raw edge list -> Laplacian of its largest connected component.

    Weights are made absolute first, then parallel/directed duplicates of an
    unordered pair are merged by summing; self-loops and zero-weight edges
    are dropped. Component vertices keep their relative order (ascending
    original index)."""
    if raw.n_vertices == 0:
        raise ValueError("empty graph after preprocessing")
    w = np.abs(raw.w.astype(np.float64))
    keep = (raw.u != raw.v) & (w > 0)
    lo = np.minimum(raw.u[keep], raw.v[keep])
    hi = np.maximum(raw.u[keep], raw.v[keep])
    w = w[keep]
    if lo.shape[0] == 0:
        raise ValueError("empty graph after preprocessing")

    key = lo * np.int64(raw.n_vertices) + hi
    uniq, inv = np.unique(key, return_inverse=True)
    merged_w = np.zeros(uniq.shape[0])
    np.add.at(merged_w, inv, w)
    merged_lo = (uniq // raw.n_vertices).astype(np.int64)
    merged_hi = (uniq % raw.n_vertices).astype(np.int64)

    n = raw.n_vertices
    adj = sp.coo_matrix(
        (
            np.concatenate([merged_w, merged_w]),
            (np.concatenate([merged_lo, merged_hi]), np.concatenate([merged_hi, merged_lo])),
        ),
        shape=(n, n),
    ).tocsr()

    labels, sizes = _bfs_component_sizes(n, adj)
    biggest = int(np.argmax(sizes))
    members = np.nonzero(labels == biggest)[0]  # ascending original index
    sub = adj[members][:, members].tocsr()
    W = SparseMatrix.from_scipy(sub)
    if W.nnz == 0:
        raise ValueError("empty graph after preprocessing")
    return laplacian_from_adjacency(W)


def make_rhs(kind: RhsKind, n: int) -> np.ndarray:
    """Generate one of the benchmark right-hand sides (all sum to zero)."""
    if n < 2:
        raise ValueError("rhs needs n >= 2")
    if kind.variant == "zero":
        return np.zeros(n)
    if kind.variant == "low_frequency":
        b = np.ones(n)
        b[-1] = 1.0 - n
        return b
    b = _kernels.lcg_uniform(kind.seed, n)
    return b - b.mean()
