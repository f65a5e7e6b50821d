"""Aggregation machinery: greedy maximal weighted matching, vertex-disjoint
path covers, smooth-vector reweighting on the squared sparsity pattern,
path-based aggregation, and cover shortening for the coarse levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .sparse import SparseMatrix, square_pattern

__all__ = [
    "PathCover",
    "Aggregation",
    "mwm_aggregate",
    "path_cover",
    "cover_weight",
    "reweight",
    "path_cover_aggregate",
    "aggregation_matrix",
    "shorten_cover",
]


@dataclass
class PathCover:
    """Vertex-disjoint simple paths, each an int array of vertex indices.

    Vertices not on any path are simply absent; aggregation picks them up
    later. Paths of a valid cover never repeat a vertex, and consecutive
    entries are edges of the graph the cover was built on.
    """

    paths: list

    def covered(self, n) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        for p in self.paths:
            mask[p] = True
        return mask

    def __len__(self):
        return len(self.paths)


@dataclass
class Aggregation:
    """Surjective vertex -> aggregate map."""

    assign: np.ndarray
    num_agg: int

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.num_agg)


def _sorted_edges(W: SparseMatrix, require_positive=True):
    """Unique undirected edges (u < v) ordered by descending weight; ties
    break on (u, v) ascending so the scan order is reproducible."""
    coo = W.to_scipy().tocoo()
    upper = coo.row < coo.col
    u = coo.row[upper].astype(np.int64)
    v = coo.col[upper].astype(np.int64)
    w = coo.data[upper]
    if require_positive and np.any(w < 0):
        raise ValueError("adjacency weights must be positive")
    nz = w != 0
    u, v, w = u[nz], v[nz], w[nz]
    order = np.lexsort((v, u, -w))
    return u[order], v[order], w[order]


def _neighbors(W: SparseMatrix, u):
    lo, hi = W.row_offsets[u], W.row_offsets[u + 1]
    return W.col_indices[lo:hi], W.values[lo:hi]


def _heaviest_neighbor(W: SparseMatrix, u):
    """Index of u's heaviest neighbour, ties toward the lower index; -1 if none."""
    cols, vals = _neighbors(W, u)
    mask = cols != u
    cols, vals = cols[mask], vals[mask]
    if cols.shape[0] == 0:
        return -1
    top = vals.max()
    return int(cols[vals == top].min())


def _within_distance(W: SparseMatrix, source, member_set, limit):
    """True when every vertex of member_set is within `limit` hops of source
    in the subgraph induced by member_set (source included)."""
    dist = {source: 0}
    frontier = [source]
    d = 0
    while frontier and d < limit:
        d += 1
        nxt = []
        for p in frontier:
            cols, _ = _neighbors(W, p)
            for c in cols.tolist():
                if c in member_set and c not in dist:
                    dist[c] = d
                    nxt.append(c)
        frontier = nxt
    return len(dist) == len(member_set)


def mwm_aggregate(W: SparseMatrix) -> Aggregation:
    """Greedy maximal weighted matching plus absorption of leftovers.

    Edges are scanned from heaviest to lightest and matched when both
    endpoints are free. Each remaining unmatched vertex is then attached to
    the aggregate across its heaviest incident edge, provided the aggregate's
    induced diameter stays at most 3; otherwise it becomes a singleton.
    """
    n = W.n_rows
    eu, ev, _ = _sorted_edges(W)
    assign = np.full(n, -1, dtype=np.int64)
    members = []
    for u, v in zip(eu.tolist(), ev.tolist()):
        if assign[u] < 0 and assign[v] < 0:
            assign[u] = assign[v] = len(members)
            members.append([u, v])

    for u in range(n):
        if assign[u] >= 0:
            continue
        v = _heaviest_neighbor(W, u)
        if v < 0 or assign[v] < 0:
            # no neighbour at all (matching maximality rules out an
            # unaggregated neighbour): singleton
            assign[u] = len(members)
            members.append([u])
            continue
        aid = int(assign[v])
        candidate = set(members[aid])
        candidate.add(u)
        # existing aggregates keep diameter <= 3, so only u's eccentricity
        # inside the grown aggregate needs checking
        if _within_distance(W, u, candidate, 3):
            assign[u] = aid
            members[aid].append(u)
        else:
            assign[u] = len(members)
            members.append([u])
    return Aggregation(assign, len(members))


def path_cover(W: SparseMatrix) -> PathCover:
    """Greedy half-approximate maximum-weight path cover.

    Edges are scanned from heaviest to lightest; an edge joins the cover
    when both endpoints currently have cover degree <= 1 and the edge does
    not close a cycle. Vertices touched by no accepted edge are left out.
    """
    n = W.n_rows
    diag = W.diagonal()
    if np.any(diag != 0):
        raise ValueError("path cover expects an adjacency with zero diagonal")
    eu, ev, _ = _sorted_edges(W)
    nbr, deg = _kernels.greedy_path_cover(eu, ev, n)

    visited = np.zeros(n, dtype=bool)
    paths = []
    for s in range(n):
        if deg[s] != 1 or visited[s]:
            continue
        seq = [s]
        visited[s] = True
        prev, cur = s, int(nbr[s, 0])
        while cur >= 0 and not visited[cur]:
            seq.append(cur)
            visited[cur] = True
            a, b = int(nbr[cur, 0]), int(nbr[cur, 1])
            prev, cur = cur, (b if a == prev else a)
        paths.append(np.asarray(seq, dtype=np.int64))
    return PathCover(paths)


def cover_weight(cover: PathCover, W: SparseMatrix) -> float:
    """Total weight of the consecutive pairs along every path."""
    total = 0.0
    for path in cover.paths:
        for a, b in zip(path[:-1].tolist(), path[1:].tolist()):
            cols, vals = _neighbors(W, a)
            pos = np.searchsorted(cols, b)
            if pos >= cols.shape[0] or cols[pos] != b:
                raise ValueError(f"cover pair ({a},{b}) is not an edge of the graph")
            total += float(vals[pos])
    return total


def reweight(A: SparseMatrix, e: np.ndarray, row_cap=None) -> SparseMatrix:
    """Adjacency on the squared pattern of A, weighted by closeness of e.

    Entry (i, j) becomes 1 / max(|e_i - e_j|, delta) with
    delta = 1e-12 * max(max|e|, 1), so edges inside a level set of e get
    (capped) huge weights and cross-level edges get small ones.
    """
    e = np.asarray(e, dtype=np.float64)
    if e.shape[0] != A.n_rows:
        raise ValueError("e must have one entry per vertex")
    if not np.all(np.isfinite(e)):
        raise ValueError("e must be finite")
    S = square_pattern(A, row_cap=row_cap)
    # tocoo() of a canonical CSR keeps data order, so gaps align with values
    coo = S.to_scipy().tocoo()
    delta = 1e-12 * max(float(np.max(np.abs(e))) if e.size else 0.0, 1.0)
    gaps = np.maximum(np.abs(e[coo.row] - e[coo.col]), delta)
    return SparseMatrix(S.n_rows, S.n_cols, S.row_offsets, S.col_indices, 1.0 / gaps)


def aggregation_matrix(agg: Aggregation, weights=None) -> SparseMatrix:
    """Prolongation for an aggregation: row k has its single entry in column
    assign[k], valued weights[k] (or 1)."""
    n = agg.assign.shape[0]
    data = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if data.shape[0] != n:
        raise ValueError("weights must have one entry per vertex")
    return SparseMatrix(
        n, agg.num_agg, np.arange(n + 1, dtype=np.int64), agg.assign.copy(), data.copy()
    )


def path_cover_aggregate(cover: PathCover, Wt: SparseMatrix, level: int, e=None):
    """Aggregates of size 2-3 from a path cover, plus the prolongation.

    Consecutive path vertices are paired from each path's start; an odd
    trailing vertex is left over. Every remaining vertex then looks at its
    heaviest neighbour v in Wt: if v is free they pair up; if v's aggregate
    has two members the vertex joins it; if it has three, v is pulled out
    and re-paired with the newcomer. Neighbourless vertices end up alone.

    At level 1 the prolongation column for aggregate i carries the entries
    of e over its members (so e is reproduced exactly from the all-ones
    coarse vector); deeper levels use boolean columns.
    """
    n = Wt.n_rows
    if level == 1:
        if e is None:
            raise ValueError("level 1 needs the smooth vector e")
        e = np.asarray(e, dtype=np.float64)
        if e.shape[0] != n:
            raise ValueError("e must have one entry per vertex")

    assign = np.full(n, -1, dtype=np.int64)
    sizes = []
    for path in cover.paths:
        path = np.asarray(path)
        if path.size and (path.min() < 0 or path.max() >= n):
            raise ValueError("cover references a vertex outside the graph")
        if np.any(assign[path] >= 0):
            raise ValueError("cover paths are not vertex-disjoint")
        assign[path] = -2  # mark as seen to catch cross-path duplicates
        for i in range(0, path.shape[0] - 1, 2):
            aid = len(sizes)
            assign[path[i]] = aid
            assign[path[i + 1]] = aid
            sizes.append(2)
    assign[assign == -2] = -1  # odd trailing vertices rejoin the free pool

    for u in range(n):
        if assign[u] >= 0:
            continue
        v = _heaviest_neighbor(Wt, u)
        if v < 0:
            assign[u] = len(sizes)
            sizes.append(1)
            continue
        if assign[v] < 0:
            aid = len(sizes)
            assign[u] = assign[v] = aid
            sizes.append(2)
        elif sizes[assign[v]] <= 2:
            aid = int(assign[v])
            assign[u] = aid
            sizes[aid] += 1
        else:
            old = int(assign[v])
            sizes[old] -= 1
            aid = len(sizes)
            assign[u] = assign[v] = aid
            sizes.append(2)

    agg = Aggregation(assign, len(sizes))
    P = aggregation_matrix(agg, weights=e if level == 1 else None)
    return agg, P


def shorten_cover(cover: PathCover, agg: Aggregation) -> PathCover:
    """Rewrite each path in coarse indices.

    Runs of fine vertices sharing an aggregate collapse to one coarse
    vertex. A coarse vertex already claimed (by an earlier path or earlier
    in the same path) splits the path there, keeping disjointness. Pieces
    shorter than two vertices are dropped.
    """
    claimed = np.zeros(agg.num_agg, dtype=bool)
    paths = []

    def emit(segment):
        if len(segment) >= 2:
            paths.append(np.asarray(segment, dtype=np.int64))

    for path in cover.paths:
        coarse = agg.assign[np.asarray(path)]
        collapsed = coarse[np.concatenate([[True], coarse[1:] != coarse[:-1]])]
        segment = []
        for cid in collapsed.tolist():
            if claimed[cid]:
                emit(segment)
                segment = []
                continue
            claimed[cid] = True
            segment.append(cid)
        emit(segment)
    return PathCover(paths)
