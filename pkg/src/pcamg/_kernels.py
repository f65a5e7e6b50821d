"""Numba-compiled inner kernels: the row-sequential Gauss-Seidel sweeps and
the portable linear congruential generator used for reproducible vectors."""

import numba as nb
import numpy as np

_jit = {"cache": True, "nogil": True}

# Knuth's MMIX multiplier/increment; state advances modulo 2**64.
LCG_MULTIPLIER = np.uint64(6364136223846793005)
LCG_INCREMENT = np.uint64(1442695040888963407)


@nb.njit(**_jit)
def gauss_seidel_sweep(row_offsets, col_indices, values, b, x, forward):
    """One in-place Gauss-Seidel sweep over the CSR matrix.

    Rows whose stored entries are all zero are skipped. Returns -1 on
    success, else the index of the first row with a zero diagonal but a
    nonzero off-diagonal entry (caller raises).
    """
    n = b.shape[0]
    if forward:
        start, stop, step = 0, n, 1
    else:
        start, stop, step = n - 1, -1, -1
    for i in range(start, stop, step):
        diag = 0.0
        s = b[i]
        for k in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[k]
            v = values[k]
            if j == i:
                diag = v
            else:
                s -= v * x[j]
        if diag != 0.0:
            x[i] = s / diag
        else:
            for k in range(row_offsets[i], row_offsets[i + 1]):
                if values[k] != 0.0:
                    return i
    return -1


@nb.njit(**_jit)
def lcg_uniform(seed, n):
    """n pseudo-random doubles in [-1, 1) from a 64-bit LCG.

    state <- state * 6364136223846793005 + 1442695040888963407 (mod 2**64);
    the top 53 bits of each state form the mantissa. Bit-identical on every
    platform for a given seed.
    """
    out = np.empty(n, dtype=np.float64)
    state = np.uint64(seed)
    for i in range(n):
        state = state * LCG_MULTIPLIER + LCG_INCREMENT
        out[i] = (state >> np.uint64(11)) * (2.0 ** -52) - 1.0
    return out


@nb.njit(**_jit)
def greedy_path_cover(eu, ev, n):
    """Greedy scan of pre-sorted edges keeping only vertex-disjoint paths.

    eu/ev list edge endpoints in descending-weight order. Returns
    (cover_nbr, cover_deg): cover_nbr[i, 0:2] holds the at-most-two cover
    neighbours of vertex i (-1 when absent).
    """
    deg = np.zeros(n, dtype=np.int64)
    nbr = np.full((n, 2), -1, dtype=np.int64)
    parent = np.arange(n, dtype=np.int64)

    for t in range(eu.shape[0]):
        u = eu[t]
        v = ev[t]
        if deg[u] > 1 or deg[v] > 1:
            continue
        # find roots with path halving
        ru = u
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rv = v
        while parent[rv] != rv:
            parent[rv] = parent[parent[rv]]
            rv = parent[rv]
        if ru == rv:
            continue  # would close a cycle
        parent[ru] = rv
        nbr[u, deg[u]] = v
        nbr[v, deg[v]] = u
        deg[u] += 1
        deg[v] += 1
    return nbr, deg
