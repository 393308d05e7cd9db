"""Hot CSR and matching kernels.

Each kernel has two implementations: a loop version compiled with numba
(``*_nb``) and a vectorised numpy/scipy version (``*_np``).  The public
names (``csr_lincomb``, ``spmv_t``, ``spgemm_t``, ``max_matching``) are
bound to the numba versions unless numba is missing or
``LOWWEIGHT_DISABLE_JIT`` is set.  Both variants stay importable so the
benchmark and the tests can compare them.
"""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from ._jit import HAVE_NUMBA, njit

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# weighted sum of equally shaped CSR matrices
# ---------------------------------------------------------------------------

@njit
def _lincomb_loop(indptrs, indices, data, starts, coeffs, cols):
    nblk = indptrs.shape[0]
    rows = indptrs.shape[1] - 1
    cap = indices.shape[0]
    out_ptr = np.zeros(rows + 1, dtype=np.int64)
    out_idx = np.empty(cap, dtype=np.int64)
    out_val = np.empty(cap, dtype=np.float64)
    acc = np.zeros(cols, dtype=np.float64)
    seen = np.full(cols, -1, dtype=np.int64)
    row_cols = np.empty(cols, dtype=np.int64)
    pos = 0
    for r in range(rows):
        cnt = 0
        for b in range(nblk):
            c = coeffs[b]
            base = starts[b]
            for p in range(base + indptrs[b, r], base + indptrs[b, r + 1]):
                j = indices[p]
                if seen[j] != r:
                    seen[j] = r
                    acc[j] = 0.0
                    row_cols[cnt] = j
                    cnt += 1
                acc[j] += c * data[p]
        row_sorted = np.sort(row_cols[:cnt])
        for q in range(cnt):
            j = row_sorted[q]
            v = acc[j]
            if v != 0.0:
                out_idx[pos] = j
                out_val[pos] = v
                pos += 1
        out_ptr[r + 1] = pos
    return out_ptr, out_idx[:pos].copy(), out_val[:pos].copy()


def _pack(blocks):
    indptrs = np.stack([b.row_offsets for b in blocks]).astype(np.int64)
    indices = np.concatenate([b.col_indices for b in blocks]).astype(np.int64)
    data = np.concatenate([b.values for b in blocks]).astype(np.float64)
    nnz = np.array([b.col_indices.shape[0] for b in blocks], dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(nnz)[:-1])).astype(np.int64)
    return indptrs, indices, data, starts


def csr_lincomb_nb(blocks, coeffs):
    """Return (indptr, indices, data) of sum_b coeffs[b] * blocks[b]."""
    indptrs, indices, data, starts = _pack(blocks)
    return _lincomb_loop(indptrs, indices, data, starts,
                         np.asarray(coeffs, dtype=np.float64), blocks[0].cols)


def csr_lincomb_np(blocks, coeffs):
    rows, cols = blocks[0].rows, blocks[0].cols
    keys, vals = [], []
    for blk, c in zip(blocks, coeffs):
        r = np.repeat(np.arange(rows, dtype=np.int64), np.diff(blk.row_offsets))
        keys.append(r * cols + blk.col_indices)
        vals.append(float(c) * blk.values)
    keys = np.concatenate(keys)
    vals = np.concatenate(vals)
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.bincount(inv, weights=vals, minlength=uniq.shape[0])
    keep = summed != 0.0
    uniq, summed = uniq[keep], summed[keep]
    r = uniq // cols
    indptr = np.zeros(rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=rows), out=indptr[1:])
    return indptr, uniq % cols, summed


# ---------------------------------------------------------------------------
# y = A^T x
# ---------------------------------------------------------------------------

@njit
def _spmv_t_loop(indptr, indices, data, x, cols):
    y = np.zeros(cols, dtype=np.float64)
    rows = indptr.shape[0] - 1
    for r in range(rows):
        xr = x[r]
        if xr == 0.0:
            continue
        for p in range(indptr[r], indptr[r + 1]):
            y[indices[p]] += data[p] * xr
    return y


def spmv_t_nb(A, x):
    return _spmv_t_loop(A.row_offsets, A.col_indices, A.values,
                        np.ascontiguousarray(x, dtype=np.float64), A.cols)


def spmv_t_np(A, x):
    r = np.repeat(np.arange(A.rows), np.diff(A.row_offsets))
    return np.bincount(A.col_indices, weights=A.values * x[r], minlength=A.cols).astype(np.float64)


# ---------------------------------------------------------------------------
# C = A^T B (dense result) plus multiply-accumulate count
# ---------------------------------------------------------------------------

@njit
def _spgemm_t_loop(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, a_cols, b_cols):
    out = np.zeros((a_cols, b_cols), dtype=np.float64)
    macs = 0
    rows = a_ptr.shape[0] - 1
    for r in range(rows):
        b0 = b_ptr[r]
        b1 = b_ptr[r + 1]
        if b0 == b1:
            continue
        for p in range(a_ptr[r], a_ptr[r + 1]):
            i = a_idx[p]
            av = a_val[p]
            for q in range(b0, b1):
                out[i, b_idx[q]] += av * b_val[q]
            macs += b1 - b0
    return out, macs


def spgemm_t_nb(A, B):
    out, macs = _spgemm_t_loop(A.row_offsets, A.col_indices, A.values,
                               B.row_offsets, B.col_indices, B.values, A.cols, B.cols)
    return out, int(macs)


def spgemm_t_np(A, B):
    out = (A.to_scipy().T @ B.to_scipy()).toarray()
    macs = int(np.dot(np.diff(A.row_offsets), np.diff(B.row_offsets)))
    return np.asarray(out, dtype=np.float64), macs


# ---------------------------------------------------------------------------
# maximum bipartite matching (left vertices = equations)
# ---------------------------------------------------------------------------

@njit
def _matching_loop(adj_ptr, adj_idx, n_right):
    n_left = adj_ptr.shape[0] - 1
    match_l = np.full(n_left, -1, dtype=np.int64)
    match_r = np.full(n_right, -1, dtype=np.int64)
    parent = np.empty(n_right, dtype=np.int64)
    visited = np.zeros(n_right, dtype=np.int64)
    queue = np.empty(n_left, dtype=np.int64)
    size = 0
    for root in range(n_left):
        stamp = root + 1
        head = 0
        tail = 0
        queue[tail] = root
        tail += 1
        free_r = -1
        while head < tail and free_r < 0:
            u = queue[head]
            head += 1
            for p in range(adj_ptr[u], adj_ptr[u + 1]):
                v = adj_idx[p]
                if visited[v] == stamp:
                    continue
                visited[v] = stamp
                parent[v] = u
                if match_r[v] < 0:
                    free_r = v
                    break
                queue[tail] = match_r[v]
                tail += 1
        if free_r < 0:
            continue
        # flip the alternating path back to the root
        v = free_r
        while v >= 0:
            u = parent[v]
            nxt = match_l[u]
            match_l[u] = v
            match_r[v] = u
            v = nxt
        size += 1
    return size, match_l


def max_matching_nb(adj_ptr, adj_idx, n_right):
    size, match = _matching_loop(np.asarray(adj_ptr, dtype=np.int64),
                                 np.asarray(adj_idx, dtype=np.int64), n_right)
    return int(size), match


def max_matching_np(adj_ptr, adj_idx, n_right):
    n_left = len(adj_ptr) - 1
    graph = sp.csr_matrix((np.ones(len(adj_idx), dtype=np.int8), np.asarray(adj_idx), np.asarray(adj_ptr)),
                          shape=(n_left, n_right))
    match = maximum_bipartite_matching(graph, perm_type="column").astype(np.int64)
    return int(np.count_nonzero(match >= 0)), match


if HAVE_NUMBA:
    csr_lincomb, spmv_t, spgemm_t, max_matching = csr_lincomb_nb, spmv_t_nb, spgemm_t_nb, max_matching_nb
else:
    csr_lincomb, spmv_t, spgemm_t, max_matching = csr_lincomb_np, spmv_t_np, spgemm_t_np, max_matching_np
