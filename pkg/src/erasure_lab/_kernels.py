"""Batched encode / erasure-decode kernels over GF(q).

Each kernel exists twice: an ``@njit`` loop over trials and a pure-numpy
version that vectorises across trials.  Both use the same pivot rule (first
nonzero entry at or below the current row, Gauss-Jordan), so they return
identical arrays.

Decoding solves ``b G~ = y~`` as the transposed system ``G~^T b^T = y~^T``:
one equation per unerased position.  Erased positions become all-zero
equations rather than being dropped, which keeps every trial the same shape.
"""

from __future__ import annotations

import numpy as np

from ._jit import njit, resolve
from .galois import FieldSpec

OK = 0
NOT_ENOUGH_SYMBOLS = 1
RANK_DEFICIENT = 2
INCONSISTENT = 3

STATUS_NAMES = {
    OK: "ok",
    NOT_ENOUGH_SYMBOLS: "not_enough_symbols",
    RANK_DEFICIENT: "rank_deficient",
    INCONSISTENT: "inconsistent",
}


# --- numba path --------------------------------------------------------------

@njit
def _gf_add(a, b, p, m):
    if p == 2:
        return a ^ b
    if m == 1:
        return (a + b) % p
    out = 0
    pk = 1
    for _ in range(m):
        out += (((a // pk) + (b // pk)) % p) * pk
        pk *= p
    return out


@njit
def _gf_sub(a, b, p, m):
    if p == 2:
        return a ^ b
    if m == 1:
        return (a - b) % p
    out = 0
    pk = 1
    for _ in range(m):
        out += (((a // pk) - (b // pk)) % p) * pk
        pk *= p
    return out


@njit
def _gf_mul(a, b, exp, log):
    # log[0] points into the zero tail of exp, so no zero test is needed
    return exp[log[a] + log[b]]


@njit
def _encode_loop(msgs, G, exp, log, p, m):
    T, K = msgs.shape
    N = G.shape[2]
    shared = G.shape[0] == 1
    out = np.zeros((T, N), dtype=np.int64)
    for t in range(T):
        g = 0 if shared else t
        for j in range(N):
            acc = 0
            for k in range(K):
                acc = _gf_add(acc, _gf_mul(msgs[t, k], G[g, k, j], exp, log), p, m)
            out[t, j] = acc
    return out


@njit
def _solve_loop(G, y, erased, exp, log, p, m, q):
    T, N = y.shape
    K = G.shape[1]
    shared = G.shape[0] == 1
    status = np.zeros(T, dtype=np.int8)
    rank = np.zeros(T, dtype=np.int64)
    msgs = np.zeros((T, K), dtype=np.int64)
    A = np.zeros((N, K + 1), dtype=np.int64)
    for t in range(T):
        g = 0 if shared else t
        kept = 0
        for j in range(N):
            if erased[t, j]:
                for k in range(K + 1):
                    A[j, k] = 0
            else:
                kept += 1
                for k in range(K):
                    A[j, k] = G[g, k, j]
                A[j, K] = y[t, j]
        r = 0
        for c in range(K):
            piv = -1
            for i in range(r, N):
                if A[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for k in range(K + 1):
                    tmp = A[r, k]
                    A[r, k] = A[piv, k]
                    A[piv, k] = tmp
            iv = exp[(q - 1) - log[A[r, c]]]
            for k in range(c, K + 1):
                A[r, k] = _gf_mul(A[r, k], iv, exp, log)
            for i in range(N):
                f = A[i, c]
                if i != r and f != 0:
                    for k in range(c, K + 1):
                        A[i, k] = _gf_sub(A[i, k], _gf_mul(f, A[r, k], exp, log), p, m)
            r += 1
        rank[t] = r
        consistent = True
        for i in range(r, N):
            if A[i, K] != 0:
                consistent = False
        if kept < K:
            status[t] = NOT_ENOUGH_SYMBOLS
        elif r < K:
            status[t] = RANK_DEFICIENT
        elif not consistent:
            status[t] = INCONSISTENT
        else:
            for k in range(K):
                msgs[t, k] = A[k, K]
    return status, msgs, rank


# --- numpy path --------------------------------------------------------------

def _encode_numpy(field: FieldSpec, msgs, G):
    return field.matmul(msgs[:, None, :], G)[:, 0, :]


def _solve_numpy(field: FieldSpec, G, y, erased):
    T, N = y.shape
    K = G.shape[1]
    keep = ~erased
    A = np.zeros((T, N, K + 1), dtype=np.int64)
    A[:, :, :K] = np.swapaxes(np.broadcast_to(G, (T,) + G.shape[1:]), 1, 2)
    A[:, :, K] = y
    A *= keep[:, :, None]
    rows = np.arange(N)
    r = np.zeros(T, dtype=np.int64)
    for c in range(K):
        eligible = (A[:, :, c] != 0) & (rows[None, :] >= r[:, None])
        t = np.flatnonzero(eligible.any(axis=1))
        if t.size == 0:
            continue
        piv = eligible[t].argmax(axis=1)
        rt = r[t]
        pivot_rows = A[t, piv].copy()
        A[t, piv] = A[t, rt]
        A[t, rt] = pivot_rows
        pivot_rows = field.mul(pivot_rows, field.inv(pivot_rows[:, c])[:, None])
        A[t, rt] = pivot_rows
        factors = A[t, :, c].copy()
        factors[np.arange(t.size), rt] = 0
        A[t] = field.sub(A[t], field.mul(factors[:, :, None], pivot_rows[:, None, :]))
        r[t] += 1
    status = np.full(T, OK, dtype=np.int8)
    tail = np.where(rows[None, :] >= r[:, None], A[:, :, K], 0)
    status[tail.any(axis=1)] = INCONSISTENT
    status[r < K] = RANK_DEFICIENT
    status[keep.sum(axis=1) < K] = NOT_ENOUGH_SYMBOLS
    msgs = np.where((status == OK)[:, None], A[:, :K, K], 0).astype(np.int64)
    return status, msgs, r


# --- public entry points ------------------------------------------------------

def _as_batch_g(G) -> np.ndarray:
    G = np.asarray(G, dtype=np.int64)
    if G.ndim == 2:
        G = G[None]
    return np.ascontiguousarray(G)


def encode_batch(field: FieldSpec, msgs, G, backend: str | None = None) -> np.ndarray:
    """Codewords ``c = b G`` for a (T, K) batch of messages.

    ``G`` is either one K x N matrix shared by every trial or a (T, K, N)
    stack with one generator per trial.
    """
    msgs = np.ascontiguousarray(msgs, dtype=np.int64)
    G = _as_batch_g(G)
    if resolve(backend) == "numba":
        return _encode_loop(msgs, G, field.exp_table, field.log_table,
                            field.characteristic, field.degree)
    return _encode_numpy(field, msgs, G)


def solve_batch(field: FieldSpec, G, y, erased, backend: str | None = None):
    """Erasure-decode a batch; returns ``(status, messages, rank)``.

    ``status`` holds one of OK / NOT_ENOUGH_SYMBOLS / RANK_DEFICIENT /
    INCONSISTENT per trial; ``messages`` is zero where status != OK.
    ``rank`` is the rank of the reduced generator matrix.
    """
    y = np.ascontiguousarray(y, dtype=np.int64)
    erased = np.ascontiguousarray(erased, dtype=np.bool_)
    G = _as_batch_g(G)
    if resolve(backend) == "numba":
        return _solve_loop(G, y, erased, field.exp_table, field.log_table,
                           field.characteristic, field.degree, field.order)
    return _solve_numpy(field, G, y, erased)


def rank_batch(field: FieldSpec, M, backend: str | None = None) -> np.ndarray:
    """Rank of each K x n matrix in a (T, K, n) stack."""
    M = _as_batch_g(M)
    T, _, n = M.shape
    zeros = np.zeros((T, n), dtype=np.int64)
    _, _, rank = solve_batch(field, M, zeros, np.zeros((T, n), dtype=bool), backend)
    return rank
