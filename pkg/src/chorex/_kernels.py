"""Hot loop of the brute-force oracle: score every cell-to-agent assignment.

Cell values arrive as integers (the exact rationals times a common
denominator ``L``), so both backends decide fairness exactly.  Assignments
are numbered in mixed radix with the first cell most significant, the same
order as ``itertools.product``.  With radix ``n + 1`` the digit ``n`` leaves
a cell unassigned.

Set ``CHOREX_NO_JIT=1`` to force the pure-numpy backend.
"""

from __future__ import annotations

import os

import numpy as np

PROP, SWAP_EF, SWAP_STABLE = 1, 2, 4

USE_JIT = os.environ.get("CHOREX_NO_JIT", "").strip().lower() not in ("1", "true", "yes")

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    USE_JIT = False


def _score_numpy(vals: np.ndarray, scale, radix: int, start: int, count: int, chunk: int = 1 << 15):
    """Vectorized backend; works for int64 and for object (Python int) arrays."""
    n, _, c = vals.shape
    costs = np.empty(count, dtype=vals.dtype)
    flags = np.empty(count, dtype=np.uint8)
    powers = radix ** np.arange(c - 1, -1, -1, dtype=np.int64)
    eye = np.arange(n)
    iu, ju = np.triu_indices(n, 1)
    for off in range(0, count, chunk):
        idx = np.arange(start + off, start + min(off + chunk, count), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % radix
        onehot = (digits[:, :, None] == eye[None, None, :]).astype(vals.dtype)
        # W[b, i, j, p] = V_ij(A_p)
        W = np.einsum("ijc,bcp->bijp", vals, onehot)
        own = np.einsum("bipp->bip", W)  # V_ip(A_p)
        agent = own.sum(axis=2)
        cost = agent.sum(axis=1)
        ok_prop = (n * agent <= scale).all(axis=1)
        diag = np.einsum("biii->bi", W)  # V_ii(A_i)
        lhs = diag[:, :, None] + own
        rhs = np.einsum("biij->bij", W) + np.einsum("biji->bij", W)  # V_ii(A_j) + V_ij(A_i)
        ok_ef = (lhs <= rhs).all(axis=(1, 2))  # i == j rows hold trivially
        if len(iu):
            lhs_s = own[:, :, iu] + own[:, :, ju]
            rhs_s = W[:, :, iu, ju] + W[:, :, ju, iu]
            ok_st = (lhs_s <= rhs_s).all(axis=(1, 2))
        else:
            ok_st = np.ones(len(idx), dtype=bool)
        sl = slice(off, off + len(idx))
        costs[sl] = cost
        flags[sl] = ok_prop * PROP + ok_ef * SWAP_EF + ok_st * SWAP_STABLE
    return costs, flags


def _score_loop(vals, scale, radix, start, count, costs, flags):
    n = vals.shape[0]
    c = vals.shape[2]
    digits = np.zeros(c, dtype=np.int64)
    W = np.zeros((n, n, n), dtype=np.int64)
    for b in range(count):
        r = start + b
        for q in range(c - 1, -1, -1):
            digits[q] = r % radix
            r //= radix
        W[:] = 0
        for q in range(c):
            p = digits[q]
            if p == n:
                continue
            for i in range(n):
                for j in range(n):
                    W[i, j, p] += vals[i, j, q]
        total = 0
        f = PROP | SWAP_EF | SWAP_STABLE
        for i in range(n):
            v = 0
            for p in range(n):
                v += W[i, p, p]
            total += v
            if n * v > scale:
                f &= ~PROP
            for j in range(n):
                if j != i and W[i, i, i] + W[i, j, j] > W[i, i, j] + W[i, j, i]:
                    f &= ~SWAP_EF
            for j in range(n):
                for k in range(j + 1, n):
                    if W[i, j, j] + W[i, k, k] > W[i, j, k] + W[i, k, j]:
                        f &= ~SWAP_STABLE
        costs[b] = total
        flags[b] = f


_score_loop_jit = njit(cache=True)(_score_loop) if njit is not None else None


def _score_jit(vals: np.ndarray, scale, radix: int, start: int, count: int):
    costs = np.empty(count, dtype=np.int64)
    flags = np.empty(count, dtype=np.uint8)
    _score_loop_jit(vals, np.int64(scale), np.int64(radix), np.int64(start), np.int64(count), costs, flags)
    return costs, flags


def score_assignments(
    vals: np.ndarray,
    scale,
    start: int = 0,
    count: int | None = None,
    partial: bool = False,
    jit: bool | None = None,
):
    """Social cost (times ``scale``) and fairness flags for a range of assignments.

    ``vals[i, j, c]`` is ``scale * V_ij(cell c)``; the prop flag tests
    ``n * V_i <= scale``.  Object arrays always take the numpy path.
    """
    n, _, c = vals.shape
    radix = n + 1 if partial else n
    if count is None:
        count = radix**c - start
    use_jit = USE_JIT if jit is None else jit
    if use_jit and vals.dtype == np.int64 and _score_loop_jit is not None:
        return _score_jit(vals, scale, radix, start, count)
    return _score_numpy(vals, scale, radix, start, count)
