"""Exact sparse linear algebra over F_p.

Matrices are lists of sparse rows, each row a ``{column: value}`` dict with
values already reduced mod p (zero entries omitted).
"""
from __future__ import annotations

import heapq
import os
from array import array
from typing import Iterable, Sequence

try:
    from . import _sparserank
except ImportError:  # compiled kernel is optional
    _sparserank = None

if os.environ.get("FLAGCOH_PURE_PYTHON"):
    _sparserank = None

SparseRow = dict[int, int]


def have_compiled_kernel() -> bool:
    return _sparserank is not None


def rank_mod_p(rows: Iterable[SparseRow], p: int) -> int:
    """Rank of a sparse matrix over F_p (compiled kernel when available)."""
    if _sparserank is None:
        return rank_mod_p_python(rows, p)
    ptr = array("q", [0])
    cols = array("q")
    vals = array("q")
    ncols = 0
    for r in rows:
        if r:
            cols.extend(r.keys())
            vals.extend(r.values())
            m = max(r)
            if m >= ncols:
                ncols = m + 1
        ptr.append(len(cols))
    if not cols:
        return 0
    return _sparserank.rank(ptr.tobytes(), cols.tobytes(), vals.tobytes(), ncols, p)


def rank_mod_p_python(rows: Iterable[SparseRow], p: int) -> int:
    """Rank by Gaussian elimination with Markowitz-style pivot choice.

    Columns are processed in order of current fill count (a lazy heap), and
    within a column the pivot row is the sparsest one.  Each eliminated row
    is dropped; only the count of pivots is kept.
    """
    R: dict[int, SparseRow] = {}
    for i, r in enumerate(rows):
        rr = {c: v % p for c, v in r.items() if v % p}
        if rr:
            R[i] = rr
    C: dict[int, set[int]] = {}
    for i, r in R.items():
        for c in r:
            C.setdefault(c, set()).add(i)
    heap = [(len(s), c) for c, s in C.items()]
    heapq.heapify(heap)
    rank = 0
    while heap:
        n, c = heapq.heappop(heap)
        s = C.get(c)
        if s is None:
            continue
        if not s:
            del C[c]
            continue
        if len(s) != n:
            heapq.heappush(heap, (len(s), c))
            continue
        i = min(s, key=lambda j: len(R[j]))
        prow = R.pop(i)
        for cc in prow:
            C[cc].discard(i)
        others = C.pop(c)
        rank += 1
        if not others:
            continue
        inv = pow(prow[c], -1, p)
        pr = [(cc, v * inv % p) for cc, v in prow.items() if cc != c]
        for j in others:
            r = R[j]
            f = r.pop(c)
            for cc, v in pr:
                nv = (r.get(cc, 0) - f * v) % p
                if nv:
                    if cc not in r:
                        C[cc].add(j)
                    r[cc] = nv
                else:
                    del r[cc]
                    C[cc].discard(j)
            if not r:
                del R[j]
        for cc, _ in pr:
            s2 = C.get(cc)
            if s2 is not None:
                heapq.heappush(heap, (len(s2), cc))
    return rank


def rank_dense(mat: Sequence[Sequence[int]], p: int) -> int:
    """Plain row reduction on a dense matrix; the reference implementation."""
    A = [[x % p for x in row] for row in mat]
    if not A:
        return 0
    ncols = len(A[0])
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(A)) if A[r][col]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][col], -1, p)
        A[rank] = [x * inv % p for x in A[rank]]
        for r in range(len(A)):
            if r != rank and A[r][col]:
                f = A[r][col]
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[rank])]
        rank += 1
        if rank == len(A):
            break
    return rank


def nullspace_mod_p(rows: Sequence[SparseRow], ncols: int, p: int) -> list[SparseRow]:
    """Basis of {v : rows . v = 0} as sparse vectors.

    Reduced row echelon form followed by back substitution; intended for the
    small matrices used in cross-checks, not for the main engine.
    """
    pivots: dict[int, SparseRow] = {}  # pivot column -> normalized row
    for r in rows:
        row = {c: v % p for c, v in r.items() if v % p}
        for pc, prow in pivots.items():
            f = row.get(pc)
            if f:
                for cc, v in prow.items():
                    nv = (row.get(cc, 0) - f * v) % p
                    if nv:
                        row[cc] = nv
                    else:
                        row.pop(cc, None)
        if not row:
            continue
        c = min(row)
        inv = pow(row[c], -1, p)
        row = {cc: v * inv % p for cc, v in row.items()}
        for pc, prow in pivots.items():
            f = prow.get(c)
            if f:
                for cc, v in row.items():
                    nv = (prow.get(cc, 0) - f * v) % p
                    if nv:
                        prow[cc] = nv
                    else:
                        prow.pop(cc, None)
        pivots[c] = row
    basis = []
    for free in range(ncols):
        if free in pivots:
            continue
        v = {free: 1}
        for pc, prow in pivots.items():
            f = prow.get(free)
            if f:
                v[pc] = (-f) % p
        basis.append(v)
    return basis


def apply_rows(rows: Sequence[SparseRow], vec: SparseRow, p: int) -> list[int]:
    return [sum(v * vec.get(c, 0) for c, v in r.items()) % p for r in rows]
