import random

import pytest
from hypothesis import given, settings, strategies as st

from flagcoh import fplinalg
from flagcoh.fplinalg import apply_rows, nullspace_mod_p, rank_dense, rank_mod_p, rank_mod_p_python

PRIMES = [3, 5, 7, 101]


def textbook_rank(mat, p):
    m = [list(r) for r in mat]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] % p), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][col], -1, p)
        for i in range(len(m)):
            if i != rank and m[i][col] % p:
                f = m[i][col] * inv
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


@st.composite
def sparse_matrices(draw):
    p = draw(st.sampled_from(PRIMES))
    nr = draw(st.integers(0, 12))
    nc = draw(st.integers(1, 12))
    density = draw(st.floats(0.05, 0.9))
    seed = draw(st.integers(0, 10**6))
    rng = random.Random(seed)
    dense = [[rng.randrange(p) if rng.random() < density else 0 for _ in range(nc)] for _ in range(nr)]
    return p, dense


def to_sparse(dense):
    return [{j: v for j, v in enumerate(r) if v} for r in dense]


@given(sparse_matrices())
@settings(max_examples=150)
def test_rank_implementations_agree(case):
    p, dense = case
    r = textbook_rank(dense, p)
    assert rank_dense(dense, p) == r
    assert rank_mod_p_python(to_sparse(dense), p) == r
    assert rank_mod_p(to_sparse(dense), p) == r


@given(sparse_matrices())
@settings(max_examples=80)
def test_nullspace(case):
    p, dense = case
    if not dense:
        return
    nc = len(dense[0])
    # kernel of the transpose map v -> rows(v): rows are functionals on F_p^nc
    basis = nullspace_mod_p(to_sparse(dense), nc, p)
    assert len(basis) == nc - textbook_rank(dense, p)
    for v in basis:
        assert not any(apply_rows(to_sparse(dense), v, p))


def test_rank_is_reduced_mod_p():
    assert rank_mod_p([{0: 3}, {1: 6}], 3) == 0
    assert rank_mod_p([{0: 4}, {0: 1}], 3) == 1


def test_compiled_kernel_flag():
    assert isinstance(fplinalg.have_compiled_kernel(), bool)


@pytest.mark.parametrize("p", [3, 5])
def test_large_identity(p):
    rows = [{i: 1, i + 1: p - 1} for i in range(500)]
    assert rank_mod_p(rows, p) == 500
