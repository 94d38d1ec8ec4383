import random

import pytest

from flagcoh import geom
from flagcoh.geom import (
    ResourceExhausted,
    fixed_points,
    jacobian_rank_at,
    on_variety,
    point_count,
    quotient_ring,
    random_point,
    section_space,
)
from flagcoh.rootdata import Weight, euler_characteristic


def poincare_count(p):
    # 8 Bruhat cells of dimensions 0,1,1,2,2,3,3,4
    return sum(p**d for d in (0, 1, 1, 2, 2, 3, 3, 4))


@pytest.mark.parametrize("p", [3, 5])
def test_point_counts(p):
    assert point_count(p) == poincare_count(p)


def test_fixed_points():
    charts = fixed_points()
    assert len(charts) == 8
    for c in charts:
        assert on_variety(c.fixed_point(), 5)


def test_smooth_at_random_points():
    rng = random.Random(7)
    for _ in range(20):
        pt = random_point(5, rng)
        assert on_variety(pt, 5)
        assert jacobian_rank_at(pt, 5) == 4  # codimension of X in P3 x P5


@pytest.mark.parametrize("a,b", [(0, 0), (1, 0), (0, 1), (2, 1), (1, 3)])
def test_hilbert_function_matches_weyl_dimension(a, b):
    R = quotient_ring(3)
    assert R.hilbert(a, b) == euler_characteristic(Weight(a, b))


def test_normal_forms_are_standard():
    R = quotient_ring(5)
    m = geom.mono_mul(geom.mono_var(4), geom.mono_var(9))  # p12 p34
    nf = R.nf_mono(m)
    assert all(R.is_standard(k) for k in nf)


@pytest.mark.parametrize("p", [3, 5, 7, 11])
def test_groebner_basis_reduces_mod_p(p):
    geom.check_groebner_characteristic(p)


def test_section_space_budget():
    with pytest.raises(ResourceExhausted):
        section_space(Weight(3, 3), fixed_points()[:2], 2, 3, max_basis=5)


def test_release_caches_keeps_results():
    R = quotient_ring(3)
    before = R.basis(2, 2, (0, 0))
    R.release_caches()
    assert R.basis(2, 2, (0, 0)) == before
    R.release_caches()
    assert R.cache_size() == 0
    R.basis(2, 2, (0, 0))
    assert R.cache_size() > 0
