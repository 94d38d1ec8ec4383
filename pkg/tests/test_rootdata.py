from hypothesis import given, strategies as st

from flagcoh import rootdata
from flagcoh.rootdata import CANONICAL, RHO, Weight, bott_char0, dot_action, euler_characteristic, weyl_group

small = st.integers(-12, 12)


def test_chi_values():
    assert euler_characteristic(Weight(0, 0)) == 1
    assert euler_characteristic(Weight(2, 3)) == 154
    assert euler_characteristic(Weight(3, -3)) == 0
    # standard and five-dimensional representations
    assert euler_characteristic(Weight(1, 0)) == 4
    assert euler_characteristic(Weight(0, 1)) == 5


def test_weyl_group():
    W = weyl_group()
    assert len(W) == 8
    assert sorted(w.length for w in W) == [0, 1, 1, 2, 2, 3, 3, 4]
    assert dot_action(rootdata.W0, Weight(0, 0)) == CANONICAL


@given(small, small)
def test_chi_serre_symmetric(a, b):
    lam = Weight(a, b)
    assert euler_characteristic(lam) == euler_characteristic(rootdata.serre_dual(lam))


@given(small, small)
def test_chi_dot_antisymmetric(a, b):
    lam = Weight(a, b)
    for w in weyl_group():
        assert euler_characteristic(dot_action(w, lam)) == (-1) ** w.length * euler_characteristic(lam)


@given(small, small)
def test_chi_integral(a, b):
    # the dimension polynomial always lands in the integers
    num = (a + 1) * (b + 1) * (a + b + 2) * (a + 2 * b + 3)
    assert num % 6 == 0
    assert euler_characteristic(Weight(a, b)) * 6 == num


@given(small, small)
def test_bott_char0_consistent(a, b):
    h = bott_char0(Weight(a, b))
    assert sum((-1) ** i * v for i, v in enumerate(h)) == euler_characteristic(Weight(a, b))
    assert sum(1 for v in h if v) <= 1


def test_weight_multiplicities_sum_to_dimension():
    for lam in (Weight(1, 0), Weight(0, 1), Weight(2, 1), Weight(3, 2)):
        r = rootdata.weight_radius(lam) + 1
        total = 0
        for e1 in range(-r, r + 1):
            for e2 in range(-r, r + 1):
                total += rootdata.weight_multiplicity(lam, (e1, e2))
        assert total == euler_characteristic(lam)


def test_epsilon_round_trip():
    for a, b in [(0, 0), (3, -2), (-5, 7)]:
        w = Weight(a, b)
        assert Weight.from_epsilon(*w.epsilon()) == w
    assert RHO.epsilon() == (2, 1)


def test_parse_weight():
    assert rootdata.parse_weight("(2,-3)") == Weight(2, -3)
