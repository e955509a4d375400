import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import closure, curve_points
from redsub.arith import primes_between
from redsub.elliptic import (
    CurveFp,
    CurveQ,
    FormalPoint,
    MWPresentation,
    check_structure,
    count_points,
    divisibility,
    dlog,
    group_structure,
    point_order,
    recompose,
    reduce_point,
    subgroup_membership,
)
from redsub.errors import BadReduction, ConfigError, PrimeTooLarge

E17 = CurveQ(0, 17)
P1 = E17.point(-2, 3)
P2 = E17.point(-1, 4)


def small_curves(pmax):
    """Every nonsingular (a4, a6) modulo each prime 5 <= p <= pmax, thinned for speed."""
    for p in primes_between(5, pmax):
        for a4 in range(0, p, max(1, p // 5)):
            for a6 in range(0, p, max(1, p // 5)):
                if (4 * a4**3 + 27 * a6**2) % p:
                    yield CurveFp(p, a4, a6)


# -- rational points ---------------------------------------------------------------------------


def test_generators_lie_on_the_curve():
    for x, y in [(-2, 3), (-1, 4)]:
        assert y * y == x**3 + 17
    with pytest.raises(ConfigError):
        E17.point(1, 1)
    with pytest.raises(ConfigError):
        CurveQ(0, 0)


def test_rational_group_law():
    Q = E17.add(P1, P2)
    assert E17.contains(Q)
    assert E17.add(P1, E17.neg(P1)) is None
    assert E17.mul(3, P1) == E17.add(P1, E17.add(P1, P1))
    assert E17.mul(-2, P2) == E17.neg(E17.add(P2, P2))
    assert E17.add(E17.add(P1, P2), P1) == E17.add(P1, E17.add(P2, P1))


def test_reduce_point_examples():
    assert reduce_point(None, E17, 5) is None
    R = reduce_point(P1, E17, 5)
    assert R == (3, 3)
    assert (R[1] ** 2 - R[0] ** 3 - 17) % 5 == 0
    with pytest.raises(BadReduction):
        reduce_point(P1, E17, 3)
    with pytest.raises(BadReduction):
        reduce_point(P1, E17, 17)


def test_reduction_of_points_with_p_in_the_denominator():
    Q = E17.add(P1, P2)
    for p in primes_between(5, 200):
        if not E17.has_good_reduction(p):
            continue
        R = reduce_point(Q, E17, p)
        Ep = E17.reduce(p)
        assert Ep.contains(R)
        if Q[0].denominator % p == 0:
            assert R is None


@pytest.mark.parametrize("p", [5, 7, 11, 13, 19, 23, 101])
def test_reduction_is_a_homomorphism(p):
    Ep = E17.reduce(p)
    rng = random.Random(p)
    for _ in range(6):
        a, b, c, d = (rng.randint(-3, 3) for _ in range(4))
        X = E17.add(E17.mul(a, P1), E17.mul(b, P2))
        Y = E17.add(E17.mul(c, P1), E17.mul(d, P2))
        lhs = reduce_point(E17.add(X, Y), E17, p)
        rhs = Ep.add(reduce_point(X, E17, p), reduce_point(Y, E17, p))
        assert lhs == rhs


def test_mw_presentation_checks_torsion_closure():
    E = CurveQ(-43, 166)
    pts = [("3", "8"), ("3", "-8"), ("-5", "16"), ("-5", "-16"), ("11", "32"), ("11", "-32")]
    mw = MWPresentation.create(E, [], pts)
    assert mw.torsion_order == 7
    assert len(mw.torsion_table) == 7
    with pytest.raises(ConfigError):
        MWPresentation.create(E, [], pts[:2])
    mw17 = MWPresentation.create(E17, [(-2, 3), (-1, 4)])
    x = FormalPoint((2, -1))
    assert mw17.evaluate(x) == E17.add(E17.mul(2, P1), E17.neg(P2))
    with pytest.raises(ConfigError):
        mw17.check_point(FormalPoint((21, 0)))


# -- point counts ------------------------------------------------------------------------------------


def test_point_count_examples():
    assert count_points(CurveFp(5, 0, 1)) == 6 == len(curve_points(0, 1, 5))
    assert count_points(CurveFp(5, 4, 0)) == 8 == len(curve_points(-1, 0, 5))
    with pytest.raises(PrimeTooLarge):
        count_points(CurveFp(1_000_003, 1, 1))
    with pytest.raises(BadReduction):
        CurveFp(3, 1, 1)
    with pytest.raises(BadReduction):
        CurveFp(5, 0, 0)


@pytest.mark.parametrize("E", list(small_curves(31)), ids=str)
def test_point_count_matches_enumeration(E):
    pts = curve_points(E.a4, E.a6, E.p)
    N = count_points(E)
    assert N == len(pts)
    assert (N - E.p - 1) ** 2 <= 4 * E.p


# -- group structure and discrete logs ------------------------------------------------------------------


def test_full_two_torsion():
    G = group_structure(CurveFp(5, 4, 0))
    two_torsion = [P for P in curve_points(-1, 0, 5) if P is None or P[1] == 0]
    assert len(two_torsion) == 4
    assert G.d1 % 2 == 0 and (G.d1, G.d2) == (2, 4)


def test_cyclic_structure():
    G = group_structure(CurveFp(5, 0, 1))
    assert G.d1 == 1 and point_order(G.B2, G) == G.d2 == 6


@pytest.mark.parametrize("E", list(small_curves(47)), ids=str)
def test_structure_matches_enumeration(E):
    G = group_structure(E)
    assert check_structure(G) == []
    pts = curve_points(E.a4, E.a6, E.p)
    # the largest point order equals d2 (exponent of the group)
    orders = {point_order(P, G) for P in pts}
    assert max(orders) == G.d2
    for P in pts:
        assert recompose(dlog(P, G), G) == P


def test_dlog_examples():
    G = group_structure(CurveFp(101, 1, 1))
    assert dlog(None, G) == (0, 0)
    assert dlog(G.B2, G) == (0, 1 % G.d2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([CurveFp(p, a, b) for p, a, b in [(101, 1, 1), (409, 0, 17), (997, 3, 7), (113, 2, 0), (241, 0, 17)]]),
       st.integers(0, 10**6), st.integers(0, 10**6))
def test_dlog_round_trip(E, k1, k2):
    G = group_structure(E)
    Q = recompose((k1, k2), G)
    q = dlog(Q, G)
    assert recompose(q, G) == Q
    assert q == (k1 % G.d1 if G.d1 > 1 else 0, k2 % G.d2)


# -- predicates ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("E", [E for E in small_curves(23)], ids=str)
def test_membership_matches_bfs(E):
    G = group_structure(E)
    pts = curve_points(E.a4, E.a6, E.p)
    rng = random.Random(E.p * 1000 + E.a4 * 31 + E.a6)
    for _ in range(4):
        gens = rng.sample(pts, rng.randint(0, 2))
        sub = closure(gens, E.add, None)
        for Q in pts:
            assert subgroup_membership(Q, gens, G) == (Q in sub)


def test_membership_examples():
    E = CurveFp(5, 4, 0)
    G = group_structure(E)
    assert subgroup_membership(None, [G.B1], G)
    assert subgroup_membership(None, [], G)
    assert not subgroup_membership(G.B2, [], G)
    assert not subgroup_membership(G.B1, [E.mul(2, G.B1)], G)  # d1 = 2 is even
    Eodd = next(E for E in small_curves(60) if group_structure(E).d1 % 2 == 1 and group_structure(E).d1 > 1)
    G = group_structure(Eodd)
    assert subgroup_membership(G.B1, [Eodd.mul(2, G.B1)], G)


@pytest.mark.parametrize("E", [E for E in small_curves(50) if count_points(E) <= 100][:40], ids=str)
def test_divisibility_matches_enumeration(E):
    G = group_structure(E)
    pts = curve_points(E.a4, E.a6, E.p)
    for m in range(1, 9):
        multiples = {E.mul(m, P) for P in pts}
        for Q in pts:
            assert divisibility(Q, m, G) == (Q in multiples)


def test_divisibility_and_order_examples():
    E = CurveFp(101, 1, 1)
    G = group_structure(E)
    assert divisibility(G.B2, 1, G)
    assert divisibility(G.B2, G.d2, G) == (G.d2 == 1)
    assert point_order(None, G) == 1
    assert point_order(G.B2, G) == G.d2
    rng = random.Random(0)
    for _ in range(20):
        Q = E.random_point(rng)
        n = point_order(Q, G)
        assert G.order_N % n == 0
        for k in range(1, 3 * n + 1, max(1, n // 7)):
            assert (E.mul(k, Q) is None) == (k % n == 0)


# -- the regression witness -------------------------------------------------------------------------------


def test_smallest_witness_by_enumeration():
    """P1 reduces outside <2 P1, 2 P2> first at p = 11, by breadth-first closure."""
    first = None
    for p in primes_between(5, 40):
        if not E17.has_good_reduction(p):
            continue
        Ep = E17.reduce(p)
        g1, g2 = reduce_point(P1, E17, p), reduce_point(P2, E17, p)
        sub = closure([Ep.mul(2, g1), Ep.mul(2, g2)], Ep.add, None)
        if g1 not in sub:
            first = p
            break
    assert first == 11
