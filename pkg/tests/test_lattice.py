
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import box, det, det_cofactor, in_span_bruteforce, smith_invariants
from redsub.arith import crt, factorint, is_prime, lcm, ord_p, primes_between, sqrt_mod
from redsub.errors import NotContained
from redsub.lattice import (
    INFINITE_INDEX,
    IntMatrix,
    Lattice,
    adapted_basis,
    hnf,
    inverse_unimodular,
    kernel_basis,
    lattice_index,
    lattice_intersection,
    left_kernel_basis,
    matrix_from_json,
    matrix_to_json,
    membership_localized,
    relative_coordinates,
    separating_index,
    snf,
    solve_integer,
    solve_rational,
)


def matrices(max_dim=4, bound=20):
    return st.integers(1, max_dim).flatmap(
        lambda m: st.integers(1, max_dim).flatmap(
            lambda n: st.lists(
                st.lists(st.integers(-bound, bound), min_size=n, max_size=n), min_size=m, max_size=m
            )
        )
    )


# -- arithmetic helpers ---------------------------------------------------------------


def test_ord_p_of_zero_is_infinite():
    assert ord_p(0, 2) == float("inf")
    assert ord_p(48, 2) == 4
    assert ord_p(-9, 3) == 2


def test_factorint_and_primes_agree_with_trial_division():
    for n in range(2, 500):
        f = factorint(n)
        prod = 1
        for q, e in f.items():
            assert is_prime(q)
            prod *= q**e
        assert prod == n
    assert primes_between(1, 30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert lcm(4, 6, 10) == 60


def test_crt_and_sqrt_mod():
    x, m = crt([2, 3], [5, 7])
    assert m == 35 and x % 5 == 2 and x % 7 == 3
    for p in [5, 13, 17, 101]:
        squares = {a * a % p for a in range(p)}
        for a in range(p):
            r = sqrt_mod(a, p)
            assert (r is not None) == (a in squares)
            if r is not None:
                assert r * r % p == a


# -- Hermite form ---------------------------------------------------------------------------


def test_hnf_identity_and_diagonal():
    I = IntMatrix.identity(3)
    dec = hnf(I)
    assert dec.H == I and dec.U == I
    D = IntMatrix.from_rows([[2, 0], [0, 3]])
    assert hnf(D).H == D


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_hnf_row_space_and_shape(rows):
    A = IntMatrix.from_rows(rows)
    dec = hnf(A)
    assert dec.U @ A == dec.H
    assert abs(det(dec.U.tolist())) == 1
    H = dec.H.tolist()
    nonzero = [r for r in H if any(r)]
    pivots = [next(j for j, v in enumerate(r) if v) for r in nonzero]
    assert pivots == sorted(set(pivots))
    for i, (r, j) in enumerate(zip(nonzero, pivots)):
        assert r[j] > 0
        for above in nonzero[:i]:
            assert 0 <= above[j] < r[j]
    # mutual integer solvability of the row spaces
    for r in rows:
        assert solve_integer(IntMatrix.from_rows(nonzero, A.cols).T, r) is not None if nonzero else not any(r)
    for r in nonzero:
        assert solve_integer(A.T, r) is not None


# -- Smith form ---------------------------------------------------------------------------


def test_snf_small_cases():
    assert snf(IntMatrix.from_rows([[2, 0], [0, 3]])).diagonal == [1, 6]
    Z = IntMatrix.zeros(2, 3)
    S = snf(Z)
    assert S.D == Z and S.U == IntMatrix.identity(2) and S.V == IntMatrix.identity(3)


@settings(max_examples=80, deadline=None)
@given(matrices(max_dim=5))
def test_snf_matches_minor_gcds(rows):
    A = IntMatrix.from_rows(rows)
    S = snf(A)
    assert S.U @ A @ S.V == S.D
    assert abs(det(S.U.tolist())) == 1 and abs(det(S.V.tolist())) == 1
    d = S.diagonal
    nonzero = [x for x in d if x]
    assert d[: len(nonzero)] == nonzero, "zeros come last"
    assert all(x > 0 for x in nonzero)
    assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    assert nonzero == smith_invariants(rows)
    for i in range(S.D.rows):
        for j in range(S.D.cols):
            if i != j:
                assert S.D[i, j] == 0


# -- solving and kernels ------------------------------------------------------------------


def test_solve_integer_examples():
    I = IntMatrix.identity(3)
    assert solve_integer(I, (4, -1, 7)) == (4, -1, 7)
    assert solve_integer(IntMatrix.from_rows([[2]]), (3,)) is None
    x = solve_integer(IntMatrix.from_rows([[2, 3]]), (1,))
    assert 2 * x[0] + 3 * x[1] == 1


@settings(max_examples=60, deadline=None)
@given(matrices(), st.lists(st.integers(-5, 5), min_size=5, max_size=5))
def test_solve_integer_agrees_with_substitution(rows, xs):
    A = IntMatrix.from_rows(rows)
    x = xs[: A.cols]
    b = tuple(sum(A[i, j] * x[j] for j in range(A.cols)) for i in range(A.rows))
    sol = solve_integer(A, b)
    assert sol is not None
    assert tuple(sum(A[i, j] * sol[j] for j in range(A.cols)) for i in range(A.rows)) == b


def test_solve_integer_reports_absence_exactly():
    A = IntMatrix.from_rows([[2, 4], [6, 8]])
    # image is {(2a+4b, 6a+8b)}; brute force on a box decides small targets
    for b in box(2, 4):
        found = any(2 * u + 4 * v == b[0] and 6 * u + 8 * v == b[1] for u, v in box(2, 8))
        assert (solve_integer(A, b) is not None) == found


@settings(max_examples=40, deadline=None)
@given(matrices())
def test_kernels_are_kernels(rows):
    A = IntMatrix.from_rows(rows)
    for v in kernel_basis(A):
        assert all(sum(A[i, j] * v[j] for j in range(A.cols)) == 0 for i in range(A.rows))
    K = left_kernel_basis(rows)
    for w in K:
        assert all(sum(w[i] * rows[i][j] for i in range(len(rows))) == 0 for j in range(A.cols))
    rank = Lattice.from_generators(rows, A.cols).rank
    assert len(kernel_basis(A)) == A.cols - rank
    assert len(K) == A.rows - rank


def test_solve_rational_and_inverse():
    sol = solve_rational([[2, 0], [0, 4]], [1, 1])
    assert [str(s) for s in sol] == ["1/2", "1/4"]
    assert solve_rational([[1, 1], [1, 1]], [0, 1]) is None
    V = IntMatrix.from_rows([[2, 1], [1, 1]])
    assert V @ inverse_unimodular(V) == IntMatrix.identity(2)


# -- lattices ---------------------------------------------------------------------------------


def test_intersection_examples():
    L = Lattice.from_generators([(1, 2), (0, 5)], 2)
    assert lattice_intersection(L, L) == L
    two = Lattice.full(2).scale(2)
    three = Lattice.full(2).scale(3)
    six = lattice_intersection(two, three)
    assert six == Lattice.full(2).scale(6)
    for v in box(2, 12):
        assert (v in six) == (v in two and v in three)


@settings(max_examples=40, deadline=None)
@given(matrices(max_dim=3, bound=6), matrices(max_dim=3, bound=6))
def test_intersection_is_contained_in_both(r1, r2):
    n = min(len(r1[0]), len(r2[0]))
    L1 = Lattice.from_generators([r[:n] for r in r1], n)
    L2 = Lattice.from_generators([r[:n] for r in r2], n)
    M = lattice_intersection(L1, L2)
    for v in M.vectors:
        assert v in L1 and v in L2
    for v in box(n, 3):
        if v in L1 and v in L2:
            assert v in M


def test_index_examples():
    Z2 = Lattice.full(2)
    assert lattice_index(Z2, Z2) == 1
    assert lattice_index(Lattice.full(1).scale(2), Lattice.full(1)) == 2
    sub = Lattice.from_generators([(2, 0), (0, 3)], 2)
    cosets = {(a % 2, b % 3) for a, b in box(2, 6)}
    assert lattice_index(sub, Z2) == len(cosets) == 6
    assert lattice_index(Lattice.from_generators([(1, 0)], 2), Z2) == INFINITE_INDEX
    with pytest.raises(NotContained):
        lattice_index(Z2, sub)
    with pytest.raises(NotContained):
        relative_coordinates(Z2, sub)


def test_coordinates_and_membership_match_brute_force():
    gens = [(3, 1, 0), (0, 2, 2)]
    L = Lattice.from_generators(gens, 3)
    for v in box(3, 3):
        assert (v in L) == in_span_bruteforce(v, gens, 4)
        c = L.coordinates(v)
        if c is not None:
            assert tuple(sum(ci * b[k] for ci, b in zip(c, L.vectors)) for k in range(3)) == v


def test_adapted_basis_examples():
    ab = adapted_basis(Lattice.full(1).scale(5), 1)
    assert ab.elementary_divisors == (5,) and ab.basis_vectors == ((1,),)
    M = Lattice.from_generators([(2, 0), (0, 0)], 2)
    ab = adapted_basis(M, 2)
    assert ab.elementary_divisors == (2, 0)
    assert ab.sublattice() == M
    M = Lattice.from_generators([(1, 1), (1, -1)], 2)
    ab = adapted_basis(M, 2)
    assert ab.elementary_divisors == (1, 2)
    assert ab.sublattice() == M


@settings(max_examples=40, deadline=None)
@given(matrices(max_dim=3, bound=9))
def test_adapted_basis_spans_the_lattice(rows):
    n = len(rows[0])
    M = Lattice.from_generators(rows, n)
    ab = adapted_basis(M, n)
    assert abs(det([list(y) for y in ab.basis_vectors])) == 1
    assert ab.sublattice() == M
    for y, c in zip(ab.basis_vectors, range(n)):
        assert ab.coordinates(y) == tuple(int(i == c) for i in range(n))


def test_localized_membership_examples():
    four = Lattice.full(1).scale(4)
    assert not membership_localized((2,), four, 1, 2)
    assert membership_localized((2,), four, 1, 3)
    assert membership_localized((1,), Lattice.full(1).scale(3), 1, 2)
    L = Lattice.from_generators([(2, 4), (0, 6)], 2)
    for p in [2, 3, 5, 7]:
        assert membership_localized((2, 4), L, 1, p)


@settings(max_examples=60, deadline=None)
@given(matrices(max_dim=3, bound=8), st.lists(st.integers(-8, 8), min_size=3, max_size=3),
       st.sampled_from([2, 3, 5]))
def test_localized_membership_matches_denominator_search(rows, x, p):
    """x in M (x) Z_(p) iff k x in M, k the prime-to-p part of the torsion order of Z^n / M."""
    n = len(rows[0])
    x = tuple(x[:n])
    M = Lattice.from_generators(rows, n)
    k = 1
    for d in smith_invariants(rows):
        k *= d
    while k % p == 0:
        k //= p
    expected = tuple(k * a for a in x) in M
    assert membership_localized(x, M, 1, p) == expected
    i = separating_index(x, adapted_basis(M, n), p)
    assert (i is None) == expected


def test_matrix_json_round_trip():
    A = IntMatrix.from_rows([[1, -2], [3, 4], [0, 0]])
    assert matrix_from_json(matrix_to_json(A), 2) == A


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n),
                                                    min_size=n, max_size=n)))
def test_determinant_oracles_agree(M):
    assert det(M) == det_cofactor(M)
