"""Exact integer linear algebra: Hermite/Smith forms, integer solving, lattices.

Matrices are :class:`IntMatrix` values; lattices are row spans kept in
row-style Hermite normal form, so two lattices are equal exactly when their
bases compare equal.  No floating point is used anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import ord_p
from .errors import NotContained

INFINITE_INDEX = math.inf


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries,"
                f" got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(int(x) for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def col(self, j: int) -> tuple[int, ...]:
        return self.entries[j :: self.cols] if self.cols else ()

    def tolist(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix.from_rows([self.col(j) for j in range(self.cols)], self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        cols = [other.col(j) for j in range(other.cols)]
        return IntMatrix.from_rows(
            [[sum(a * b for a, b in zip(self.row(i), c)) for c in cols] for i in range(self.rows)],
            other.cols,
        )

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        """Row vector times matrix: v @ self."""
        if len(v) != self.rows:
            raise ValueError("shape mismatch")
        return tuple(sum(v[i] * self.entries[i * self.cols + j] for i in range(self.rows)) for j in range(self.cols))

    def det(self) -> int:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        return bareiss_det(self.tolist())

    def is_zero(self) -> bool:
        return not any(self.entries)


def _as_rows(A) -> list[list[int]]:
    if isinstance(A, IntMatrix):
        return A.tolist()
    return [list(map(int, r)) for r in A]


def _ncols(A, rows: list[list[int]]) -> int:
    if isinstance(A, IntMatrix):
        return A.cols
    return len(rows[0]) if rows else 0


def bareiss_det(M: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination."""
    n = len(M)
    if n == 0:
        return 1
    M = [row[:] for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k]:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


# -- Hermite normal form ------------------------------------------------------


@dataclass(frozen=True)
class HermiteDecomposition:
    H: IntMatrix
    U: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for i in range(self.H.rows) if any(self.H.row(i)))


def _hnf_rows(H: list[list[int]], ncols: int, U: list[list[int]] | None):
    m = len(H)
    r = 0
    for c in range(ncols):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if H[i][c]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(H[i][c]))
            if piv != r:
                H[r], H[piv] = H[piv], H[r]
                if U is not None:
                    U[r], U[piv] = U[piv], U[r]
            done = True
            pr = H[r]
            for i in range(r + 1, m):
                if H[i][c]:
                    q = H[i][c] // pr[c]
                    H[i] = [a - q * b for a, b in zip(H[i], pr)]
                    if U is not None:
                        U[i] = [a - q * b for a, b in zip(U[i], U[r])]
                    if H[i][c]:
                        done = False
            if done:
                break
        if H[r][c]:
            if H[r][c] < 0:
                H[r] = [-a for a in H[r]]
                if U is not None:
                    U[r] = [-a for a in U[r]]
            pr = H[r]
            for i in range(r):
                q = H[i][c] // pr[c]
                if q:
                    H[i] = [a - q * b for a, b in zip(H[i], pr)]
                    if U is not None:
                        U[i] = [a - q * b for a, b in zip(U[i], U[r])]
            r += 1
    return H, U


def hnf(A) -> HermiteDecomposition:
    """Row-style Hermite normal form with transform: ``U @ A == H``."""
    rows = _as_rows(A)
    n = _ncols(A, rows)
    m = len(rows)
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    H, U = _hnf_rows(rows, n, U)
    return HermiteDecomposition(IntMatrix.from_rows(H, n), IntMatrix.from_rows(U, m))


def hnf_basis(vectors: Iterable[Sequence[int]], ncols: int) -> list[list[int]]:
    """Nonzero HNF rows of the span of ``vectors`` (no transform tracked)."""
    H, _ = _hnf_rows([list(map(int, v)) for v in vectors], ncols, None)
    return [row for row in H if any(row)]


# -- Smith normal form --------------------------------------------------------


@dataclass(frozen=True)
class SmithDecomposition:
    D: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> list[int]:
        return [self.D[i, i] for i in range(min(self.D.rows, self.D.cols))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)


def snf(A) -> SmithDecomposition:
    """Smith normal form ``U @ A @ V == D`` with ``d1 | d2 | ...`` and zeros last."""
    D = _as_rows(A)
    n = _ncols(A, D)
    m = len(D)
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (D, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        D[dst] = [a + q * b for a, b in zip(D[dst], D[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for M in (D, V):
            for row in M:
                row[dst] += q * row[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            piv = D[t][t]
            for i in range(t + 1, m):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // piv))
            for j in range(t + 1, n):
                if D[t][j]:
                    add_col(j, t, -(D[t][j] // piv))
            rest = [(abs(D[i][t]), i, t) for i in range(t + 1, m) if D[i][t]]
            rest += [(abs(D[t][j]), t, j) for j in range(t + 1, n) if D[t][j]]
            if rest:
                _, i, j = min(rest)
                if j == t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if D[i][j] % piv),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if D[t][t] < 0:
            D[t] = [-a for a in D[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    return SmithDecomposition(
        IntMatrix.from_rows(D, n), IntMatrix.from_rows(U, m), IntMatrix.from_rows(V, n)
    )


def elementary_divisors(A) -> list[int]:
    return snf(A).diagonal


# -- solving ------------------------------------------------------------------


def solve_integer(A, b: Sequence[int]) -> tuple[int, ...] | None:
    """An integer x with ``A x == b`` (column convention), or None if none exists."""
    rows = _as_rows(A)
    n = _ncols(A, rows)
    if len(b) != len(rows):
        raise ValueError("right-hand side length must equal the row count")
    S = snf(IntMatrix.from_rows(rows, n))
    c = S.U.T.apply(b)  # U @ b
    z = [0] * n
    for i, ci in enumerate(c):
        d = S.D[i, i] if i < n else 0
        if d == 0:
            if ci:
                return None
        else:
            if ci % d:
                return None
            z[i] = ci // d
    return S.V.T.apply(z) if n else ()


def kernel_basis(A) -> list[tuple[int, ...]]:
    """Z-basis of {x : A x = 0}."""
    rows = _as_rows(A)
    n = _ncols(A, rows)
    if not rows:
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    S = snf(IntMatrix.from_rows(rows, n))
    r = S.rank
    return [S.V.col(j) for j in range(r, n)]


def left_kernel_basis(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Z-basis of {z : z @ B = 0} for the matrix with the given rows."""
    m = len(rows)
    if m == 0:
        return []
    n = len(rows[0])
    if n == 0:
        return [tuple(int(i == j) for j in range(m)) for i in range(m)]
    return kernel_basis(IntMatrix.from_rows(rows, n).T)


def solve_rational(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """A rational solution of ``A x == b`` with free variables set to zero."""
    m = len(A)
    n = len(A[0]) if m else 0
    M = [[Fraction(x) for x in A[i]] + [Fraction(b[i])] for i in range(m)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(m):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if any(M[i][n] != 0 for i in range(r, m)):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = M[i][n]
    return x


def inverse_unimodular(A: IntMatrix) -> IntMatrix:
    H = hnf(A)
    if H.H != IntMatrix.identity(A.rows):
        raise ValueError("matrix is not unimodular")
    return H.U


# -- lattices -----------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """Row span of ``basis`` inside Z^ambient_rank, basis kept in HNF."""

    ambient_rank: int
    basis: IntMatrix = field(compare=True)

    @classmethod
    def from_generators(cls, vectors: Iterable[Sequence[int]], ambient_rank: int) -> "Lattice":
        vectors = [list(map(int, v)) for v in vectors]
        for v in vectors:
            if len(v) != ambient_rank:
                raise ValueError(f"vector of length {len(v)} in Z^{ambient_rank}")
        rows = hnf_basis(vectors, ambient_rank)
        return cls(ambient_rank, IntMatrix.from_rows(rows, ambient_rank))

    @classmethod
    def full(cls, n: int) -> "Lattice":
        return cls(n, IntMatrix.identity(n))

    @classmethod
    def zero(cls, n: int) -> "Lattice":
        return cls(n, IntMatrix.zeros(0, n))

    @property
    def rank(self) -> int:
        return self.basis.rows

    @property
    def vectors(self) -> list[tuple[int, ...]]:
        return [self.basis.row(i) for i in range(self.rank)]

    def coordinates(self, v: Sequence[int]) -> tuple[int, ...] | None:
        if self.rank == 0:
            return () if not any(v) else None
        return solve_integer(self.basis.T, v)

    def __contains__(self, v) -> bool:
        return self.coordinates(v) is not None

    def contains_lattice(self, other: "Lattice") -> bool:
        return all(v in self for v in other.vectors)

    def __add__(self, other: "Lattice") -> "Lattice":
        return Lattice.from_generators(self.vectors + other.vectors, self.ambient_rank)

    def scale(self, k: int) -> "Lattice":
        return Lattice.from_generators([[k * x for x in v] for v in self.vectors], self.ambient_rank)

    def tolist(self) -> list[list[int]]:
        return self.basis.tolist()


def lattice_intersection(L1: Lattice, L2: Lattice) -> Lattice:
    if L1.ambient_rank != L2.ambient_rank:
        raise ValueError("ambient ranks differ")
    n = L1.ambient_rank
    if L1.rank == 0 or L2.rank == 0:
        return Lattice.zero(n)
    B1, B2 = L1.vectors, L2.vectors
    k1 = len(B1)
    gens = []
    for z in left_kernel_basis(list(B1) + list(B2)):
        u = z[:k1]
        gens.append([sum(u[i] * B1[i][j] for i in range(k1)) for j in range(n)])
    return Lattice.from_generators(gens, n)


def relative_coordinates(sub: Lattice, sup: Lattice) -> IntMatrix:
    """Matrix C with ``C @ sup.basis == sub.basis``; NotContained otherwise."""
    rows = []
    for v in sub.vectors:
        c = sup.coordinates(v)
        if c is None:
            raise NotContained(f"{list(v)} is not in the super-lattice")
        rows.append(c)
    return IntMatrix.from_rows(rows, sup.rank)


def lattice_index(sub: Lattice, sup: Lattice):
    """[sup : sub] as an int, or ``INFINITE_INDEX`` when sub has lower rank."""
    C = relative_coordinates(sub, sup)
    if sub.rank < sup.rank:
        return INFINITE_INDEX
    if sup.rank == 0:
        return 1
    return math.prod(snf(C).diagonal)


@dataclass(frozen=True)
class AdaptedBasis:
    """Basis y_i of Z^n and divisors d_i with M = <d_1 y_1, ..., d_n y_n>."""

    basis_vectors: tuple[tuple[int, ...], ...]
    elementary_divisors: tuple[int, ...]
    torsion_order: int = 1
    coordinate_matrix: IntMatrix | None = None  # inverse of the y-matrix

    def coordinates(self, x: Sequence[int]) -> tuple[int, ...]:
        return self.coordinate_matrix.apply(x)

    def sublattice(self) -> Lattice:
        n = len(self.basis_vectors)
        return Lattice.from_generators(
            [[d * a for a in y] for d, y in zip(self.elementary_divisors, self.basis_vectors)], n
        )


def adapted_basis(M: Lattice, N_rank: int, torsion_order: int = 1) -> AdaptedBasis:
    if M.ambient_rank != N_rank:
        raise ValueError("M must live in Z^N_rank")
    if M.rank == 0:
        V = IntMatrix.identity(N_rank)
        divisors = [0] * N_rank
    else:
        S = snf(M.basis)
        V = S.V
        divisors = S.diagonal + [0] * (N_rank - M.rank)
    Y = inverse_unimodular(V)
    return AdaptedBasis(
        tuple(Y.row(i) for i in range(N_rank)), tuple(divisors), torsion_order, V
    )


def separating_index(x: Sequence[int], basis: AdaptedBasis, p: int) -> int | None:
    """Smallest i with ord_p(a_i) < ord_p(d_i), where x = sum a_i y_i."""
    a = basis.coordinates(x)
    for i, (ai, di) in enumerate(zip(a, basis.elementary_divisors)):
        if ord_p(ai, p) < ord_p(di, p):
            return i
    return None


def membership_localized(x: Sequence[int], M: Lattice, torsion_order: int, p: int) -> bool:
    """Whether x lies in M tensor Z_(p) (primes other than p inverted).

    ``M`` is the free part of a subgroup assumed to contain the torsion
    subgroup, so torsion never obstructs membership.
    """
    basis = adapted_basis(M, M.ambient_rank, torsion_order)
    return separating_index(x, basis, p) is None


def matrix_to_json(A: IntMatrix) -> list[list[int]]:
    return A.tolist()


def matrix_from_json(rows: list[list[int]], cols: int | None = None) -> IntMatrix:
    return IntMatrix.from_rows(rows, cols)
