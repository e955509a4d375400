"""Orders: commutative reduced finite flat Z-algebras with a given normalization.

An :class:`Order` is Z^rank with a structure-constant product.  Its
normalization is supplied by the caller as a list of number-field components
(each with an explicit integral basis) together with an embedding matrix;
nothing here computes maximal orders.

Prime ideals come from Kummer-Dedekind, so only primes not dividing
[O_j : Z[theta]] are accepted.  Prime ideals over p are indexed globally
across components, starting at 0; ``component_index`` records which
component each one lives in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import (
    BadUnit,
    EmbeddingNotInjective,
    EmbeddingNotRingMap,
    IndexDivisible,
    InfiniteCokernel,
    InvalidComponent,
    NoSolution,
    NotAssociative,
    NotCommutative,
)
from .lattice import (
    IntMatrix,
    Lattice,
    lattice_index,
    lattice_intersection,
    snf,
    solve_integer,
    solve_rational,
)

Element = tuple[int, ...]


# -- the order itself ---------------------------------------------------------


@dataclass(frozen=True)
class Order:
    rank: int
    mult_table: tuple[tuple[tuple[int, ...], ...], ...]  # e_i * e_j = sum_k T[i][j][k] e_k
    unity: Element
    name: str = ""

    @classmethod
    def create(cls, mult_table, unity, name: str = "") -> "Order":
        table = tuple(tuple(tuple(int(c) for c in cell) for cell in row) for row in mult_table)
        return cls(len(table), table, tuple(int(u) for u in unity), name)

    def basis_element(self, i: int) -> Element:
        return tuple(int(i == k) for k in range(self.rank))

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    def mul(self, u: Sequence[int], v: Sequence[int]) -> Element:
        out = [0] * self.rank
        T = self.mult_table
        for i, ui in enumerate(u):
            if not ui:
                continue
            for j, vj in enumerate(v):
                if not vj:
                    continue
                c = ui * vj
                for k, t in enumerate(T[i][j]):
                    if t:
                        out[k] += c * t
        return tuple(out)

    def add(self, u, v) -> Element:
        return tuple(a + b for a, b in zip(u, v))

    def sub(self, u, v) -> Element:
        return tuple(a - b for a, b in zip(u, v))

    def scale(self, k: int, u) -> Element:
        return tuple(k * a for a in u)

    def mult_matrix(self, beta: Sequence[int]) -> IntMatrix:
        """Matrix of u -> u*beta acting on row vectors."""
        return IntMatrix.from_rows([self.mul(self.basis_element(k), beta) for k in range(self.rank)], self.rank)

    def ideal(self, generators: Sequence[Sequence[int]]) -> "IdealLattice":
        """The ideal generated by the given elements."""
        gens = [self.mul(g, self.basis_element(k)) for g in generators for k in range(self.rank)]
        return IdealLattice(self, Lattice.from_generators(gens, self.rank))

    def whole(self) -> "IdealLattice":
        return IdealLattice(self, Lattice.full(self.rank))

    def principal_integer(self, m: int) -> "IdealLattice":
        return IdealLattice(self, Lattice.full(self.rank).scale(m))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "rank": self.rank,
            "mult_table": [[list(c) for c in row] for row in self.mult_table],
            "unity": list(self.unity),
        }


@dataclass(frozen=True)
class IdealLattice:
    order_ref: Order
    basis: Lattice

    def __contains__(self, u) -> bool:
        return tuple(u) in self.basis

    def __le__(self, other: "IdealLattice") -> bool:
        return other.basis.contains_lattice(self.basis)

    def __add__(self, other: "IdealLattice") -> "IdealLattice":
        return IdealLattice(self.order_ref, self.basis + other.basis)

    def __mul__(self, other: "IdealLattice") -> "IdealLattice":
        O = self.order_ref
        gens = [O.mul(a, b) for a in self.basis.vectors for b in other.basis.vectors]
        return IdealLattice(O, Lattice.from_generators(gens, O.rank))

    def __and__(self, other: "IdealLattice") -> "IdealLattice":
        return IdealLattice(self.order_ref, lattice_intersection(self.basis, other.basis))

    def scale(self, k: int) -> "IdealLattice":
        return IdealLattice(self.order_ref, self.basis.scale(k))

    @property
    def generators(self) -> list[Element]:
        return self.basis.vectors

    def index(self):
        return lattice_index(self.basis, Lattice.full(self.order_ref.rank))

    def is_closed(self) -> bool:
        O = self.order_ref
        return all(
            O.mul(v, O.basis_element(k)) in self.basis
            for v in self.basis.vectors
            for k in range(O.rank)
        )


def product_of_ideals(order: Order, ideals: Sequence[IdealLattice]) -> IdealLattice:
    out = order.whole()
    for I in ideals:
        out = out * I
    return out


# -- polynomials --------------------------------------------------------------


def _poly_mulmod(a: Sequence, b: Sequence, f: Sequence[int]) -> list:
    """a*b reduced modulo the monic polynomial f (coefficient lists, low to high)."""
    n = len(f) - 1
    prod = [0] * (len(a) + len(b) - 1) if a and b else [0]
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    for k in range(len(prod) - 1, n - 1, -1):
        c = prod[k]
        if c:
            for i in range(n + 1):
                prod[k - n + i] -= c * f[i]
    prod = prod[:n] + [0] * max(0, n - len(prod))
    return prod


def _fp_trim(a: list[int]) -> list[int]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _fp_divmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    a = [x % p for x in a]
    b = _fp_trim([x % p for x in b])
    db = len(b) - 1
    inv = pow(b[-1], -1, p)
    q = [0] * max(1, len(a) - db)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k] * inv % p
        if c:
            q[k - db] = c
            for i in range(db + 1):
                a[k - db + i] = (a[k - db + i] - c * b[i]) % p
    return _fp_trim(q), _fp_trim(a[:db] or [0])


def factor_mod_p(f: Sequence[int], p: int) -> list[tuple[tuple[int, ...], int]]:
    """Factor a monic integer polynomial modulo p into monic irreducibles.

    Exhaustive search over monic candidates of increasing degree; only meant
    for the small degrees of hand-written components.
    """
    f = _fp_trim([c % p for c in f])
    if f[-1] != 1:
        raise ValueError("polynomial must be monic")
    out = []
    deg = 1
    while len(f) - 1 > 0:
        if 2 * deg > len(f) - 1:
            out.append((tuple(f), 1))
            break
        for tail in itertools.product(range(p), repeat=deg):
            g = list(tail) + [1]
            e = 0
            while len(f) - 1 >= deg:
                q, r = _fp_divmod(f, g, p)
                if any(r):
                    break
                f, e = _fp_trim(q), e + 1
            if e:
                out.append((tuple(g), e))
        deg += 1
    return out


def _is_irreducible_over_q(f: Sequence[int]) -> bool:
    import sympy

    x = sympy.Symbol("x")
    return sympy.Poly(list(reversed(list(f))), x).is_irreducible


# -- number-field components ----------------------------------------------------


@dataclass(frozen=True)
class NumberFieldComponent:
    """Ring of integers of Q[x]/(f) given by an explicit Z-basis in powers of theta."""

    defining_poly: tuple[int, ...]  # monic, low to high
    ring_basis: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def create(cls, defining_poly, ring_basis=None) -> "NumberFieldComponent":
        f = tuple(int(c) for c in defining_poly)
        n = len(f) - 1
        if ring_basis is None:
            ring_basis = [[int(i == k) for k in range(n)] for i in range(n)]
        basis = tuple(
            tuple(Fraction(c) for c in list(w) + [0] * (n - len(w))) for w in ring_basis
        )
        return cls(f, basis)

    @property
    def degree(self) -> int:
        return len(self.defining_poly) - 1

    def power_coordinates(self, g: Sequence) -> tuple[Fraction, ...] | None:
        """Coordinates in ring_basis of an element written in powers of theta."""
        n = self.degree
        g = list(g) + [0] * (n - len(g))
        W_T = [[self.ring_basis[a][k] for a in range(n)] for k in range(n)]
        sol = solve_rational(W_T, g)
        return None if sol is None else tuple(sol)

    def _integral_coordinates(self, g) -> Element:
        c = self.power_coordinates(g)
        if c is None or any(x.denominator != 1 for x in c):
            raise InvalidComponent(f"element {list(g)} is not integral in the given basis")
        return tuple(int(x) for x in c)

    @cached_property
    def structure_constants(self) -> tuple[tuple[Element, ...], ...]:
        n = self.degree
        f = self.defining_poly
        return tuple(
            tuple(self._integral_coordinates(_poly_mulmod(self.ring_basis[a], self.ring_basis[b], f)) for b in range(n))
            for a in range(n)
        )

    @cached_property
    def unity(self) -> Element:
        return self._integral_coordinates([1])

    @cached_property
    def theta_powers(self) -> tuple[Element, ...]:
        n = self.degree
        return tuple(self._integral_coordinates([int(k == m) for k in range(n)]) for m in range(n))

    def mul(self, u, v) -> Element:
        n = self.degree
        T = self.structure_constants
        out = [0] * n
        for i, ui in enumerate(u):
            if ui:
                for j, vj in enumerate(v):
                    if vj:
                        for k, t in enumerate(T[i][j]):
                            out[k] += ui * vj * t
        return tuple(out)

    def poly_element(self, g: Sequence[int]) -> Element:
        """Coordinates of g(theta) for an integer polynomial g."""
        n = self.degree
        g = _poly_mulmod(list(g), [1], self.defining_poly) if len(g) > n else list(g)
        out = [0] * n
        for m, c in enumerate(g):
            if c:
                out = [o + c * t for o, t in zip(out, self.theta_powers[m])]
        return tuple(out)

    def ideal(self, generators) -> Lattice:
        n = self.degree
        gens = [self.mul(g, tuple(int(i == k) for i in range(n))) for g in generators for k in range(n)]
        return Lattice.from_generators(gens, n)

    def ideal_mul(self, I: Lattice, J: Lattice) -> Lattice:
        return Lattice.from_generators([self.mul(a, b) for a in I.vectors for b in J.vectors], self.degree)

    def ideal_power(self, I: Lattice, k: int) -> Lattice:
        out = Lattice.full(self.degree)
        for _ in range(k):
            out = self.ideal_mul(out, I)
        return out

    def theta_index(self) -> int:
        """[O_j : Z[theta]]."""
        return abs(IntMatrix.from_rows(self.theta_powers, self.degree).det())

    def validate(self) -> None:
        f = self.defining_poly
        if f[-1] != 1:
            raise InvalidComponent("defining polynomial must be monic")
        if not _is_irreducible_over_q(f):
            raise InvalidComponent(f"defining polynomial {list(f)} is reducible over Q")
        if len(self.ring_basis) != self.degree:
            raise InvalidComponent("ring basis must have one element per degree")
        self.structure_constants  # noqa: B018 - raises if not closed under products
        self.unity  # noqa: B018
        self.theta_powers  # noqa: B018
        if self.theta_index() == 0:
            raise InvalidComponent("ring basis is degenerate")

    def to_json(self) -> dict:
        return {
            "defining_poly": list(self.defining_poly),
            "ring_basis": [[str(c) for c in w] for w in self.ring_basis],
        }


@dataclass(frozen=True)
class Normalization:
    components: tuple[NumberFieldComponent, ...]
    embedding: IntMatrix  # row i is the image of the i-th basis element of O

    @classmethod
    def create(cls, components, embedding) -> "Normalization":
        comps = tuple(components)
        total = sum(c.degree for c in comps)
        return cls(comps, IntMatrix.from_rows(embedding, total))

    @property
    def offsets(self) -> list[int]:
        out, k = [], 0
        for c in self.components:
            out.append(k)
            k += c.degree
        return out

    @property
    def total_degree(self) -> int:
        return sum(c.degree for c in self.components)

    def block(self, v: Sequence[int], j: int) -> Element:
        off = self.offsets[j]
        return tuple(v[off : off + self.components[j].degree])

    def mul(self, u, v) -> Element:
        out: list[int] = []
        for j, comp in enumerate(self.components):
            out.extend(comp.mul(self.block(u, j), self.block(v, j)))
        return tuple(out)

    def idempotent(self, j: int) -> Element:
        out = [0] * self.total_degree
        off = self.offsets[j]
        out[off : off + self.components[j].degree] = self.components[j].unity
        return tuple(out)

    @property
    def unity(self) -> Element:
        out = [0] * self.total_degree
        for j in range(len(self.components)):
            out = [a + b for a, b in zip(out, self.idempotent(j))]
        return tuple(out)

    def embed(self, u: Sequence[int]) -> Element:
        return self.embedding.apply(u)

    def pullback(self, w: Sequence[int]) -> Element | None:
        """The element of O mapping to w, if any."""
        return solve_integer(self.embedding.T, w)

    def image_lattice(self) -> Lattice:
        return Lattice.from_generators(
            [self.embedding.row(i) for i in range(self.embedding.rows)], self.total_degree
        )

    def embed_block_lattice(self, L: Lattice, j: int) -> list[Element]:
        """Vectors of L (inside O_j) placed in the j-th block of the product."""
        off, total = self.offsets[j], self.total_degree
        out = []
        for v in L.vectors:
            w = [0] * total
            w[off : off + len(v)] = v
            out.append(tuple(w))
        return out

    def to_json(self) -> dict:
        return {
            "components": [c.to_json() for c in self.components],
            "embedding": self.embedding.tolist(),
        }


def order_from_json(data: dict) -> tuple[Order, Normalization]:
    order = Order.create(data["mult_table"], data["unity"], data.get("name", ""))
    if order.rank != data.get("rank", order.rank):
        raise InvalidComponent("declared rank does not match the multiplication table")
    comps = [
        NumberFieldComponent.create(c["defining_poly"], [[Fraction(x) for x in w] for w in c["ring_basis"]])
        for c in data["components"]
    ]
    nrm = Normalization.create(comps, data["embedding"])
    return order, nrm


def order_to_json(order: Order, nrm: Normalization) -> dict:
    return {**order.to_json(), **nrm.to_json()}


# -- validation -----------------------------------------------------------------


def check_order(order: Order, nrm: Normalization) -> Order:
    """Verify ring laws, the embedding, and finiteness of the cokernel."""
    n = order.rank
    T = order.mult_table
    if len(T) != n or any(len(row) != n or any(len(c) != n for c in row) for row in T):
        raise NotAssociative("multiplication table must be rank x rank x rank")
    E = [order.basis_element(i) for i in range(n)]
    for i in range(n):
        for j in range(n):
            if T[i][j] != T[j][i]:
                raise NotCommutative(f"e{i}*e{j} != e{j}*e{i}")
    for i, j, k in itertools.product(range(n), repeat=3):
        if order.mul(order.mul(E[i], E[j]), E[k]) != order.mul(E[i], order.mul(E[j], E[k])):
            raise NotAssociative(f"(e{i}*e{j})*e{k} != e{i}*(e{j}*e{k})")
    for i in range(n):
        if order.mul(order.unity, E[i]) != E[i]:
            raise BadUnit(f"unity does not fix e{i}")
    for comp in nrm.components:
        comp.validate()
    if nrm.embedding.rows != n:
        raise EmbeddingNotRingMap("embedding must have one row per basis element of O")
    if nrm.embed(order.unity) != nrm.unity:
        raise EmbeddingNotRingMap("embedding does not preserve the unit")
    for i in range(n):
        for j in range(n):
            if nrm.mul(nrm.embed(E[i]), nrm.embed(E[j])) != nrm.embed(order.mul(E[i], E[j])):
                raise EmbeddingNotRingMap(f"embedding does not respect e{i}*e{j}")
    if snf(nrm.embedding).rank < n:
        raise EmbeddingNotInjective("embedding has a kernel (O is not reduced or the map is wrong)")
    if nrm.total_degree != n:
        raise InfiniteCokernel("normalization has larger rank than the order")
    return order


# -- exponent data ----------------------------------------------------------------


@dataclass(frozen=True)
class ExponentData:
    p: int
    c: int
    d: int

    @property
    def exponent(self) -> int:
        return self.c * self.p ** self.d


def conductor_exponent(nrm: Normalization) -> int:
    """Z-exponent of O~/O: the largest elementary divisor of the embedding."""
    divisors = snf(nrm.embedding).diagonal
    if len(divisors) < nrm.total_degree or 0 in divisors:
        raise InfiniteCokernel("O~/O is infinite")
    return max(divisors) if divisors else 1


def exponent_decomposition(order: Order, nrm: Normalization, p: int) -> ExponentData:
    c = conductor_exponent(nrm)
    d = 0
    while c % p == 0:
        c //= p
        d += 1
    return ExponentData(p, c, d)


# -- primes -------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimeIdealData:
    component_index: int
    e: int
    f: int
    generators: Lattice  # the prime inside O~_{component_index}
    residue_poly: tuple[int, ...] = ()


def factor_prime(component: NumberFieldComponent, p: int, component_index: int = 0) -> list[PrimeIdealData]:
    """Kummer-Dedekind factorization of p O~_j."""
    if component.theta_index() % p == 0:
        raise IndexDivisible(f"p={p} divides [O_j : Z[theta]] = {component.theta_index()}")
    out = []
    for g, e in factor_mod_p(component.defining_poly, p):
        P = component.ideal([tuple(p * u for u in component.unity), component.poly_element(g)])
        out.append(PrimeIdealData(component_index, e, len(g) - 1, P, g))
    return out


def primes_above(nrm: Normalization, p: int) -> list[PrimeIdealData]:
    """All primes of O~ over p, indexed globally across components."""
    out = []
    for j, comp in enumerate(nrm.components):
        out.extend(factor_prime(comp, p, j))
    return out


def component_intersections(order: Order, nrm: Normalization) -> list[Lattice]:
    """O cap O~_j for each j, in O-coordinates."""
    image = nrm.image_lattice()
    out = []
    for j, comp in enumerate(nrm.components):
        block = Lattice.from_generators(nrm.embed_block_lattice(Lattice.full(comp.degree), j), nrm.total_degree)
        meet = lattice_intersection(block, image)
        out.append(Lattice.from_generators([nrm.pullback(w) for w in meet.vectors], order.rank))
    return out


def contracted_ideal(order: Order, nrm: Normalization, prime: PrimeIdealData, n: int) -> IdealLattice:
    """p_{i,n} = P~_i^(e_i n) cap O."""
    if n == 0:
        return order.whole()
    j = prime.component_index
    comp = nrm.components[j]
    gens: list[Element] = list(nrm.embed_block_lattice(comp.ideal_power(prime.generators, prime.e * n), j))
    for k, other in enumerate(nrm.components):
        if k != j:
            gens.extend(nrm.embed_block_lattice(Lattice.full(other.degree), k))
    big = Lattice.from_generators(gens, nrm.total_degree)
    meet = lattice_intersection(big, nrm.image_lattice())
    return IdealLattice(order, Lattice.from_generators([nrm.pullback(w) for w in meet.vectors], order.rank))


def contracted_ideals(order: Order, nrm: Normalization, p: int, n: int) -> list[IdealLattice]:
    return [contracted_ideal(order, nrm, P, n) for P in primes_above(nrm, p)]


@dataclass
class InclusionReport:
    p: int
    n: int
    c: int
    d: int
    g: int
    l1: list[bool]
    l3_lower: bool
    l3_upper: bool
    l2_lower: bool
    l2_upper: bool

    @property
    def passed(self) -> bool:
        return all(self.l1) and self.l3_lower and self.l3_upper and self.l2_lower and self.l2_upper

    def to_json(self) -> dict:
        return {
            "p": self.p, "n": self.n, "c": self.c, "d": self.d, "g": self.g,
            "l1": self.l1, "l3_lower": self.l3_lower, "l3_upper": self.l3_upper,
            "l2_lower": self.l2_lower, "l2_upper": self.l2_upper, "passed": self.passed,
        }


def verify_inclusions(order: Order, nrm: Normalization, p: int, n: int) -> InclusionReport:
    ex = exponent_decomposition(order, nrm, p)
    c, d = ex.c, ex.d
    if n < d:
        raise ValueError(f"need n >= d = {d}")
    ideals = contracted_ideals(order, nrm, p, n)
    g = len(ideals)
    l1 = []
    lhs = order.principal_integer(c ** (g - 1) * p ** (d * (g - 1)))
    for i in range(g):
        rest = product_of_ideals(order, [I for k, I in enumerate(ideals) if k != i])
        l1.append(lhs <= ideals[i] + rest)
    meet = ideals[0]
    for I in ideals[1:]:
        meet = meet & I
    prod = product_of_ideals(order, ideals)
    upper = order.principal_integer(p ** (n - d))
    return InclusionReport(
        p, n, c, d, g, l1,
        l3_lower=order.principal_integer(p ** n) <= meet,
        l3_upper=meet <= upper,
        l2_lower=order.principal_integer(c ** (d * g) * p ** (n + d * g)) <= prod,
        l2_upper=prod <= upper,
    )


def partition_elements(order: Order, nrm: Normalization, p: int, n: int) -> list[tuple[Element, Element]]:
    """Pairs (a_i, b_i) with a_i in p_{i,n}, b_i in prod_{j != i} p_{j,n}, a_i + b_i = c^(g-1) p^(d(g-1))."""
    ex = exponent_decomposition(order, nrm, p)
    ideals = contracted_ideals(order, nrm, p, n)
    g = len(ideals)
    if g == 1:
        return [(order.zero, order.unity)]
    target = order.scale(ex.c ** (g - 1) * p ** (ex.d * (g - 1)), order.unity)
    out = []
    for i in range(g):
        A = ideals[i].generators
        B = product_of_ideals(order, [I for k, I in enumerate(ideals) if k != i]).generators
        cols = IntMatrix.from_rows(list(A) + list(B), order.rank).T
        coeffs = solve_integer(cols, target)
        if coeffs is None:
            raise NoSolution(f"no splitting of {list(target)} across prime {i}")
        a = tuple(sum(coeffs[k] * A[k][m] for k in range(len(A))) for m in range(order.rank))
        out.append((a, order.sub(target, a)))
    return out


# -- full maps ------------------------------------------------------------------------


@dataclass(frozen=True)
class FullMap:
    coeffs: Element

    def __call__(self, u: Sequence[int]) -> int:
        return sum(a * b for a, b in zip(self.coeffs, u))


def is_full(order: Order, nrm: Normalization, t: FullMap) -> bool:
    return all(any(t(v) for v in L.vectors) for L in component_intersections(order, nrm))


def _signed_range(bound: int) -> list[int]:
    out = [0]
    for k in range(1, bound + 1):
        out += [k, -k]
    return out


def full_map_construct(order: Order, nrm: Normalization, max_coeff: int = 8) -> FullMap:
    """First full functional in order of increasing max-coefficient."""
    pieces = component_intersections(order, nrm)
    for bound in range(1, max_coeff + 1):
        for coeffs in itertools.product(_signed_range(bound), repeat=order.rank):
            if max(map(abs, coeffs)) != bound:
                continue
            if all(any(sum(a * b for a, b in zip(coeffs, v)) for v in L.vectors) for L in pieces):
                return FullMap(tuple(coeffs))
    raise NoSolution("no full map with small coefficients")  # pragma: no cover


def scaled_idempotents(order: Order, nrm: Normalization) -> list[Element]:
    """c * e_j pulled back into O, with c the exponent of O~/O."""
    c = conductor_exponent(nrm)
    out = []
    for j in range(len(nrm.components)):
        u = nrm.pullback(tuple(c * x for x in nrm.idempotent(j)))
        if u is None:  # pragma: no cover - c kills O~/O
            raise NoSolution("scaled idempotent not in O")
        out.append(u)
    return out


__all__ = [
    "Order", "IdealLattice", "NumberFieldComponent", "Normalization", "ExponentData",
    "PrimeIdealData", "FullMap", "InclusionReport", "check_order", "exponent_decomposition",
    "factor_prime", "primes_above", "contracted_ideal", "contracted_ideals", "verify_inclusions",
    "partition_elements", "full_map_construct", "is_full", "component_intersections",
    "scaled_idempotents", "factor_mod_p", "order_from_json", "order_to_json",
]
