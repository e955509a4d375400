"""Finitely generated modules over an order, pre-bases, and the local maps.

A module is presented as Z^free_rank + Z/t_1 + ... + Z/t_k together with one
integer matrix per basis element of the order, acting on row vectors
(``beta . v = v @ A_beta``).  Torsion coordinates are always reduced into
``[0, t_l)`` so that equal elements compare equal.

Every Hom-set and every "least integer with a property" below is computed by
writing the defining conditions as an integer linear system and taking the
kernel lattice; nothing is searched for by enumeration except inside the
brute-force checks on finite modules.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .arith import lcm
from .errors import (
    AlreadyLocalMember,
    HypothesisFailed,
    InfiniteCokernel,
    ModuleValidationError,
    NoSolution,
    TorsionElement,
)
from .lattice import (
    INFINITE_INDEX,
    IntMatrix,
    Lattice,
    adapted_basis,
    hnf_basis,
    kernel_basis,
    lattice_index,
    left_kernel_basis,
    separating_index,
    snf,
    solve_integer,
    solve_rational,
    inverse_unimodular,
)
from .order import (
    FullMap,
    IdealLattice,
    Normalization,
    Order,
    component_intersections,
    contracted_ideal,
    contracted_ideals,
    exponent_decomposition,
    full_map_construct,
    partition_elements,
    primes_above,
    scaled_idempotents,
)

Vec = tuple[int, ...]


@dataclass(frozen=True)
class OModule:
    order: Order
    free_rank: int
    torsion: tuple[int, ...]
    action: tuple[IntMatrix, ...]
    normalization: Normalization | None = field(default=None, compare=False)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if any(t < 2 for t in self.torsion):
            raise ModuleValidationError("torsion orders must be at least 2")
        if len(self.action) != self.order.rank:
            raise ModuleValidationError("need one action matrix per basis element of the order")
        n = self.ngens
        if any(A.rows != n or A.cols != n for A in self.action):
            raise ModuleValidationError(f"action matrices must be {n}x{n}")

    # -- construction -------------------------------------------------------------

    @classmethod
    def free(cls, order: Order, k: int = 1, normalization=None, name: str = "") -> "OModule":
        return cls.from_presentation(order, k, [], normalization, name)

    @classmethod
    def from_presentation(cls, order: Order, k: int, relations: Sequence[Sequence[int]],
                          normalization=None, name: str = "") -> "OModule":
        """O^k modulo the O-submodule generated by ``relations`` (vectors in Z^(k*rank))."""
        r = order.rank
        n = k * r
        blocks = [order.mult_matrix(order.basis_element(j)) for j in range(r)]
        ambient = []
        for M in blocks:
            A = [[0] * n for _ in range(n)]
            for b in range(k):
                for s in range(r):
                    for t in range(r):
                        A[b * r + s][b * r + t] = M[s, t]
            ambient.append(IntMatrix.from_rows(A, n))
        gens = []
        for rel in relations:
            rel = tuple(int(x) for x in rel)
            if len(rel) != n:
                raise ModuleValidationError(f"relation {list(rel)} must have length {n}")
            gens.extend(A.apply(rel) for A in ambient)
        R = Lattice.from_generators(gens, n)
        return cls._quotient(order, ambient, R, normalization, name)

    @classmethod
    def from_ideal(cls, ideal: IdealLattice, normalization=None, name: str = "") -> "OModule":
        """An ideal of O (full rank) as a module, in its HNF Z-basis."""
        O = ideal.order_ref
        B = ideal.basis
        if B.rank != O.rank:
            raise ModuleValidationError("ideal must have full rank")
        action = []
        for j in range(O.rank):
            rows = []
            for v in B.vectors:
                c = B.coordinates(O.mul(v, O.basis_element(j)))
                if c is None:
                    raise ModuleValidationError("lattice is not an ideal")
                rows.append(c)
            action.append(IntMatrix.from_rows(rows, O.rank))
        return cls(O, O.rank, (), tuple(action), normalization, name)

    @classmethod
    def _quotient(cls, order, ambient: list[IntMatrix], R: Lattice, normalization, name):
        n = R.ambient_rank
        if R.rank == 0:
            return cls(order, n, (), tuple(ambient), normalization, name)
        S = snf(R.basis)
        V = S.V
        Vinv = inverse_unimodular(V)
        divisors = S.diagonal + [0] * (n - R.rank)
        keep = [i for i, d in enumerate(divisors) if d == 0] + [i for i, d in enumerate(divisors) if d > 1]
        torsion = tuple(divisors[i] for i in keep if divisors[i] > 1)
        f = sum(1 for d in divisors if d == 0)
        action = []
        for A in ambient:
            C = Vinv @ A @ V
            rows = [[C[a, b] for b in keep] for a in keep]
            for row in rows:
                for l, t in enumerate(torsion):
                    row[f + l] %= t
            action.append(IntMatrix.from_rows(rows, len(keep)))
        return cls(order, f, torsion, tuple(action), normalization, name)

    # -- basic arithmetic ---------------------------------------------------------------

    @property
    def ngens(self) -> int:
        return self.free_rank + len(self.torsion)

    @property
    def zero(self) -> Vec:
        return (0,) * self.ngens

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def torsion_order(self) -> int:
        return math.prod(self.torsion)

    @property
    def size(self) -> int:
        if not self.is_finite:
            raise ValueError("module is infinite")
        return self.torsion_order

    def generator(self, k: int) -> Vec:
        return tuple(int(i == k) for i in range(self.ngens))

    def reduce(self, v: Sequence[int]) -> Vec:
        f = self.free_rank
        out = list(v)
        for l, t in enumerate(self.torsion):
            out[f + l] %= t
        return tuple(out)

    def add(self, u, v) -> Vec:
        return self.reduce([a + b for a, b in zip(u, v)])

    def sub(self, u, v) -> Vec:
        return self.reduce([a - b for a, b in zip(u, v)])

    def scale(self, k: int, v) -> Vec:
        return self.reduce([k * a for a in v])

    def action_matrix(self, beta: Sequence[int]) -> list[list[int]]:
        n = self.ngens
        out = [[0] * n for _ in range(n)]
        for bj, A in zip(beta, self.action):
            if bj:
                for a in range(n):
                    row = out[a]
                    for b in range(n):
                        row[b] += bj * A[a, b]
        return out

    def act(self, beta: Sequence[int], v: Sequence[int]) -> Vec:
        out = [0] * self.ngens
        for bj, A in zip(beta, self.action):
            if bj:
                w = A.apply(v)
                out = [o + bj * x for o, x in zip(out, w)]
        return self.reduce(out)

    def is_torsion(self, v: Sequence[int]) -> bool:
        return not any(v[: self.free_rank])

    def orbit(self, y: Sequence[int]) -> list[Vec]:
        """Z-generators of O.y."""
        return [self.act(self.order.basis_element(k), y) for k in range(self.order.rank)]

    def elements(self) -> Iterator[Vec]:
        if not self.is_finite:
            raise ValueError("cannot enumerate an infinite module")
        return itertools.product(*(range(t) for t in self.torsion))

    # -- subgroups ------------------------------------------------------------------

    def relation_rows(self) -> list[Vec]:
        f = self.free_rank
        return [tuple(t if i == f + l else 0 for i in range(self.ngens)) for l, t in enumerate(self.torsion)]

    def span(self, elements: Sequence[Sequence[int]]) -> Lattice:
        """The subgroup generated by ``elements``, lifted to Z^ngens (relations included)."""
        return Lattice.from_generators(list(elements) + self.relation_rows(), self.ngens)

    def in_span(self, v: Sequence[int], elements: Sequence[Sequence[int]]) -> bool:
        return tuple(v) in self.span(elements)

    def subgroup_structure(self, elements) -> tuple[int, tuple[int, ...]]:
        """(rank, torsion invariants) of the subgroup generated by ``elements``."""
        L = self.span(elements)
        R = self.relation_rows()
        if not R:
            return L.rank, ()
        C = [L.coordinates(r) for r in R]
        divisors = snf(IntMatrix.from_rows(C, L.rank)).diagonal
        return L.rank - len(R), tuple(d for d in divisors if d > 1)

    def free_span(self, elements) -> Lattice:
        f = self.free_rank
        return Lattice.from_generators([tuple(v[:f]) for v in elements], f)

    def ideal_times(self, ideal: IdealLattice, elements=None) -> list[Vec]:
        """Generators of I.S (S = all generators of the module by default)."""
        if elements is None:
            elements = [self.generator(k) for k in range(self.ngens)]
        return [self.act(beta, z) for beta in ideal.generators for z in elements]

    def annihilated_by(self, ideal: IdealLattice) -> list[Vec]:
        """The elements t with I.t = 0 (finite modules only)."""
        gens = ideal.generators
        return [t for t in self.elements() if all(not any(self.act(b, t)) for b in gens)]

    def p_power_torsion(self, k: int, p: int) -> list[Vec]:
        """Generators of N[p^k]."""
        f = self.free_rank
        q = p ** k
        return [
            tuple((t // math.gcd(t, q)) if i == f + l else 0 for i in range(self.ngens))
            for l, t in enumerate(self.torsion)
        ]

    # -- validation ---------------------------------------------------------------------

    def validate(self) -> "OModule":
        O = self.order
        n, f = self.ngens, self.free_rank
        for row_idx, t in enumerate(self.torsion):
            r = f + row_idx
            for A in self.action:
                if any(A[r, c] for c in range(f)):
                    raise ModuleValidationError("action sends torsion to a free coordinate")
                for l, tl in enumerate(self.torsion):
                    if (t * A[r, f + l]) % tl:
                        raise ModuleValidationError("action is not well defined on torsion")
        gens = [self.generator(k) for k in range(n)]
        for g in gens:
            if self.act(O.unity, g) != self.reduce(g):
                raise ModuleValidationError("unity does not act as the identity")
        for i in range(O.rank):
            for j in range(O.rank):
                ei, ej = O.basis_element(i), O.basis_element(j)
                prod = O.mul(ei, ej)
                for g in gens:
                    if self.act(ei, self.act(ej, g)) != self.act(prod, g):
                        raise ModuleValidationError(f"action of e{i}*e{j} is inconsistent")
        return self

    def as_finite(self) -> "FiniteOModule":
        return FiniteOModule(self.order, self.free_rank, self.torsion, self.action, self.normalization, self.name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "order": self.order.name,
            "free_rank": self.free_rank,
            "torsion": list(self.torsion),
            "action": [A.tolist() for A in self.action],
        }

    @classmethod
    def from_json(cls, data: dict, order: Order, normalization=None) -> "OModule":
        n = data["free_rank"] + len(data["torsion"])
        action = tuple(IntMatrix.from_rows(A, n) for A in data["action"])
        return cls(order, data["free_rank"], tuple(data["torsion"]), action, normalization, data.get("name", ""))


@dataclass(frozen=True)
class FiniteOModule(OModule):
    def __post_init__(self):
        super().__post_init__()
        if self.free_rank:
            raise ModuleValidationError("a finite module has free rank 0")

    @property
    def annihilator(self) -> int:
        return lcm(*self.torsion) if self.torsion else 1


# -- Hom into the order ------------------------------------------------------------------


def _free_block(N: OModule, A: IntMatrix) -> list[list[int]]:
    f = N.free_rank
    return [[A[a, b] for b in range(f)] for a in range(f)]


def hom_to_order(N: OModule) -> list[IntMatrix]:
    """Z-basis of Hom_O(N, O), each map an f x rank matrix on free coordinates.

    A map kills torsion, so it is a matrix F on N/N_tors satisfying
    Abar_beta @ F == F @ M_beta for every basis element beta.
    """
    O = N.order
    f, r = N.free_rank, O.rank
    if f == 0:
        return []
    eqs = []
    for j in range(r):
        Ab = _free_block(N, N.action[j])
        M = O.mult_matrix(O.basis_element(j))
        for a in range(f):
            for c in range(r):
                row = [0] * (f * r)
                for b in range(f):
                    row[b * r + c] += Ab[a][b]
                for k in range(r):
                    row[a * r + k] -= M[k, c]
                eqs.append(row)
    return [IntMatrix(f, r, tuple(v)) for v in kernel_basis(IntMatrix.from_rows(eqs, f * r))]


def _pad_psi(N: OModule, F: Sequence[Sequence[int]]) -> IntMatrix:
    r = N.order.rank
    rows = [list(F[a]) for a in range(N.free_rank)] + [[0] * r for _ in N.torsion]
    return IntMatrix.from_rows(rows, r)


def full_map_cokernel_bound(order: Order, nrm: Normalization, t: FullMap, N: OModule):
    """Index of {t o f : f in Hom_O(N, O)} inside Hom_Z(N/N_tors, Z)."""
    f = N.free_rank
    if f == 0:
        return 1
    image = [tuple(sum(F[a, c] * t.coeffs[c] for c in range(order.rank)) for a in range(f))
             for F in hom_to_order(N)]
    idx = lattice_index(Lattice.from_generators(image, f), Lattice.full(f))
    if idx == INFINITE_INDEX:
        raise InfiniteCokernel("t o Hom_O(N, O) has lower rank than Hom_Z(N, Z)")
    return idx


# -- eta_0 ------------------------------------------------------------------------------


def _eta0_data(N: OModule, y: Sequence[int]) -> tuple[int, Vec]:
    """(eta_0(y), u) where psi(beta.y) = beta*u realizes the minimum."""
    if N.is_torsion(y):
        raise TorsionElement(f"{list(y)} is torsion")
    O = N.order
    r, f, n = O.rank, N.free_rank, N.ngens
    Y = N.orbit(y)
    # beta with beta.y torsion
    J = left_kernel_basis([v[:f] for v in Y])
    T = len(N.torsion)
    nvars = 1 + r + T  # (m, u, s)
    eqs = []
    for j in J:
        prods = [O.mul(O.basis_element(k), j) for k in range(r)]
        for c in range(r):
            row = [0] * nvars
            for k in range(r):
                row[1 + k] = prods[k][c]
            eqs.append(row)
    for a in range(n):
        row = [0] * nvars
        row[0] = -y[a]
        for k in range(r):
            row[1 + k] = Y[k][a]
        if a >= f:
            row[1 + r + (a - f)] = -N.torsion[a - f]
        eqs.append(row)
    K = kernel_basis(IntMatrix.from_rows(eqs, nvars))
    H = hnf_basis(K, nvars)
    if not H or H[0][0] <= 0:
        raise NoSolution("no map O.y -> O splits multiplication by an integer")
    return H[0][0], tuple(H[0][1 : 1 + r])


def eta0(N: OModule, y: Sequence[int]) -> int:
    """Least m > 0 such that some O-linear psi: O.y -> O composes to m on O.y."""
    return _eta0_data(N, y)[0]


# -- pre-bases --------------------------------------------------------------------------


@dataclass(frozen=True)
class PreBasis:
    module: OModule
    elements: tuple[Vec, ...]
    eta_prime: int
    eta0_values: tuple[int, ...]
    eta: int
    psi: tuple[IntMatrix, ...]  # ngens x rank, one per element

    def apply_psi(self, i: int, v: Sequence[int]) -> Vec:
        return self.psi[i].apply(v)

    def recombine(self, v: Sequence[int]) -> Vec:
        """sum_i psi_i(v) . y_i"""
        N = self.module
        out = N.zero
        for i, y in enumerate(self.elements):
            out = N.add(out, N.act(self.apply_psi(i, v), y))
        return out

    def check_identity(self, v: Sequence[int]) -> bool:
        N = self.module
        return N.scale(self.eta, v) == self.recombine(v)

    def to_json(self) -> dict:
        return {
            "elements": [list(y) for y in self.elements],
            "eta_prime": self.eta_prime,
            "eta0": list(self.eta0_values),
            "eta": self.eta,
            "psi": [P.tolist() for P in self.psi],
        }


def _torsion_free_multiple(N: OModule, y: Vec) -> Vec:
    """Smallest multiple k.y (k | exponent of N_tors) with O.(k y) torsion-free."""
    _, inv = N.subgroup_structure(N.orbit(y))
    k = inv[-1] if inv else 1
    return N.scale(k, y)


def _candidates(N: OModule, base: Sequence[Vec]) -> list[Vec]:
    out = list(base)
    nrm = N.normalization
    if nrm is not None and len(nrm.components) > 1:
        for eps in scaled_idempotents(N.order, nrm):
            out.extend(N.act(eps, z) for z in base)
    return [z for z in out if not N.is_torsion(z)]


def _greedy(N: OModule, chosen: list[Vec], candidates: list[Vec]) -> list[Vec]:
    f = N.free_rank
    chosen = [_torsion_free_multiple(N, y) for y in chosen]
    span_gens = [v for y in chosen for v in N.orbit(y)]
    rank = N.free_span(span_gens).rank
    while rank < f:
        best = None
        for z in candidates:
            orb = N.orbit(z)
            rz = N.free_span(orb).rank
            if rz == 0 or N.free_span(span_gens + orb).rank != rank + rz:
                continue
            if best is None or rz > best[0]:
                best = (rz, z, orb)
        if best is None:
            raise NoSolution("greedy pre-basis search got stuck; supply a normalization")
        rz, z, _ = best
        z = _torsion_free_multiple(N, z)
        chosen.append(z)
        span_gens += N.orbit(z)
        rank += rz
    return chosen


def complete_prebasis(N: OModule, elements: Sequence[Vec]) -> PreBasis:
    """Compute eta', eta_0, eta and the projections psi_i for a given pre-basis."""
    O = N.order
    r, f, n = O.rank, N.free_rank, N.ngens
    elements = [N.reduce(y) for y in elements]
    orbits = [N.orbit(y) for y in elements]
    all_gens = [v for orb in orbits for v in orb]
    rank, tors = N.subgroup_structure(all_gens)
    if rank != f or rank != sum(N.subgroup_structure(o)[0] for o in orbits):
        raise ModuleValidationError("elements do not form a pre-basis (rank)")
    if math.prod(tors) != math.prod(math.prod(N.subgroup_structure(o)[1]) for o in orbits):
        raise ModuleValidationError("sum of the cyclic submodules is not direct")
    eta_prime = lattice_index(N.span(all_gens), Lattice.full(n))
    data = [_eta0_data(N, y) for y in elements]
    eta0_values = tuple(m for m, _ in data)
    eta = eta_prime * math.prod(eta0_values)

    # columns: beta_{i,k} then torsion slack
    cols = [v for orb in orbits for v in orb] + N.relation_rows()
    A = IntMatrix.from_rows(cols, n).T
    psi_rows = [[] for _ in elements]
    for g in range(n):
        if g >= f:
            for rows in psi_rows:
                rows.append([0] * r)
            continue
        target = tuple(eta_prime * int(i == g) for i in range(n))
        sol = solve_integer(A, target)
        if sol is None:
            raise NoSolution("eta' does not kill the cokernel")
        for i, (_, u) in enumerate(data):
            beta = sol[i * r : (i + 1) * r]
            other = math.prod(m for k, (m, _) in enumerate(data) if k != i)
            psi_rows[i].append(list(O.scale(other, O.mul(beta, u))))
    psi = tuple(IntMatrix.from_rows(rows, r) for rows in psi_rows)
    return PreBasis(N, tuple(elements), eta_prime, eta0_values, eta, psi)


def prebasis_construct(N: OModule) -> PreBasis:
    """A pre-basis chosen greedily among the module generators.

    At each step the admissible candidate (its orbit adds its full rank) with
    the largest orbit rank is taken, ties broken by input order; candidates
    are the free generators followed by their projections under the scaled
    idempotents of the normalization.
    """
    base = [N.generator(k) for k in range(N.free_rank)]
    chosen = _greedy(N, [], _candidates(N, base))
    return complete_prebasis(N, chosen)


@dataclass(frozen=True)
class AdaptedPreBasis:
    prebasis: PreBasis
    witness_exponent: int
    psi: IntMatrix  # the separating map N -> O before completion
    psi_scale: int  # b with t o psi = b * psi_0
    separating_coordinate: int
    components: tuple[int, ...]  # J: blocks where psi tensor Q is nonzero
    ratio: Fraction  # psi_1 = ratio * psi

    def to_json(self) -> dict:
        return {
            **self.prebasis.to_json(),
            "witness_exponent": self.witness_exponent,
            "psi_scale": self.psi_scale,
            "separating_coordinate": self.separating_coordinate,
            "components": list(self.components),
            "ratio": str(self.ratio),
        }


def _not_in_plus(N: OModule, psi: IntMatrix, x, M, p: int, n: int) -> bool:
    O = N.order
    gens = [psi.apply(m) for m in M] + [tuple(p ** n * e for e in O.basis_element(k)) for k in range(O.rank)]
    return psi.apply(x) not in Lattice.from_generators(gens, O.rank)


def witness_exponent(N: OModule, psi: IntMatrix, x, M, p: int, limit: int = 256) -> int:
    """Least a with psi(x) not in psi(M) + p^a O (the condition is upward closed in a)."""
    for a in range(limit + 1):
        if _not_in_plus(N, psi, x, M, p, a):
            return a
    raise NoSolution(f"psi(x) stays in psi(M) + p^a O up to a = {limit}")


def prebasis_adapted(N: OModule, M: Sequence[Sequence[int]], x: Sequence[int], p: int) -> AdaptedPreBasis:
    """A pre-basis whose first projection separates x from M modulo p^a O.

    ``M`` lists generators of a Z-submodule; the torsion of N is added to it.
    """
    O = N.order
    nrm = N.normalization
    if nrm is None:
        raise ValueError("module needs its order's normalization")
    f, r = N.free_rank, O.rank
    x = N.reduce(x)
    M = [N.reduce(m) for m in M] + [N.generator(f + l) for l in range(len(N.torsion))]
    tors = N.torsion_order
    Mbar = N.free_span(M)
    basis = adapted_basis(Mbar, f, tors)
    i = separating_index(x[:f], basis, p)
    if i is None:
        raise AlreadyLocalMember(f"x lies in M tensor Z_({p})")
    V = basis.coordinate_matrix
    psi0 = [tors * V[a, i] for a in range(f)]

    t = full_map_construct(O, nrm)
    homs = hom_to_order(N)
    tf = [[sum(F[a, c] * t.coeffs[c] for c in range(r)) for a in range(f)] for F in homs]
    nv = 1 + len(homs)
    eqs = [[-psi0[a]] + [tf[h][a] for h in range(len(homs))] for a in range(f)]
    H = hnf_basis(kernel_basis(IntMatrix.from_rows(eqs, nv)), nv)
    if not H or H[0][0] <= 0:
        raise NoSolution("psi_0 has no multiple of the form t o psi")
    b = H[0][0]
    lam = H[0][1:]
    F = [[sum(lam[h] * homs[h][a, c] for h in range(len(homs))) for c in range(r)] for a in range(f)]
    psi = _pad_psi(N, F)

    E = nrm.embedding
    FE = [E.apply(row) for row in F]
    J = tuple(
        j for j in range(len(nrm.components))
        if any(v for row in FE for v in nrm.block(row, j))
    )
    eps_J = [0] * nrm.total_degree
    for j in J:
        eps_J = [a + b_ for a, b_ in zip(eps_J, nrm.idempotent(j))]
    eqs = [[FE[a][q] for a in range(f)] for q in range(nrm.total_degree)]
    rhs = list(eps_J)
    if len(nrm.components) > 1:
        for j, eps in enumerate(scaled_idempotents(O, nrm)):
            if j in J:
                continue
            Ab = _free_block(N, IntMatrix.from_rows(N.action_matrix(eps), N.ngens))
            for q in range(f):
                eqs.append([Ab[a][q] for a in range(f)])
                rhs.append(0)
    sol = solve_rational(eqs, rhs)
    if sol is None:
        raise NoSolution("no rational section of psi")
    L = lcm(*(s.denominator for s in sol)) if sol else 1
    y1 = tuple(int(s * L) for s in sol) + (0,) * len(N.torsion)

    kernel = [tuple(v) + (0,) * len(N.torsion) for v in left_kernel_basis(F)]
    chosen = _greedy(N, [y1], _candidates(N, kernel))
    pb = complete_prebasis(N, chosen)
    psi1 = pb.psi[0]
    ratio = _scalar_ratio(psi1, psi)
    a = witness_exponent(N, psi1, x, M, p)
    return AdaptedPreBasis(pb, a, psi, b, i, J, ratio)


def _scalar_ratio(A: IntMatrix, B: IntMatrix) -> Fraction:
    ratio = None
    for a, b in zip(A.entries, B.entries):
        if b == 0:
            if a != 0:
                raise NoSolution("psi_1 is not a multiple of psi")
            continue
        q = Fraction(a, b)
        if ratio is None:
            ratio = q
        elif q != ratio:
            raise NoSolution("psi_1 is not a multiple of psi")
    return ratio if ratio is not None else Fraction(0)


# -- index sets ----------------------------------------------------------------------------


def index_set(N: OModule, nrm: Normalization, p: int, y: Sequence[int]) -> frozenset[int]:
    """Indices i (0-based, over all primes above p) with rank (O cap O~_mu(i)).y > 0."""
    pieces = component_intersections(N.order, nrm)
    out = set()
    for i, P in enumerate(primes_above(nrm, p)):
        gens = [N.act(beta, y) for beta in pieces[P.component_index].vectors]
        if N.free_span(gens).rank > 0:
            out.add(i)
    return frozenset(out)


# -- CRT maps ------------------------------------------------------------------------------


@dataclass
class CRTMaps:
    module: OModule
    p: int
    n: int
    c: int
    d: int
    partition: list[tuple[Vec, Vec]]
    summands: list[list[Vec]]  # T[p_{i,n}]
    scalar: int

    def phi(self, t: Sequence[int]) -> tuple[Vec, ...]:
        return tuple(self.module.act(b, t) for _, b in self.partition)

    def psi(self, ts: Sequence[Sequence[int]]) -> Vec:
        T = self.module
        total = T.zero
        for t in ts:
            total = T.add(total, t)
        return T.scale(self.p ** self.d, total)

    def verify(self) -> dict:
        """Elementwise checks of well-definedness and of both composites."""
        T = self.module
        q = self.p ** (self.n - self.d)
        domain = [t for t in T.elements() if not any(T.scale(q, t))]
        members = [set(s) for s in self.summands]
        phi_ok = all(all(v in members[i] for i, v in enumerate(self.phi(t))) for t in domain)
        psi_phi = all(self.psi(self.phi(t)) == T.scale(self.scalar, t) for t in domain)
        psi_ok = True
        phi_psi = True
        for ts in itertools.product(*self.summands):
            s = self.psi(ts)
            if any(T.scale(q, s)):
                psi_ok = False
            if self.phi(s) != tuple(T.scale(self.scalar, t) for t in ts):
                phi_psi = False
        return {
            "phi_well_defined": phi_ok,
            "psi_well_defined": psi_ok,
            "phi_psi_scalar": phi_psi,
            "psi_phi_scalar": psi_phi,
            "domain_size": len(domain),
            "sum_size": math.prod(len(s) for s in self.summands),
        }


def crt_maps(T: OModule, nrm: Normalization, p: int, n: int) -> CRTMaps:
    """phi(t) = (b_i t)_i and psi = p^d * (sum); both composites are meant on T[p^(n-d)]."""
    O = T.order
    if not T.is_finite:
        raise ValueError("crt_maps needs a finite module")
    ex = exponent_decomposition(O, nrm, p)
    if n < ex.d:
        raise ValueError(f"need n >= d = {ex.d}")
    partition = partition_elements(O, nrm, p, n)
    ideals = contracted_ideals(O, nrm, p, n)
    g = len(ideals)
    summands = [T.annihilated_by(I) for I in ideals]
    scalar = ex.c ** (g - 1) * p ** (ex.d * g)
    return CRTMaps(T, p, n, ex.c, ex.d, partition, summands, scalar)


# -- the obstruction check -------------------------------------------------------------------


@dataclass(frozen=True)
class EvilVerdict:
    hypotheses: tuple[bool, bool, bool]
    exponent: int  # a + b + d
    conclusion: bool  # alpha x not in p^(a+b+d) N, decided by lattice solving
    brute_force: bool | None  # same, by enumerating p^k N (finite modules only)

    def to_json(self) -> dict:
        return {
            "hypotheses": list(self.hypotheses),
            "exponent": self.exponent,
            "conclusion": self.conclusion,
            "brute_force": self.brute_force,
        }


def _multiples(N: OModule, k: int) -> set[Vec]:
    return {N.scale(k, z) for z in N.elements()}


def evil_hypotheses(N: OModule, nrm: Normalization, p: int, alpha, x, i: int, a: int, b: int) -> tuple[bool, bool, bool]:
    O = N.order
    d = exponent_decomposition(O, nrm, p).d
    prime = primes_above(nrm, p)[i]
    h1 = tuple(alpha) not in contracted_ideal(O, nrm, prime, a)
    pbN = N.ideal_times(contracted_ideal(O, nrm, prime, b))
    h2 = not N.in_span(N.reduce(x), pbN)
    multiples = [N.scale(p ** b, N.generator(k)) for k in range(N.ngens)]
    span = N.span(multiples)
    h3 = all(v in span for v in N.p_power_torsion(a + d, p))
    return h1, h2, h3


def evil_check(N: OModule, nrm: Normalization, p: int, alpha, x, i: int, a: int, b: int,
               multiples_cache: dict | None = None) -> EvilVerdict:
    """Check the hypotheses and the conclusion alpha x notin p^(a+b+d) N.

    Raises HypothesisFailed when a hypothesis does not hold; ``failed`` on the
    exception lists every failing hypothesis.
    """
    hyp = evil_hypotheses(N, nrm, p, alpha, x, i, a, b)
    failed = tuple(k + 1 for k, h in enumerate(hyp) if not h)
    if failed:
        raise HypothesisFailed(failed[0], failed=failed)
    d = exponent_decomposition(N.order, nrm, p).d
    k = a + b + d
    ax = N.act(alpha, x)
    q = p ** k
    conclusion = not N.in_span(ax, [N.scale(q, N.generator(j)) for j in range(N.ngens)])
    brute = None
    if N.is_finite:
        if multiples_cache is not None:
            key = (id(N), q)
            if key not in multiples_cache:
                multiples_cache[key] = _multiples(N, q)
            mult = multiples_cache[key]
        else:
            mult = _multiples(N, q)
        brute = ax not in mult
    return EvilVerdict(hyp, k, conclusion, brute)


def evil_grid(N: OModule, nrm: Normalization, p: int, a_max: int = 2, b_max: int = 2,
              alpha_bound: int = 1, x_samples: int = 64, seed: int = 0) -> dict:
    """Run evil_check over a grid of (alpha, x, i, a, b) on a finite module.

    alpha ranges over elements of O with coefficients in [-alpha_bound,
    alpha_bound]; x over all elements when there are at most ``x_samples``
    of them, else over a seeded sample.  Hypotheses are evaluated once per
    factor they depend on.
    """
    import random

    O = N.order
    d = exponent_decomposition(O, nrm, p).d
    primes = primes_above(nrm, p)
    alphas = [a for a in itertools.product(range(-alpha_bound, alpha_bound + 1), repeat=O.rank) if any(a)]
    elems = list(N.elements())
    xs = elems if len(elems) <= x_samples else random.Random(seed).sample(elems, x_samples)
    xs = [x for x in xs if any(x)]
    gens = [N.generator(k) for k in range(N.ngens)]
    h3 = {}
    for a in range(a_max + 1):
        for b in range(b_max + 1):
            span = N.span([N.scale(p ** b, g) for g in gens])
            h3[a, b] = all(v in span for v in N.p_power_torsion(a + d, p))
    multiples = {}
    checked = held = counterexamples = disagreements = 0
    for i, prime in enumerate(primes):
        ideals_a = [contracted_ideal(O, nrm, prime, a) for a in range(a_max + 1)]
        spans_b = [N.span(N.ideal_times(contracted_ideal(O, nrm, prime, b))) for b in range(b_max + 1)]
        for a in range(a_max + 1):
            good_alpha = [al for al in alphas if al not in ideals_a[a]]
            for b in range(b_max + 1):
                if not h3[a, b]:
                    checked += len(alphas) * len(xs)
                    continue
                good_x = [x for x in xs if x not in spans_b[b]]
                checked += len(alphas) * len(xs)
                q = p ** (a + b + d)
                if q not in multiples:
                    multiples[q] = (_multiples(N, q), N.span([N.scale(q, g) for g in gens]))
                brute, lat = multiples[q]
                for al in good_alpha:
                    for x in good_x:
                        held += 1
                        ax = N.act(al, x)
                        if ax in brute:
                            counterexamples += 1
                        if (ax in lat) != (ax in brute):
                            disagreements += 1
    return {
        "checked": checked,
        "hypotheses_held": held,
        "counterexamples": counterexamples,
        "lattice_disagreements": disagreements,
    }
