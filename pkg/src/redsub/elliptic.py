"""Elliptic curves y^2 = x^3 + a4 x + a6: exact rational points and reductions.

Points are ``None`` (the identity) or coordinate pairs: ``Fraction`` over Q,
``int`` in [0, p) over F_p.  Finite groups E(F_p) are handled through an
explicit basis (B1, B2) of Z/d1 x Z/d2, so every predicate becomes linear
algebra on discrete-log coordinates.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .arith import factorint, is_prime, lcm, sqrt_mod
from .errors import BadReduction, ConfigError, PrimeTooLarge, StructureSearchExhausted
from .lattice import Lattice

MAX_PRIME = 10**6
COEFF_BOUND = 20

RationalPoint = tuple[Fraction, Fraction] | None
ModPoint = tuple[int, int] | None


@dataclass(frozen=True)
class CurveQ:
    a4: int
    a6: int

    def __post_init__(self):
        if self.discriminant == 0:
            raise ConfigError(f"singular curve a4={self.a4}, a6={self.a6}")

    @property
    def discriminant(self) -> int:
        return -16 * (4 * self.a4**3 + 27 * self.a6**2)

    def point(self, x, y) -> RationalPoint:
        P = (Fraction(x), Fraction(y))
        if not self.contains(P):
            raise ConfigError(f"({x}, {y}) is not on y^2 = x^3 + {self.a4}x + {self.a6}")
        return P

    def contains(self, P: RationalPoint) -> bool:
        if P is None:
            return True
        x, y = P
        return y * y == x**3 + self.a4 * x + self.a6

    def neg(self, P: RationalPoint) -> RationalPoint:
        return None if P is None else (P[0], -P[1])

    def add(self, P: RationalPoint, Q: RationalPoint) -> RationalPoint:
        if P is None:
            return Q
        if Q is None:
            return P
        (x1, y1), (x2, y2) = P, Q
        if x1 == x2:
            if y1 != y2 or y1 == 0:
                return None
            lam = (3 * x1 * x1 + self.a4) / (2 * y1)
        else:
            lam = (y2 - y1) / (x2 - x1)
        x3 = lam * lam - x1 - x2
        return (x3, lam * (x1 - x3) - y1)

    def mul(self, k: int, P: RationalPoint) -> RationalPoint:
        if k < 0:
            k, P = -k, self.neg(P)
        R = None
        while k:
            if k & 1:
                R = self.add(R, P)
            P = self.add(P, P)
            k >>= 1
        return R

    def has_good_reduction(self, p: int) -> bool:
        return p > 3 and self.discriminant % p != 0

    def reduce(self, p: int) -> "CurveFp":
        if not self.has_good_reduction(p):
            raise BadReduction(f"p = {p} is bad or too small for {self}")
        return CurveFp(p, self.a4 % p, self.a6 % p)

    def to_json(self) -> dict:
        return {"a4": self.a4, "a6": self.a6}


def reduce_point(P: RationalPoint, curve: CurveQ, p: int) -> ModPoint:
    """Reduce via projective coordinates [x : y : 1] with denominators cleared."""
    if not curve.has_good_reduction(p):
        raise BadReduction(f"p = {p} is bad or too small")
    if P is None:
        return None
    x, y = P
    L = lcm(x.denominator, y.denominator)
    X, Y, Z = int(x * L), int(y * L), L
    g = math.gcd(math.gcd(X, Y), Z)
    X, Y, Z = X // g, Y // g, Z // g
    if Z % p == 0:
        return None  # [0 : 1 : 0] is the only point at infinity
    zi = pow(Z, -1, p)
    return (X * zi % p, Y * zi % p)


@dataclass(frozen=True)
class CurveFp:
    p: int
    a4: int
    a6: int

    def __post_init__(self):
        if self.p <= 3 or not is_prime(self.p):
            raise BadReduction(f"p = {self.p} must be a prime > 3")
        if (4 * self.a4**3 + 27 * self.a6**2) % self.p == 0:
            raise BadReduction(f"singular modulo {self.p}")

    def contains(self, P: ModPoint) -> bool:
        if P is None:
            return True
        x, y = P
        p = self.p
        return (y * y - (x * x * x + self.a4 * x + self.a6)) % p == 0

    def neg(self, P: ModPoint) -> ModPoint:
        return None if P is None else (P[0], -P[1] % self.p)

    def add(self, P: ModPoint, Q: ModPoint) -> ModPoint:
        if P is None:
            return Q
        if Q is None:
            return P
        p = self.p
        (x1, y1), (x2, y2) = P, Q
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return None
            lam = (3 * x1 * x1 + self.a4) * pow(2 * y1, -1, p) % p
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
        x3 = (lam * lam - x1 - x2) % p
        return (x3, (lam * (x1 - x3) - y1) % p)

    def sub(self, P: ModPoint, Q: ModPoint) -> ModPoint:
        return self.add(P, self.neg(Q))

    def mul(self, k: int, P: ModPoint) -> ModPoint:
        if k < 0:
            k, P = -k, self.neg(P)
        R = None
        while k and P is not None:
            if k & 1:
                R = self.add(R, P)
            P = self.add(P, P)
            k >>= 1
        return R

    def combine(self, coeffs: Sequence[int], points: Sequence[ModPoint]) -> ModPoint:
        R = None
        for c, P in zip(coeffs, points):
            R = self.add(R, self.mul(c, P))
        return R

    def random_point(self, rng: random.Random) -> ModPoint:
        p = self.p
        while True:
            x = rng.randrange(p)
            r = sqrt_mod((x * x * x + self.a4 * x + self.a6) % p, p)
            if r is not None:
                return (x, r if rng.random() < 0.5 else (-r) % p)

    def points(self) -> list[ModPoint]:
        """Every point, identity first (small p only)."""
        p = self.p
        out: list[ModPoint] = [None]
        for x in range(p):
            rhs = (x * x * x + self.a4 * x + self.a6) % p
            for y in range(p):
                if (y * y - rhs) % p == 0:
                    out.append((x, y))
        return out


def count_points(curve: CurveFp, bound: int = MAX_PRIME) -> int:
    """#E(F_p) = p + 1 + sum over x of the Legendre symbol of x^3 + a4 x + a6."""
    p = curve.p
    if p > bound:
        raise PrimeTooLarge(f"p = {p} exceeds the point-counting bound {bound}")
    xs = np.arange(p, dtype=np.int64)
    rhs = (xs * xs % p * xs % p + curve.a4 * xs + curve.a6) % p
    is_square = np.zeros(p, dtype=bool)
    is_square[xs * xs % p] = True
    chi = np.where(rhs == 0, 0, np.where(is_square[rhs], 1, -1))
    return p + 1 + int(chi.sum())


# -- group structure ---------------------------------------------------------------------


def _bsgs(curve: CurveFp, base: ModPoint, target: ModPoint, order: int) -> int | None:
    """k in [0, order) with k*base = target, or None."""
    m = math.isqrt(order - 1) + 1 if order > 1 else 1
    table = {}
    R = None
    for j in range(m):
        table.setdefault(R, j)
        R = curve.add(R, base)
    step = curve.neg(curve.mul(m, base))
    G = target
    for i in range(m + 1):
        j = table.get(G)
        if j is not None:
            k = (i * m + j) % order
            return k
        G = curve.add(G, step)
    return None


def _cyclic_log(curve: CurveFp, P: ModPoint, ell: int, e: int, T: ModPoint) -> int | None:
    """x mod ell^e with x*P = T, where P has order ell^e; None if T is not in <P>."""
    if e == 0:
        return 0 if T is None else None
    gamma = curve.mul(ell ** (e - 1), P)
    x = 0
    for i in range(e):
        R = curve.mul(ell ** (e - 1 - i), curve.sub(T, curve.mul(x, P)))
        digit = _bsgs(curve, gamma, R, ell)
        if digit is None:
            return None
        x += digit * ell**i
    return x if curve.mul(x, P) == T else None


def _order_in(curve: CurveFp, P: ModPoint, ell: int, kmax: int) -> int:
    """j with P of order ell^j, given ell^kmax kills P."""
    j = 0
    while P is not None:
        P = curve.mul(ell, P)
        j += 1
        if j > kmax:
            raise ArithmeticError("point order exceeds the group exponent")
    return j


@dataclass(frozen=True)
class _Sylow:
    ell: int
    k: int  # exponent of ell in N
    a: int  # Q has order ell^a
    b: int  # P has order ell^b, a <= b, a + b = k
    P: ModPoint
    Q: ModPoint


@dataclass(frozen=True)
class GroupStructureFp:
    curve: CurveFp
    order_N: int
    d1: int
    d2: int
    B1: ModPoint
    B2: ModPoint
    sylow: tuple[_Sylow, ...] = field(repr=False)

    def to_json(self) -> dict:
        return {"N": self.order_N, "d1": self.d1, "d2": self.d2}


def _sylow_basis(curve: CurveFp, N: int, ell: int, k: int, rng: random.Random, budget: int) -> _Sylow:
    cof = N // ell**k
    best_P, b = None, 0
    best_Q, a = None, 0
    samples = []
    for _ in range(budget):
        S = curve.mul(cof, curve.random_point(rng))
        j = _order_in(curve, S, ell, k)
        samples.append((S, j))
        if j > b:
            best_P, b = S, j
        if b == k:
            break
    if b < k:
        for S, _ in samples:
            # order of S modulo <P>, then strip the <P>-component
            j, T = 0, S
            while True:
                x = _cyclic_log(curve, best_P, ell, b, T)
                if x is not None:
                    break
                T = curve.mul(ell, T)
                j += 1
            if j > a:
                # ell^j S = x P with ell^j | x since P has maximal order
                Qc = curve.sub(S, curve.mul(x // ell**j, best_P))
                best_Q, a = Qc, j
            if a + b == k:
                break
    if a + b != k:
        raise StructureSearchExhausted(f"ell = {ell} part not resolved at p = {curve.p} after {budget} samples")
    return _Sylow(ell, k, a, b, best_P, best_Q)


def group_structure(curve: CurveFp, seed: int = 0, budget: int = 64, N: int | None = None) -> GroupStructureFp:
    """Invariants d1 | d2 and a basis of E(F_p), certified per Sylow subgroup.

    For each ell | N, a point P of maximal ell-power order is sampled; further
    samples S are reduced against <P> (S - (x/ell^j)P with ell^j S = xP) and the
    search stops once the orders multiply to the full ell-part of N.
    """
    if N is None:
        N = count_points(curve)
    rng = random.Random(seed * 1_000_003 + curve.p)
    parts = []
    d1 = d2 = 1
    B1 = B2 = None
    for ell, k in sorted(factorint(N).items()):
        S = _sylow_basis(curve, N, ell, k, rng, budget)
        parts.append(S)
        d1 *= ell**S.a
        d2 *= ell**S.b
        B1 = curve.add(B1, S.Q)
        B2 = curve.add(B2, S.P)
    return GroupStructureFp(curve, N, d1, d2, B1, B2, tuple(parts))


def check_structure(G: GroupStructureFp) -> list[str]:
    """Names of the violated invariants (empty when all hold)."""
    p = G.curve.p
    bad = []
    if G.d1 * G.d2 != G.order_N:
        bad.append("d1*d2 == N")
    if G.d2 % G.d1:
        bad.append("d1 | d2")
    if (p - 1) % G.d1:
        bad.append("d1 | p-1")
    if (G.order_N - p - 1) ** 2 > 4 * p:
        bad.append("Hasse bound")
    if point_order(G.B1, G) != G.d1 or point_order(G.B2, G) != G.d2:
        bad.append("basis orders")
    return bad


def dlog(Q: ModPoint, G: GroupStructureFp) -> tuple[int, int]:
    """(q1 mod d1, q2 mod d2) with q1*B1 + q2*B2 = Q."""
    curve = G.curve
    N = G.order_N
    r1, m1, r2, m2 = [], [], [], []
    for S in G.sylow:
        cof = N // S.ell**S.k
        T = curve.mul(cof, Q)
        found = None
        for y in range(S.ell**S.a):
            x = _cyclic_log(curve, S.P, S.ell, S.b, curve.sub(T, curve.mul(y, S.Q)))
            if x is not None:
                found = (x, y)
                break
        if found is None:
            raise StructureSearchExhausted("point outside the span of the computed basis")
        x, y = found
        # cof*(q2 B2) = cof*q2*P on the ell-part, so q2 = x / cof mod ell^b
        if S.b:
            r2.append(x * pow(cof, -1, S.ell**S.b) % S.ell**S.b)
            m2.append(S.ell**S.b)
        if S.a:
            r1.append(y * pow(cof, -1, S.ell**S.a) % S.ell**S.a)
            m1.append(S.ell**S.a)
    q1 = _crt(r1, m1)
    q2 = _crt(r2, m2)
    return q1 % G.d1 if G.d1 > 1 else 0, q2 % G.d2 if G.d2 > 1 else 0


def _crt(residues, moduli) -> int:
    from .arith import crt

    if not moduli:
        return 0
    return crt(residues, moduli)[0]


def recompose(q: Sequence[int], G: GroupStructureFp) -> ModPoint:
    return G.curve.add(G.curve.mul(q[0], G.B1), G.curve.mul(q[1], G.B2))


def coordinate_lattice(gens: Sequence[ModPoint], G: GroupStructureFp) -> Lattice:
    """Lift of <gens> to Z^2 via dlog coordinates, with (d1, 0) and (0, d2)."""
    rows = [dlog(P, G) for P in gens] + [(G.d1, 0), (0, G.d2)]
    return Lattice.from_generators(rows, 2)


def subgroup_membership(Q: ModPoint, gens: Sequence[ModPoint], G: GroupStructureFp) -> bool:
    return dlog(Q, G) in coordinate_lattice(gens, G)


def divisibility(Q: ModPoint, m: int, G: GroupStructureFp) -> bool:
    """Whether Q lies in m * E(F_p)."""
    q1, q2 = dlog(Q, G)
    return q1 % math.gcd(m, G.d1) == 0 and q2 % math.gcd(m, G.d2) == 0


def point_order(Q: ModPoint, G: GroupStructureFp) -> int:
    curve = G.curve
    n = G.d2
    for ell in factorint(n):
        while n % ell == 0 and curve.mul(n // ell, Q) is None:
            n //= ell
    return n


# -- Mordell-Weil presentations ---------------------------------------------------------------


@dataclass(frozen=True)
class FormalPoint:
    coeffs: tuple[int, ...]
    torsion_index: int = 0

    @classmethod
    def from_json(cls, data) -> "FormalPoint":
        if isinstance(data, dict):
            return cls(tuple(int(c) for c in data["coeffs"]), int(data.get("torsion_index", 0)))
        return cls(tuple(int(c) for c in data))

    def to_json(self) -> dict:
        return {"coeffs": list(self.coeffs), "torsion_index": self.torsion_index}


@dataclass(frozen=True)
class MWPresentation:
    curve: CurveQ
    generators: tuple[tuple[Fraction, Fraction], ...]
    torsion_points: tuple[RationalPoint, ...]  # identity first

    @classmethod
    def create(cls, curve: CurveQ, generators, torsion_points=()) -> "MWPresentation":
        gens = tuple(curve.point(*P) for P in generators)
        tors = [None] + [curve.point(*P) for P in torsion_points if P is not None]
        mw = cls(curve, gens, tuple(tors))
        mw.validate()
        return mw

    def validate(self) -> None:
        T = set(self.torsion_points)
        if len(T) != len(self.torsion_points):
            raise ConfigError("duplicate torsion points")
        for P in self.torsion_points:
            if self.curve.neg(P) not in T:
                raise ConfigError("torsion list is not closed under negation")
            for Q in self.torsion_points:
                if self.curve.add(P, Q) not in T:
                    raise ConfigError("torsion list is not closed under addition")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def torsion_order(self) -> int:
        return len(self.torsion_points)

    @cached_property
    def torsion_table(self) -> tuple[tuple[int, ...], ...]:
        idx = {P: i for i, P in enumerate(self.torsion_points)}
        return tuple(
            tuple(idx[self.curve.add(P, Q)] for Q in self.torsion_points) for P in self.torsion_points
        )

    def check_point(self, x: FormalPoint) -> None:
        if len(x.coeffs) != self.rank:
            raise ConfigError(f"formal point needs {self.rank} coefficients")
        if any(abs(c) > COEFF_BOUND for c in x.coeffs):
            raise ConfigError(f"coefficients are capped at |c| <= {COEFF_BOUND}")
        if not 0 <= x.torsion_index < self.torsion_order:
            raise ConfigError("torsion index out of range")

    def evaluate(self, x: FormalPoint) -> RationalPoint:
        """The rational point sum c_i G_i + T (exact, heights grow quickly)."""
        self.check_point(x)
        R = self.torsion_points[x.torsion_index]
        for c, P in zip(x.coeffs, self.generators):
            R = self.curve.add(R, self.curve.mul(c, P))
        return R

    def reduce(self, p: int) -> tuple[CurveFp, tuple[ModPoint, ...], tuple[ModPoint, ...]]:
        """Reduced curve, generators and torsion points modulo p."""
        Ep = self.curve.reduce(p)
        gens = tuple(reduce_point(P, self.curve, p) for P in self.generators)
        tors = tuple(reduce_point(P, self.curve, p) for P in self.torsion_points)
        return Ep, gens, tors

    def reduce_formal(self, x: FormalPoint, Ep: CurveFp, gens, tors) -> ModPoint:
        return Ep.add(Ep.combine(x.coeffs, gens), tors[x.torsion_index])

    def to_json(self) -> dict:
        def pt(P):
            return [str(P[0]), str(P[1])]

        return {
            "curve": self.curve.to_json(),
            "generators": [pt(P) for P in self.generators],
            "torsion_points": [pt(P) for P in self.torsion_points if P is not None],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MWPresentation":
        curve = CurveQ(int(data["curve"]["a4"]), int(data["curve"]["a6"]))
        return cls.create(curve, data.get("generators", []), data.get("torsion_points", []))
