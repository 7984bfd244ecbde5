"""Integer arithmetic and Dirichlet characters with exact root-of-unity values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np


@dataclass(frozen=True)
class RootOfUnity:
    """exp(2*pi*i*numerator/order), stored in lowest terms."""

    numerator: int
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be positive")
        fr = Fraction(self.numerator % self.order, self.order)
        object.__setattr__(self, "numerator", fr.numerator)
        object.__setattr__(self, "order", fr.denominator)

    @classmethod
    def one(cls) -> "RootOfUnity":
        return cls(0, 1)

    def __mul__(self, other: "RootOfUnity") -> "RootOfUnity":
        fr = Fraction(self.numerator, self.order) + Fraction(other.numerator, other.order)
        return RootOfUnity(fr.numerator, fr.denominator)

    def __pow__(self, k: int) -> "RootOfUnity":
        return RootOfUnity(self.numerator * k, self.order)

    def conjugate(self) -> "RootOfUnity":
        return RootOfUnity(-self.numerator, self.order)

    def is_one(self) -> bool:
        return self.numerator == 0

    def __complex__(self) -> complex:
        if self.order == 1:
            return 1 + 0j
        if self.order == 2:
            return -1 + 0j
        if self.order == 4:
            return 1j if self.numerator == 1 else -1j
        t = 2 * math.pi * self.numerator / self.order
        return complex(math.cos(t), math.sin(t))


# ---------------------------------------------------------------------------
# elementary functions

@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of n >= 1 as ((p, e), ...) by trial division."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += step
        step = 6 - step
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factorize(n)]


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == ((n, 1),)


def moebius(n: int) -> int:
    if n < 1:
        raise ValueError("moebius needs n >= 1")
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError("euler_phi needs n >= 1")
    r = n
    for p, _ in factorize(n):
        r = r // p * (p - 1)
    return r


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n):
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n))


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for a discriminant D and n >= 0."""
    if D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
    if n < 0:
        raise ValueError("negative n is not supported")
    if n == 0:
        return 1 if abs(D) == 1 else 0
    result = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result = -result
    # Jacobi symbol (D/n), n odd
    a = D % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> int:
    """x mod m1*m2 with x = r1 (m1), x = r2 (m2), for coprime moduli."""
    return (r1 + m1 * ((r2 - r1) * pow(m1, -1, m2) % m2)) % (m1 * m2)


# ---------------------------------------------------------------------------
# bulk sieves

def spf_sieve(n: int) -> np.ndarray:
    """Smallest prime factor for 0..n (entries 0 and 1 are 0 and 1)."""
    spf = np.zeros(n + 1, dtype=np.int32)
    if n >= 1:
        spf[1] = 1
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = spf[2:] == 0
    spf[2:][rest] = np.arange(2, n + 1, dtype=np.int32)[rest]
    return spf


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    spf = spf_sieve(n)
    idx = np.arange(n + 1)
    return idx[(spf == idx) & (idx >= 2)].astype(np.int64)


def divisor_count_sieve(n: int) -> np.ndarray:
    d = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        d[k::k] += 1
    return d


def mobius_sieve(n: int) -> np.ndarray:
    mu = np.ones(n + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes_up_to(n):
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


# ---------------------------------------------------------------------------
# Dirichlet characters

def _primitive_root(m: int) -> int:
    """Smallest generator of (Z/m)^x for m = p^e, p odd."""
    phi = euler_phi(m)
    qs = prime_divisors(phi)
    for g in range(2, m):
        if math.gcd(g, m) == 1 and all(pow(g, phi // q, m) != 1 for q in qs):
            return g
    return 1  # m in (1, 2)


def _component_generators(p: int, e: int) -> list[tuple[int, int]]:
    """Generators (g, order) of (Z/p^e)^x, each given modulo p^e."""
    m = p**e
    if p != 2:
        return [(_primitive_root(m), euler_phi(m))] if m > 2 else []
    if e == 1:
        return []
    if e == 2:
        return [(m - 1, 2)]
    return [(m - 1, 2), (5, 2 ** (e - 2))]


@dataclass(frozen=True)
class UnitGroup:
    """Generators of (Z/q)^x via CRT, with discrete-log tables."""

    modulus: int
    generators: tuple[int, ...]
    orders: tuple[int, ...]
    logs: np.ndarray  # shape (q, r); -1 rows for non-units

    @property
    def exponent(self) -> int:
        return math.lcm(*self.orders) if self.orders else 1


@lru_cache(maxsize=256)
def unit_group(q: int) -> UnitGroup:
    if q < 1:
        raise ValueError("modulus must be positive")
    comps = []
    for p, e in factorize(q) if q > 1 else ():
        m = p**e
        for g, o in _component_generators(p, e):
            comps.append((m, g, o))
    gens, orders = [], []
    for m, g, o in comps:
        rest = q // m
        gens.append(crt_pair(g, m, 1, rest) if rest > 1 else g % q)
        orders.append(o)
    r = len(gens)
    logs = np.full((q, r), -1, dtype=np.int64)
    # enumerate the group as products of generator powers
    elems = {1 % q: ()}
    for j, (g, o) in enumerate(zip(gens, orders)):
        new = {}
        for x, vec in elems.items():
            y = x
            for k in range(o):
                new[y] = vec + (k,)
                y = y * g % q
        elems = new
    for x, vec in elems.items():
        logs[x] = vec if r else logs[x]
    if r == 0:
        logs = np.zeros((q, 0), dtype=np.int64)
    units = np.array([math.gcd(a, q) == 1 for a in range(q)])
    valid = np.zeros(q, dtype=bool)
    valid[list(elems)] = True
    assert np.array_equal(units, valid)
    return UnitGroup(q, tuple(gens), tuple(orders), logs)


class DirichletCharacter:
    """A character mod q, stored as a table of numerators over a common order.

    ``exps[a]`` is the numerator of chi(a) over ``order`` or -1 when a is not a unit.
    """

    def __init__(self, modulus: int, order: int, exps, exponents=None):
        self.modulus = modulus
        self.order = order
        self.exps = np.asarray(exps, dtype=np.int64)
        self.exps.setflags(write=False)
        self.exponents = exponents
        self._conductor = None

    @classmethod
    def from_exponents(cls, q: int, exponents) -> "DirichletCharacter":
        G = unit_group(q)
        L = G.exponent
        num = np.zeros(q, dtype=np.int64)
        for j, (t, o) in enumerate(zip(exponents, G.orders)):
            num += G.logs[:, j] * (t * (L // o))
        num %= L
        num[[math.gcd(a, q) != 1 for a in range(q)]] = -1
        return cls(q, L, num, tuple(exponents))

    @classmethod
    def principal(cls, q: int) -> "DirichletCharacter":
        exps = [0 if math.gcd(a, q) == 1 else -1 for a in range(q)]
        return cls(q, 1, exps, (0,) * len(unit_group(q).orders))

    @classmethod
    def from_function(cls, q: int, order: int, fn) -> "DirichletCharacter":
        """Build from fn(a) -> numerator over order, or None for non-units."""
        exps = []
        for a in range(q):
            v = fn(a) if math.gcd(a, q) == 1 else None
            exps.append(-1 if v is None else v % order)
        return cls(q, order, exps)

    def root(self, a: int) -> RootOfUnity | None:
        e = int(self.exps[a % self.modulus])
        return None if e < 0 else RootOfUnity(e, self.order)

    def __call__(self, a: int) -> complex:
        r = self.root(a)
        return 0j if r is None else complex(r)

    def values(self) -> np.ndarray:
        """Complex value table indexed by residue."""
        out = np.exp(2j * np.pi * self.exps / self.order)
        out[self.exps < 0] = 0
        # exact values for the common real cases
        if self.order <= 2:
            out = out.real.round() + 0j
        return out

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        q = math.lcm(self.modulus, other.modulus)
        L = math.lcm(self.order, other.order)
        a = np.arange(q)
        e1 = self.exps[a % self.modulus]
        e2 = other.exps[a % other.modulus]
        num = (e1 * (L // self.order) + e2 * (L // other.order)) % L
        num[(e1 < 0) | (e2 < 0)] = -1
        return DirichletCharacter(q, L, num)

    def __pow__(self, k: int) -> "DirichletCharacter":
        num = np.where(self.exps < 0, -1, (self.exps * k) % self.order)
        return DirichletCharacter(self.modulus, self.order, num)

    def conjugate(self) -> "DirichletCharacter":
        return self ** (-1)

    def is_principal(self) -> bool:
        return bool(np.all(self.exps[self.exps >= 0] == 0))

    def is_real(self) -> bool:
        e = self.exps[self.exps >= 0]
        return bool(np.all((2 * e) % self.order == 0))

    @property
    def conductor(self) -> int:
        if self._conductor is None:
            self._conductor = self._find_conductor()
        return self._conductor

    def _find_conductor(self) -> int:
        q = self.modulus
        a = np.arange(q)
        units = self.exps >= 0
        for f in divisors(q):
            mask = units & (a % f == 1 % f)
            if np.all(self.exps[mask] == 0):
                return f
        return q

    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def _canonical(self) -> tuple:
        return tuple(None if e < 0 else Fraction(int(e), self.order) for e in self.exps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirichletCharacter) or self.modulus != other.modulus:
            return False
        return self._canonical() == other._canonical()

    def __hash__(self) -> int:
        return hash((self.modulus, self._canonical()))

    def __repr__(self) -> str:
        return f"DirichletCharacter(mod {self.modulus}, exponents={self.exponents})"


@lru_cache(maxsize=256)
def dirichlet_group(q: int) -> tuple[DirichletCharacter, ...]:
    """All characters mod q, ordered lexicographically by generator exponents."""
    G = unit_group(q)
    return tuple(DirichletCharacter.from_exponents(q, t) for t in product(*(range(o) for o in G.orders)))
