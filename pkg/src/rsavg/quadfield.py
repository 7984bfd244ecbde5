"""Imaginary quadratic fields, class groups of orders via binary quadratic forms,
and the ideal-counting functions built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .arith import (
    DirichletCharacter,
    crt_pair,
    divisors,
    factorize,
    kronecker,
    prime_divisors,
)


def is_fundamental(D: int) -> bool:
    if D % 4 == 1:
        return all(e == 1 for _, e in factorize(abs(D)))
    if D % 4 == 0:
        m = D // 4
        if m % 4 not in (2, 3):
            return False
        return all(e == 1 for _, e in factorize(abs(m)))
    return False


class ImagQuadField:
    """K = Q(sqrt(D)) for a negative fundamental discriminant with |D| >= 7."""

    def __init__(self, D: int):
        if D >= 0 or not is_fundamental(D):
            raise ValueError(f"{D} is not a negative fundamental discriminant")
        if abs(D) < 7:
            raise ValueError("|D| >= 7 is required (unit group must be {+1, -1})")
        self.D = D
        q = abs(D)
        self.omega_table = np.array([kronecker(D, a) for a in range(q)], dtype=np.int64)
        self.omega = DirichletCharacter.from_function(q, 2, lambda a: 0 if kronecker(D, a) == 1 else 1)

    def omega_at(self, n):
        return self.omega_table[np.asarray(n) % abs(self.D)]

    @cached_property
    def class_number(self) -> int:
        return len(reduced_forms(self.D))

    def __eq__(self, other) -> bool:
        return isinstance(other, ImagQuadField) and other.D == self.D

    def __hash__(self) -> int:
        return hash(("ImagQuadField", self.D))

    def __repr__(self) -> str:
        return f"ImagQuadField({self.D})"


# ---------------------------------------------------------------------------
# forms

@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        return b >= 0 or (abs(b) != a and a != c)

    def reduced(self) -> "QuadForm":
        a, b, c = self.a, self.b, self.c
        disc = b * b - 4 * a * c
        if a <= 0 or disc >= 0:
            raise ValueError("only positive definite forms can be reduced")
        while True:
            # bring b into (-a, a]
            k = (a - b) // (2 * a)
            b += 2 * a * k
            c = (b * b - disc) // (4 * a)
            if a > c:
                a, b, c = c, -b, a
                continue
            break
        if b < 0 and (a == c or -b == a):
            b = -b
        return QuadForm(a, b, c)

    def inverse(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c).reduced()

    def compose(self, other: "QuadForm") -> "QuadForm":
        """Gauss/Dirichlet composition of primitive forms, reduced."""
        a1, b1, c1 = self.a, self.b, self.c
        a2, b2, c2 = other.a, other.b, other.c
        if a1 > a2:
            a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
        s = (b1 + b2) // 2
        n = b2 - s
        if a2 % a1 == 0:
            y1, d = 0, a1
        else:
            d, u, _ = _xgcd(a2, a1)
            y1 = u
        if s % d == 0:
            y2, x2, d1 = -1, 0, d
        else:
            d1, x2, y2 = _xgcd(s, d)
            y2 = -y2
        v1 = a1 // d1
        v2 = a2 // d1
        r = (y1 * y2 * n - x2 * c2) % v1
        b3 = b2 + 2 * v2 * r
        a3 = v1 * v2
        c3 = (c2 * d1 + r * (b2 + v2 * r)) // v1
        return QuadForm(a3, b3, c3).reduced()

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, u, v) with u*a + v*b = g = gcd(a, b) >= 0."""
    u0, v0, u1, v1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    if a < 0:
        return -a, -u0, -v0
    return a, u0, v0


@lru_cache(maxsize=None)
def reduced_forms(disc: int) -> tuple[QuadForm, ...]:
    """Reduced primitive forms of a negative discriminant, principal form first."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"bad discriminant {disc}")
    out = []
    amax = math.isqrt(-disc // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - disc) % (4 * a):
                continue
            c = (b * b - disc) // (4 * a)
            if c < a or (b < 0 and a == c):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append(QuadForm(a, b, c))
    out.sort(key=lambda F: (F.a, -F.b, F.c))
    return tuple(out)


def class_number_formula(D: int, f: int) -> int:
    """h(O_f) = h_K f prod_{l | f} (1 - omega(l)/l), unit index 1 for |D| >= 7."""
    h = len(reduced_forms(D)) * f
    for l in prime_divisors(f) if f > 1 else ():
        h = h * (l - kronecker(D, l)) // l
    return h


# ---------------------------------------------------------------------------
# square roots of the discriminant modulo 4n

def _sqrt_mod_prime(a: int, p: int) -> int | None:
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _sqrt_mod_prime_power(a: int, p: int, e: int) -> list[int]:
    """All x mod p^e with x^2 = a (mod p^e)."""
    pe = p**e
    if p != 2 and a % p:
        r = _sqrt_mod_prime(a, p)
        if r is None:
            return []
        m = p
        for _ in range(1, e):
            m *= p
            r = (r - (r * r - a) * pow(2 * r, -1, m)) % m
        return sorted({r % pe, (-r) % pe})
    # generic lifting, used only for p = 2 or p | a
    sols = [x for x in range(p) if (x * x - a) % p == 0]
    m = p
    for _ in range(1, e):
        nm = m * p
        sols = [x + t * m for x in sols for t in range(p) if ((x + t * m) ** 2 - a) % nm == 0]
        m = nm
    return sols


def sqrt_disc_mod_4n(disc: int, n: int) -> list[int]:
    """b in [0, 2n) with b^2 = disc (mod 4n)."""
    sols, mod = [0], 1
    fac = dict(factorize(n)) if n > 1 else {}
    fac[2] = fac.get(2, 0) + 2
    for p, e in fac.items():
        roots = _sqrt_mod_prime_power(disc, p, e)
        if not roots:
            return []
        pe = p**e
        sols = [crt_pair(s, mod, r, pe) for s in sols for r in roots]
        mod *= pe
    return sorted({s % (2 * n) for s in sols})


# ---------------------------------------------------------------------------
# class groups of orders

class OrderClassGroup:
    """Pic(O_f) for O_f = Z + f O_K, realised on reduced forms of discriminant f^2 D."""

    def __init__(self, field: ImagQuadField, f: int):
        if f < 1:
            raise ValueError("conductor must be positive")
        self.field = field
        self.f = f
        self.disc = f * f * field.D
        self.forms = reduced_forms(self.disc)
        self.h = len(self.forms)
        self.index = {F: i for i, F in enumerate(self.forms)}
        h = self.h
        table = np.zeros((h, h), dtype=np.int64)
        for i, F in enumerate(self.forms):
            for j in range(i, h):
                k = self.index[F.compose(self.forms[j])]
                table[i, j] = table[j, i] = k
        self.table = table
        self.identity = 0
        self.inverse = np.array([self.index[F.inverse()] for F in self.forms], dtype=np.int64)
        self.basis, self.invariants, self.coords = _abelian_basis(table, self.identity)
        self._projections: dict[int, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.h

    def classify(self, a: int, b: int, c: int) -> int:
        return self.index[QuadForm(a, b, c).reduced()]

    def power(self, i: int, k: int) -> int:
        r, x = self.identity, i
        k %= self.element_order(i)
        while k:
            if k & 1:
                r = int(self.table[r, x])
            x = int(self.table[x, x])
            k >>= 1
        return r

    def element_order(self, i: int) -> int:
        k, x = 1, i
        while x != self.identity:
            x = int(self.table[x, i])
            k += 1
        return k

    def primitive_ideals_of_norm(self, n: int) -> list[tuple[int, int]]:
        """(b, class) for the primitive ideals [n, (-b + sqrt(disc))/2] of norm n."""
        if self.f > 1 and math.gcd(n, self.f) > 1:
            raise ValueError(f"norm {n} is not prime to the conductor {self.f}")
        out = []
        for b in sqrt_disc_mod_4n(self.disc, n):
            out.append((b, self.classify(n, b, (b * b - self.disc) // (4 * n))))
        return out

    def ideals_of_norm(self, n: int) -> list[tuple[int, int]]:
        """(class index, multiplicity) over all invertible ideals of norm n."""
        if n < 1:
            raise ValueError("norm must be positive")
        if self.f > 1 and math.gcd(n, self.f) > 1:
            raise ValueError(f"norm {n} is not prime to the conductor {self.f}")
        counts: dict[int, int] = {}
        root = 1
        for p, e in factorize(n) if n > 1 else ():
            root *= p ** (e // 2)
        for g in divisors(root):
            for _, k in self.primitive_ideals_of_norm(n // (g * g)):
                counts[k] = counts.get(k, 0) + 1
        return sorted(counts.items())

    def r_counts(self, n: int) -> np.ndarray:
        out = np.zeros(self.h, dtype=np.int64)
        for k, m in self.ideals_of_norm(n):
            out[k] += m
        return out

    def representative(self, i: int, scan_bound: int | None = None) -> tuple[int, int]:
        """A primitive ideal (n, b) of norm prime to f in class i."""
        return self._representatives(scan_bound)[i]

    @lru_cache(maxsize=4)
    def _representatives(self, scan_bound: int | None) -> dict[int, tuple[int, int]]:
        bound = scan_bound or 50 * self.f * abs(self.field.D)
        reps: dict[int, tuple[int, int]] = {}
        for n in range(1, bound + 1):
            if math.gcd(n, self.f) > 1:
                continue
            for b, k in self.primitive_ideals_of_norm(n):
                reps.setdefault(k, (n, b))
            if len(reps) == self.h:
                return reps
        raise RuntimeError(f"no coprime-norm representative for some class of conductor {self.f} below {bound}")

    def projection(self, f2: int, scan_bound: int | None = None) -> np.ndarray:
        """Index map Pic(O_f) -> Pic(O_f2) for f2 | f."""
        if self.f % f2:
            raise ValueError(f"{f2} does not divide {self.f}")
        if f2 not in self._projections:
            target = order_class_group(self.field, f2)
            m = self.f // f2
            out = np.zeros(self.h, dtype=np.int64)
            for i in range(self.h):
                n, b = self.representative(i, scan_bound)
                b2 = b * pow(m, -1, 4 * n) % (2 * n)
                out[i] = target.classify(n, b2, (b2 * b2 - target.disc) // (4 * n))
            self._projections[f2] = out
        return self._projections[f2]

    def project_class(self, i: int, f2: int) -> int:
        return int(self.projection(f2)[i])

    def __repr__(self) -> str:
        return f"OrderClassGroup(D={self.field.D}, f={self.f}, h={self.h}, invariants={self.invariants})"


@lru_cache(maxsize=None)
def order_class_group(field: ImagQuadField, f: int) -> OrderClassGroup:
    return OrderClassGroup(field, f)


def _abelian_basis(table: np.ndarray, e: int):
    """Independent generators of a finite abelian group given by its Cayley table.

    Returns (generators, orders, coords) with element i = prod g_j^coords[i, j].
    Works prime by prime: inside each Sylow subgroup an element of maximal order
    modulo the span so far is corrected to split off a direct cyclic factor.
    """
    h = table.shape[0]

    def mul(x, y):
        return int(table[x, y])

    def pw(x, k):
        r = e
        while k:
            if k & 1:
                r = mul(r, x)
            x = mul(x, x)
            k >>= 1
        return r

    def order(x):
        k, y = 1, x
        while y != e:
            y = mul(y, x)
            k += 1
        return k

    gens, ords = [], []
    for l in prime_divisors(h) if h > 1 else ():
        lk = 1
        while h % (lk * l) == 0:
            lk *= l
        sylow = [x for x in range(h) if pw(x, lk) == e]
        span = {e}
        while len(span) < len(sylow):
            # order of x modulo span
            def rel_order(x):
                k, y = 1, x
                while y not in span:
                    y = mul(y, x)
                    k += 1
                return k
            x = max((y for y in sylow if y not in span), key=lambda y: (rel_order(y), -y))
            k = rel_order(x)
            s = pw(x, k)
            # find t in span with t^k = s, then x * t^{-1} has order exactly k
            t = next(t for t in sorted(span) if pw(t, k) == s)
            tinv = next(u for u in range(h) if mul(t, u) == e)
            x = mul(x, tinv)
            assert order(x) == k
            gens.append(x)
            ords.append(k)
            new = set()
            for y in span:
                z = y
                for _ in range(k):
                    new.add(z)
                    z = mul(z, x)
            span = new
    coords = np.zeros((h, len(gens)), dtype=np.int64)
    seen = {e: ()}
    for g, o in zip(gens, ords):
        nxt = {}
        for x, vec in seen.items():
            y = x
            for k in range(o):
                nxt[y] = vec + (k,)
                y = mul(y, g)
        seen = nxt
    assert len(seen) == h
    for x, vec in seen.items():
        coords[x, :] = vec
    return tuple(gens), tuple(ords), coords


# ---------------------------------------------------------------------------
# counting functions

def r1_divisor_sum(D: int, n: int) -> int:
    """Number of ideals of O_K of norm n via sum_{d | n} omega(d)."""
    return sum(kronecker(D, d) for d in divisors(n))


def r1_dagger(D: int, n: int) -> int:
    """#{(a, b) : b >= 1, a^2 - b^2 D = 4n}."""
    cnt = 0
    b = 1
    while -b * b * D <= 4 * n:
        a2 = 4 * n + b * b * D
        a = math.isqrt(a2)
        if a * a == a2:
            cnt += 2 if a else 1
        b += 1
    return cnt


def element_pairs(D: int, n: int, f: int = 1) -> int:
    """#{(a, b) in Z^2 : a^2 - b^2 D = 4n, f | b}."""
    cnt = 0
    b = 0
    while -b * b * D <= 4 * n:
        a2 = 4 * n + b * b * D
        a = math.isqrt(a2)
        if a * a == a2:
            k = 2 if a else 1
            cnt += k if b == 0 else 2 * k
        b += f
    return cnt


def principal_count(D: int, n: int, f: int = 1) -> int:
    """Ideals of norm n (prime to f) whose class in Pic(O_f) is trivial.

    Each such ideal has exactly two generators +-(a + b sqrt(D))/2 with f | b.
    """
    return element_pairs(D, n, f) // 2


# ---------------------------------------------------------------------------
# bulk norm tables from lattice points

def form_norm_table(form: QuadForm, bound: int, exclude: int = 0):
    """Sparse table of half the representation numbers of a form.

    Returns (d, r) with d sorted and r[i] = #{(x, y) != 0 : Q(x, y) = d[i]} / 2,
    for d <= bound and, when exclude > 1, gcd(d, exclude) = 1.
    """
    a, b, c = form.a, form.b, form.c
    absdisc = -(b * b - 4 * a * c)
    vals = []
    ymax = math.isqrt(4 * a * bound // absdisc + 1) + 1
    for y in range(0, ymax + 1):
        rad = 4 * a * bound - absdisc * y * y
        if rad < 0:
            break
        s = math.isqrt(rad)
        lo = (-b * y - s) // (2 * a) - 1
        hi = (-b * y + s) // (2 * a) + 1
        if y == 0:
            lo = 1
        x = np.arange(lo, hi + 1, dtype=np.int64)
        q = a * x * x + b * y * x + c * y * y
        vals.append(q[q <= bound])
    d = np.concatenate(vals) if vals else np.zeros(0, dtype=np.int64)
    d = d[d > 0]
    if exclude > 1:
        for l in prime_divisors(exclude):
            d = d[d % l != 0]
    return np.unique(d, return_counts=True)


def principal_norm_table(D: int, f: int, bound: int, exclude: int = 0):
    """Sparse table of principal_count(D, n, f) for n <= bound, sorted by n."""
    absD = -D
    vals, wts = [], []
    bmax = math.isqrt(4 * bound // absD)
    for b in range(0, bmax + 1, f):
        rad = 4 * bound - absD * b * b
        if rad < 0:
            break
        s = math.isqrt(rad)
        a = np.arange(-s, s + 1, dtype=np.int64)
        a = a[(a - b * D) % 2 == 0]
        n = (a * a + absD * b * b) // 4
        vals.append(n)
        # (a, b) and (a, -b) both counted for b > 0; halve for the generator pair
        wts.append(np.full(n.shape, 1.0 if b else 0.5))
    n = np.concatenate(vals)
    w = np.concatenate(wts)
    keep = n > 0
    if exclude > 1:
        for l in prime_divisors(exclude):
            keep &= n % l != 0
    n, w = n[keep], w[keep]
    order = np.argsort(n, kind="stable")
    n, w = n[order], w[order]
    uniq, start = np.unique(n, return_index=True)
    return uniq, np.add.reduceat(w, start) if len(w) else w
