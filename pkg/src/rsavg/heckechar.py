"""Hecke characters W = rho * (chi o N) of p-power conductor and their families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .arith import DirichletCharacter, RootOfUnity, dirichlet_group, is_prime, is_squarefree, unit_group
from .quadfield import ImagQuadField, OrderClassGroup, order_class_group


class HypothesisError(ValueError):
    """A standing coprimality/shape hypothesis is violated."""


def check_hypotheses(field: ImagQuadField, N: int, p: int | None = None) -> None:
    D = field.D
    if N < 1 or not is_squarefree(N):
        raise HypothesisError(f"level {N} must be squarefree")
    if math.gcd(N, D) != 1:
        raise HypothesisError(f"gcd(N, D) = gcd({N}, {D}) != 1")
    if p is not None:
        if p == 2 or not is_prime(p):
            raise HypothesisError(f"p = {p} must be an odd prime")
        if math.gcd(p, N * D) != 1:
            raise HypothesisError(f"gcd(p, N D) = gcd({p}, {N * D}) != 1")


@dataclass(frozen=True)
class RingClassCharacter:
    """Character of Pic(O_{p^alpha}) given by exponents on the cyclic invariants."""

    group: OrderClassGroup
    exponents: tuple[int, ...]
    conductor: int

    @cached_property
    def numerators(self) -> np.ndarray:
        """rho(A) = exp(2 pi i num[A] / order) for every class index A."""
        L = self.order
        num = np.zeros(self.group.h, dtype=np.int64)
        for j, (t, n) in enumerate(zip(self.exponents, self.group.invariants)):
            num += self.group.coords[:, j] * (t * (L // n))
        return num % L

    @property
    def order(self) -> int:
        inv = self.group.invariants
        return math.lcm(*inv) if inv else 1

    def __call__(self, A: int) -> RootOfUnity:
        return RootOfUnity(int(self.numerators[A]), self.order)

    def values(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.numerators / self.order)

    def is_trivial(self) -> bool:
        return all(t == 0 for t in self.exponents)

    def is_real(self) -> bool:
        return bool(np.all((2 * self.numerators) % self.order == 0))


@dataclass(frozen=True)
class HeckeCharacterW:
    index: int
    rho_index: int
    chi_index: int
    rho: RingClassCharacter
    chi: DirichletCharacter
    c: int  # true conductor of rho
    q: int  # true conductor of chi
    x: int  # c = p^x
    y: int  # q = p^y
    tame: tuple
    root_number: RootOfUnity
    self_dual: bool
    exceptional: bool

    @property
    def generic(self) -> bool:
        return not self.exceptional

    @property
    def forced_zero(self) -> bool:
        """Self-dual with root number -1, so L(1/2) vanishes."""
        return self.self_dual and self.root_number == RootOfUnity(1, 2)

    @property
    def classification(self) -> str:
        if self.exceptional:
            return "exceptional"
        return "generic-self-dual" if self.self_dual else "generic"

    @property
    def label(self) -> str:
        return f"rho{self.rho_index}.chi{self.chi_index}"


@dataclass
class CharacterFamily:
    """X_{c,q}: all pairs (rho, chi) with rho on Pic(O_{p^alpha}) and chi mod p^beta."""

    field: ImagQuadField
    N: int
    p: int
    alpha: int
    beta: int
    group: OrderClassGroup
    rhos: list[RingClassCharacter]
    chis: tuple[DirichletCharacter, ...]
    members: list[HeckeCharacterW] = field(repr=False)

    @property
    def c(self) -> int:
        return self.p**self.alpha

    @property
    def q(self) -> int:
        return self.p**self.beta

    @property
    def size(self) -> int:
        return len(self.members)

    def primitive_sets(self) -> dict[tuple, list[int]]:
        """(x, y, tame) -> member indices, ordered by key."""
        sets: dict[tuple, list[int]] = {}
        for W in self.members:
            sets.setdefault((W.x, W.y, W.tame), []).append(W.index)
        return dict(sorted(sets.items(), key=lambda kv: (kv[0][0], kv[0][1], _tame_key(kv[0][2]))))

    def rho_matrix(self) -> np.ndarray:
        return np.array([r.values() for r in self.rhos])

    def chi_matrix(self) -> np.ndarray:
        return np.array([c.values() for c in self.chis])

    def member(self, rho_index: int, chi_index: int) -> HeckeCharacterW:
        return self.members[rho_index * len(self.chis) + chi_index]


def _tame_key(t):
    return tuple((r.order, r.numerator) for r in t)


def _valuation(n: int, p: int) -> int:
    k = 0
    while n % p == 0 and n > 1:
        n //= p
        k += 1
    return k


def _rho_conductor(rho_nums: np.ndarray, group: OrderClassGroup, p: int, alpha: int) -> int:
    for x in range(alpha + 1):
        if x == alpha:
            return p**alpha
        proj = group.projection(p**x)
        kernel = proj == group.identity if x > 0 else proj == order_class_group(group.field, 1).identity
        if np.all(rho_nums[kernel] == 0):
            return p**x
    return p**alpha


def _tame_generators(group: OrderClassGroup, p: int):
    """(generator index j, p-power part of its order) for factors with prime-to-p part > 1."""
    out = []
    for j, n in enumerate(group.invariants):
        pp = p ** _valuation(n, p)
        if n // pp > 1:
            out.append((j, pp))
    return out


def enumerate_family(field: ImagQuadField, N: int, p: int, alpha: int, beta: int) -> CharacterFamily:
    check_hypotheses(field, N, p)
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    if field.class_number % p == 0:
        raise HypothesisError(f"p = {p} divides the class number {field.class_number}; tame parts are not split")
    group = order_class_group(field, p**alpha)
    q = p**beta
    chis = dirichlet_group(q)
    omega_N = int(field.omega_table[N % abs(field.D)])

    rhos = []
    for t in product(*(range(n) for n in group.invariants)):
        tmp = RingClassCharacter(group, tuple(t), 1)
        cond = _rho_conductor(tmp.numerators, group, p, alpha)
        rhos.append(RingClassCharacter(group, tuple(t), cond))

    tgens = _tame_generators(group, p)
    U = unit_group(q)
    chi_tame_pow = p ** (beta - 1) if beta >= 1 else 1

    members = []
    for i, rho in enumerate(rhos):
        for k, chi in enumerate(chis):
            tame = []
            for j, pp in tgens:
                g = group.basis[j]
                tame.append(rho(g) ** pp)
            if beta >= 1:
                g = U.generators[0]
                tame.append(chi.root(g) ** chi_tame_pow)
            chi2N = chi.root(N * N)
            eps = RootOfUnity(0 if omega_N == -1 else 1, 2) * chi2N
            self_dual = bool((chi**2).is_principal())
            exceptional = chi.is_principal() and omega_N == 1
            members.append(
                HeckeCharacterW(
                    index=len(members),
                    rho_index=i,
                    chi_index=k,
                    rho=rho,
                    chi=chi,
                    c=rho.conductor,
                    q=chi.conductor,
                    x=_valuation(rho.conductor, p),
                    y=_valuation(chi.conductor, p),
                    tame=tuple(tame),
                    root_number=eps,
                    self_dual=self_dual,
                    exceptional=exceptional,
                )
            )
    return CharacterFamily(field, N, p, alpha, beta, group, rhos, chis, members)


def tame_part(W: HeckeCharacterW) -> tuple:
    return W.tame


def _primitive_chi(chi: DirichletCharacter) -> DirichletCharacter:
    """The primitive character inducing chi."""
    f = chi.conductor
    if f == chi.modulus:
        return chi
    exps = []
    for a in range(f):
        if math.gcd(a, f) != 1:
            exps.append(-1)
            continue
        # a lift of a that is a unit mod the full modulus
        b = a
        while math.gcd(b, chi.modulus) != 1:
            b += f
        exps.append(int(chi.exps[b % chi.modulus]))
    return DirichletCharacter(f, chi.order, exps)


def dirichlet_coefficients(W: HeckeCharacterW, family: CharacterFamily, table, n_max: int, depletion: int = 0) -> np.ndarray:
    """a_n of L(s, f x W) for n <= n_max, by ideal enumeration.

    depletion = 0 uses W's own conductor (primitive chi on the m-side);
    depletion = M > 0 additionally drops norms sharing a factor with M and
    evaluates chi modulo the family modulus.
    """
    if n_max > table.n_max:
        raise ValueError(f"table depth {table.n_max} < {n_max}")
    field = family.field
    p = family.p
    N = family.N
    own = depletion == 0
    chi = _primitive_chi(W.chi) if own else W.chi
    C = W.c * W.q if own else math.lcm(depletion, W.c * W.q)
    top = family.group
    rho_top = W.rho.values()
    base = order_class_group(field, 1)
    if W.c == 1:
        # rho factors through Pic(O_K)
        proj = top.projection(1)
        rho_base = np.zeros(base.h, dtype=complex)
        rho_base[proj] = rho_top
    chi_vals = chi.values()

    R = np.zeros(n_max + 1, dtype=complex)
    for d in range(1, n_max + 1):
        if math.gcd(d, C) > 1:
            continue
        if d % p == 0 or family.alpha == 0:
            if W.c != 1:
                continue
            ideals = base.ideals_of_norm(d)
            s = sum(m * rho_base[A] for A, m in ideals)
        else:
            ideals = top.ideals_of_norm(d)
            s = sum(m * rho_top[A] for A, m in ideals)
        R[d] = s * chi_vals[d % chi.modulus] * table.lam[d]

    omega = field.omega_table
    chi2 = chi_vals**2
    a = np.zeros(n_max + 1, dtype=complex)
    for m in range(1, math.isqrt(n_max) + 1):
        if math.gcd(m, N) != 1:
            continue
        w = omega[m % abs(field.D)] * chi2[m % chi.modulus]
        if w == 0:
            continue
        k = n_max // (m * m)
        a[m * m :: m * m][:k] += w * R[1 : k + 1]
    return a
