"""Central values of L(s, f x W) and their averages over character families.

Two independent routes compute the harmonic average of a family:

* ``harmonic_direct`` evaluates every member's central value from bucketed
  lattice sums over all ring classes and averages them;
* ``harmonic_formula`` uses orthogonality to rewrite the average through
  principal-ideal counts and congruence-restricted sums, assembled level by
  level with two-dimensional partial summation.

Both routes use the same per-scale truncation, so they agree up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import analytic
from .arith import DirichletCharacter, dirichlet_group, euler_phi, moebius
from .engine import Job, Lattice, bucket_sums, m_weights
from .heckechar import (
    CharacterFamily,
    HeckeCharacterW,
    HypothesisError,
    _primitive_chi,
    check_hypotheses,
    enumerate_family,
)
from .newform import CURVES, Seeds, SeedError, build_table, coefficient, curve_conductor, curve_table
from .quadfield import ImagQuadField, form_norm_table, order_class_group, principal_norm_table

DEFAULT_TOL = 1e-10
DEFAULT_CAP = 2 * 10**7
SYM2_DEPTH = 160 * 2 * 10**4  # coefficients used by the smoothed Sym^2 values


class ToleranceError(RuntimeError):
    """The requested tolerance needs more terms than the configured cap."""


@dataclass(frozen=True)
class Truncation:
    scale: int
    k: int
    level: float
    n_max: int
    bound: float  # tail bound for one of the two smoothed sums
    clamped: bool

    @property
    def certificate(self) -> float:
        # k! = 1 for k in {0, 1}; two sums
        return 2 * self.bound


@dataclass(frozen=True)
class CentralValue:
    label: str
    index: int
    k: int
    value: complex
    n_max: int
    tail_bound: float
    certificate: float
    depletion: int
    level: float
    classification: str
    root_number: complex
    forced_zero: bool


class Context:
    """Field, newform, prime and numerical configuration with shared caches."""

    def __init__(
        self,
        D: int,
        form,
        p: int,
        tol: float = DEFAULT_TOL,
        n_cap: int = DEFAULT_CAP,
        on_cap: str = "raise",
        threads: int = 1,
    ):
        if abs(D) < 7:
            raise HypothesisError(f"|D| = {abs(D)} must be at least 7")
        self.field = ImagQuadField(D)
        if isinstance(form, Seeds):
            self.seeds, self.coeffs = form, None
            self.N = form.level
        else:
            self.seeds = None
            self.coeffs = CURVES[form] if isinstance(form, str) else tuple(int(c) for c in form)
            self.N = curve_conductor(self.coeffs)
        check_hypotheses(self.field, self.N, p)
        if on_cap not in ("raise", "clamp"):
            raise ValueError("on_cap must be 'raise' or 'clamp'")
        if not tol > 0:
            raise ValueError("tolerance must be positive")
        self.p = p
        self.tol = tol
        self.n_cap = int(n_cap)
        self.on_cap = on_cap
        self.threads = max(1, int(threads))
        self._table = None
        self._trunc: dict = {}
        self._lattices: dict = {}
        self._families: dict = {}
        self._direct: dict = {}
        self._own: dict = {}
        self._principal: dict = {}
        self._dsums: dict = {}

    @property
    def D(self) -> int:
        return self.field.D

    @property
    def omega_N(self) -> int:
        return int(self.field.omega_table[self.N % abs(self.D)])

    # -- tables ---------------------------------------------------------------

    def table(self, n: int):
        n = max(int(n), 2)
        if self._table is None or self._table.n_max < n:
            if self.seeds is not None:
                if self.seeds.bound < n:
                    raise SeedError(f"seeds cover primes up to {self.seeds.bound} only; need {n}")
                self._table = build_table(self.seeds, n)
            else:
                # grow geometrically so that slightly deeper requests do not rebuild
                if self._table is not None:
                    n = max(n, min(2 * self._table.n_max, self.n_cap))
                self._table = curve_table(self.coeffs, n)
        return self._table

    def lam(self, d: np.ndarray) -> np.ndarray:
        top = int(d[-1]) if len(d) else 1
        return self.table(top).lam[d]

    def truncation(self, s: int, k: int) -> Truncation:
        key = (s, k)
        if key not in self._trunc:
            level = float(self.N * abs(self.D) * self.p ** (2 * s))
            n_max, bound = analytic.truncation_length(k + 1, level, self.tol / 2)
            clamped = False
            if n_max > self.n_cap:
                if self.on_cap == "raise":
                    raise ToleranceError(
                        f"tolerance {self.tol:g} at level {level:.6g} needs {n_max} terms; cap is {self.n_cap}"
                    )
                n_max, clamped = self.n_cap, True
                bound = analytic.tail_bound(k + 1, level, n_max)
            self._trunc[key] = Truncation(s, k, level, n_max, bound, clamped)
        return self._trunc[key]

    def family(self, alpha: int, beta: int) -> CharacterFamily:
        key = (alpha, beta)
        if key not in self._families:
            self._families[key] = enumerate_family(self.field, self.N, self.p, alpha, beta)
        return self._families[key]

    def class_number(self, x: int) -> int:
        return order_class_group(self.field, self.p**x).h

    # -- lattices ---------------------------------------------------------------

    def _cached_lattice(self, key, bound: int, build):
        hit = self._lattices.get(key)
        if hit is None or hit[0] < bound:
            hit = (bound, build(bound))
            self._lattices[key] = hit
        lat, extra = hit[1]
        if hit[0] == bound:
            return lat, extra
        i = int(np.searchsorted(lat.d, bound, side="right"))
        return Lattice(lat.d[:i], lat.w[:i], lat.cls[:i], lat.ncls), extra

    def class_lattice(self, x: int, exclude: int, bound: int):
        """Norms weighted by ideal counts per ring class of Pic(O_{p^x}).

        Classes A and A^-1 have the same counts, so one label serves both;
        the second return value maps each class to its label.
        """

        def build(bound):
            group = order_class_group(self.field, self.p**x)
            rep_index = np.zeros(group.h, dtype=np.int64)
            parts = []
            for A in range(group.h):
                B = int(group.inverse[A])
                if B < A:
                    rep_index[A] = rep_index[B]
                    continue
                label = len(parts)
                rep_index[A] = label
                d, cnt = form_norm_table(group.forms[A], bound, exclude)
                parts.append((d, cnt * self.lam(d) / np.sqrt(d), label))
            return Lattice.merge(parts, len(parts)), rep_index

        return self._cached_lattice(("class", x, exclude), bound, build)

    def principal_lattice(self, x: int, exclude: int, bound: int) -> Lattice:
        def build(bound):
            d, cnt = principal_norm_table(self.D, self.p**x, bound, exclude)
            return Lattice(d, cnt * self.lam(d) / np.sqrt(d), np.zeros(len(d), dtype=np.int64), 1), None

        return self._cached_lattice(("principal", x, exclude), bound, build)[0]

    def m_weights(self, bound: int, exclude_p: bool):
        return m_weights(self.field.omega_table, self.N, math.isqrt(bound), self.p if exclude_p else 0)

    # -- direct route -------------------------------------------------------------

    def _direct_tables(self, alpha: int, beta: int, ks) -> None:
        """Bucket tables T[s, k][class, u] with top-level depletion."""
        p = self.p
        todo = [k for k in ks if (alpha, beta, k) not in self._direct]
        if not todo:
            return
        fam = self.family(alpha, beta)
        excl = p if alpha + beta >= 1 else 0
        scales = sorted({W.x + W.y for W in fam.members})
        keys = [(s, k) for k in todo for s in scales]
        truncs = [self.truncation(s, k) for s, k in keys]
        bound = max(t.n_max for t in truncs)
        lat, rep_index = self.class_lattice(alpha, excl, bound)
        jobs = [Job(t.level, t.n_max, k + 1) for (s, k), t in zip(keys, truncs)]
        tables = bucket_sums(lat, fam.q, jobs, self.m_weights(bound, beta >= 1), self.threads)
        R = fam.rho_matrix()
        C = fam.chi_matrix()
        for k in todo:
            S1 = {}
            for (s, kk), T in zip(keys, tables):
                if kk == k:
                    S1[s] = R @ T[rep_index] @ C.T
            self._direct[(alpha, beta, k)] = S1

    def family_values(self, alpha: int, beta: int, k: int, depletion: str = "top") -> list[CentralValue]:
        if k not in (0, 1):
            raise ValueError("k must be 0 or 1")
        fam = self.family(alpha, beta)
        if depletion == "top":
            self._direct_tables(alpha, beta, (k,))
            S1 = self._direct[(alpha, beta, k)]
            M = self.p ** (alpha + beta)
            out = []
            for W in fam.members:
                s = W.x + W.y
                z = S1[s][W.rho_index, W.chi_index]
                out.append(self._record(W, k, z, self.truncation(s, k), M))
            return out
        if depletion == "own":
            return [self._own_value(fam, W, k) for W in fam.members]
        raise ValueError(f"unknown depletion mode {depletion!r}")

    def prepare(self, alpha: int, beta: int, ks=(0, 1)) -> None:
        """Compute direct tables for several k in one pass."""
        self._direct_tables(alpha, beta, ks)

    def _record(self, W: HeckeCharacterW, k: int, S1: complex, tr: Truncation, M: int) -> CentralValue:
        eps = complex(W.root_number)
        value = S1 + (-1) ** k * eps * np.conj(S1)
        return CentralValue(
            label=W.label,
            index=W.index,
            k=k,
            value=complex(value),
            n_max=tr.n_max,
            tail_bound=tr.bound,
            certificate=tr.certificate,
            depletion=M,
            level=tr.level,
            classification=W.classification,
            root_number=eps,
            forced_zero=k == 0 and W.forced_zero,
        )

    def _own_value(self, fam: CharacterFamily, W: HeckeCharacterW, k: int) -> CentralValue:
        """Central value with W's own conductor: primitive chi, rho on Pic(O_{p^x})."""
        x, y, p = W.x, W.y, self.p
        s = x + y
        key = (x, y, k)
        tr = self.truncation(s, k)
        if key not in self._own:
            excl = p if s >= 1 else 0
            lat, rep_index = self.class_lattice(x, excl, tr.n_max)
            job = Job(tr.level, tr.n_max, k + 1)
            (T,) = bucket_sums(lat, p**y, [job], self.m_weights(tr.n_max, y >= 1), self.threads)
            self._own[key] = T[rep_index]
        T = self._own[key]
        proj = fam.group.projection(p**x)
        rho = np.zeros(T.shape[0], dtype=complex)
        rho[proj] = W.rho.values()
        chi = _primitive_chi(W.chi).values()
        return self._record(W, k, complex(rho @ T @ chi), tr, W.c * W.q)

    # -- formula route --------------------------------------------------------------

    def _principal_tables(self, alpha: int, beta: int, ks) -> None:
        """U[x][s, k][u]: principal-count sums bucketed by m^2 d mod p^beta."""
        p = self.p
        todo = [k for k in ks if (alpha, beta, k) not in self._principal]
        if not todo:
            return
        excl = p if alpha + beta >= 1 else 0
        q = p**beta
        for k in todo:
            self._principal[(alpha, beta, k)] = {}
        for x in range(alpha + 1):
            keys = [(s, k) for k in todo for s in range(x, alpha + beta + 1)]
            truncs = [self.truncation(s, k) for s, k in keys]
            bound = max(t.n_max for t in truncs)
            lat = self.principal_lattice(x, excl, bound)
            jobs = [Job(t.level, t.n_max, k + 1) for (s, k), t in zip(keys, truncs)]
            tables = bucket_sums(lat, q, jobs, self.m_weights(bound, beta >= 1), self.threads)
            for (s, k), T in zip(keys, tables):
                self._principal[(alpha, beta, k)][(x, s)] = T[0]


# ---------------------------------------------------------------------------
# single values and the direct average


def central_value(ctx: Context, alpha: int, beta: int, rho_index: int, chi_index: int, k: int, depletion: str = "top") -> CentralValue:
    fam = ctx.family(alpha, beta)
    W = fam.member(rho_index, chi_index)
    if depletion == "own":
        return ctx._own_value(fam, W, k)
    return ctx.family_values(alpha, beta, k, depletion)[W.index]


def rankin_central_value(ctx: Context, alpha: int, beta: int, rho_index: int, chi_index: int, k: int, n_max: int | None = None) -> complex:
    """k-th derivative at 1/2 with the degree-four gamma factor, own conductor, by ideal enumeration.

    This is the value of the genuine L-function; the averages above use the
    single Gamma(s + 1) cutoff instead.  Slow; meant for small levels.
    """
    from .heckechar import dirichlet_coefficients

    fam = ctx.family(alpha, beta)
    W = fam.member(rho_index, chi_index)
    level = float(ctx.N * abs(ctx.D) * (W.c * W.q) ** 2)
    if n_max is None:
        n_max = int(12 * level) + 1  # u K_1(u) < 1e-16 beyond u = 4 pi sqrt(12)
    a = dirichlet_coefficients(W, fam, ctx.table(n_max), n_max)
    n = np.nonzero(a)[0]
    S1 = complex(np.sum(a[n] / np.sqrt(n) * analytic.v_rankin(k + 1, n / level)))
    return S1 + (-1) ** k * complex(W.root_number) * np.conj(S1)


def harmonic_direct(ctx: Context, alpha: int, beta: int, k: int) -> tuple[complex, float]:
    """(H, certificate): the plain mean of top-depleted central values."""
    vals = ctx.family_values(alpha, beta, k)
    H = sum(v.value for v in vals) / len(vals)
    cert = sum(v.certificate for v in vals) / len(vals)
    return H, cert


# ---------------------------------------------------------------------------
# formula route


def _abel_weights(x: int, y: int, alpha: int, beta: int) -> dict[int, int]:
    """Coefficients of w(s) multiplying the cumulative count G(x, y)."""
    if x == alpha and y == beta:
        return {x + y: 1}
    if x == alpha or y == beta:
        return {x + y: 1, x + y + 1: -1}
    return {x + y: 1, x + y + 1: -2, x + y + 2: 1}


def _residue_sum(U: np.ndarray, p: int, y: int, target: int) -> float:
    mod = p**y
    u = np.arange(len(U))
    return float(U[(u - target) % mod == 0].sum())


@dataclass
class FormulaResult:
    H: float
    D: float
    Dt: float
    E: float
    certificate: float
    convention: str


def harmonic_formula(ctx: Context, alpha: int, beta: int, k: int, convention: str = "exact") -> FormulaResult:
    if convention == "exact":
        return _formula_exact(ctx, alpha, beta, k)
    if convention == "literal":
        return _formula_literal(ctx, alpha, beta, k)
    raise ValueError(f"unknown convention {convention!r}")


def _formula_certificate(ctx: Context, alpha: int, beta: int, k: int) -> float:
    p = ctx.p
    total = 0.0
    for x in range(alpha + 1):
        for y in range(beta + 1):
            exact = ctx.class_number(x) * euler_phi(p**y)
            if x:
                exact -= ctx.class_number(x - 1) * euler_phi(p**y)
            if y:
                exact -= ctx.class_number(x) * euler_phi(p ** (y - 1))
            if x and y:
                exact += ctx.class_number(x - 1) * euler_phi(p ** (y - 1))
            total += exact * ctx.truncation(x + y, k).certificate
    return total / (ctx.class_number(alpha) * euler_phi(p**beta))


def _formula_exact(ctx: Context, alpha: int, beta: int, k: int) -> FormulaResult:
    p = ctx.p
    ctx._principal_tables(alpha, beta, (k,))
    U = ctx._principal[(alpha, beta, k)]
    sign = (-1) ** (k + 1) * ctx.omega_N
    N2 = ctx.N * ctx.N
    h_top = ctx.class_number(alpha) * euler_phi(p**beta)
    total = 0.0
    corner = (0.0, 0.0)
    for x in range(alpha + 1):
        for y in range(beta + 1):
            weight = ctx.class_number(x) * euler_phi(p**y) / h_top
            one = tilde = 0.0
            for s, c in _abel_weights(x, y, alpha, beta).items():
                one += c * _residue_sum(U[(x, s)], p, y, 1)
                tilde += c * _residue_sum(U[(x, s)], p, y, N2)
            total += weight * (one + sign * tilde)
            if x == alpha and y == beta:
                corner = (one, tilde)
    D, Dt = corner
    return FormulaResult(total, D, Dt, total - D - sign * Dt, _formula_certificate(ctx, alpha, beta, k), "exact")


def D_sums(ctx: Context, k: int, x: int, y: int, variant: str, count: str = "r1", target: str = "inverse") -> tuple[float, float]:
    """One congruence-restricted double sum at (c, q) = (p^x, p^y) and its certificate.

    variant: "D", "Dt" (kernel V_{k+1}) or "frakD", "frakDt" (kernel V(p^4 .) - V(.));
    count: "r1" weights by all ideals of O_K, "principal" by principal classes of O_c;
    target: for the tilde variants, "inverse" uses N^-2 and "square" uses N^2.
    """
    if variant not in ("D", "Dt", "frakD", "frakDt"):
        raise ValueError(f"unknown variant {variant!r}")
    if count not in ("r1", "principal") or target not in ("inverse", "square"):
        raise ValueError("bad count or target")
    p = ctx.p
    q = p**y
    key = (k, x, y, variant, count, target)
    if key in ctx._dsums:
        return ctx._dsums[key]
    tr = ctx.truncation(x + y, k)
    excl = p if x + y >= 1 else 0
    if count == "r1":
        lat, rep_index = ctx.class_lattice(0, excl, tr.n_max)
        mult = np.bincount(rep_index, minlength=lat.ncls).astype(float)
    else:
        lat, mult = ctx.principal_lattice(x, excl, tr.n_max), np.ones(1)
    jobs = [Job(tr.level, tr.n_max, k + 1)]
    if variant.startswith("frak"):
        jobs.append(Job(tr.level, tr.n_max, k + 1, scale=float(p**4)))
    tables = bucket_sums(lat, q, jobs, ctx.m_weights(tr.n_max, False), ctx.threads)
    T = mult @ tables[0]
    if variant.startswith("frak"):
        T = mult @ tables[1] - T
    if variant.endswith("t"):
        N2 = ctx.N * ctx.N % q if q > 1 else 0
        t = pow(N2, -1, q) if target == "inverse" and q > 1 else N2
    else:
        t = 1 % q
    val = float(T[t % q]) if q > 1 else float(T.sum())
    cert = tr.bound * (2 if variant.startswith("frak") else 1)
    ctx._dsums[key] = (val, cert)
    return val, cert


def _formula_literal(ctx: Context, alpha: int, beta: int, k: int) -> FormulaResult:
    p = ctx.p
    sign = (-1) ** (k + 1) * ctx.omega_N
    D, c1 = D_sums(ctx, k, alpha, beta, "D")
    Dt, c2 = D_sums(ctx, k, alpha, beta, "Dt")
    h_top = ctx.class_number(alpha) * euler_phi(p**beta)
    E = 0.0
    cert = c1 + c2
    for x in range(alpha):
        for y in range(beta):
            w = ctx.class_number(x) * euler_phi(p**y) / h_top
            a, ca = D_sums(ctx, k, x, y, "frakD")
            b, cb = D_sums(ctx, k, x, y, "frakDt")
            E += w * (a + sign * b)
            cert += w * (ca + cb)
    return FormulaResult(D + sign * Dt + E, D, Dt, E, cert, "literal")


# ---------------------------------------------------------------------------
# Galois averages and Moebius relations


@dataclass(frozen=True)
class GaloisEntry:
    x: int
    y: int
    tame: tuple
    h_star: int
    delta: complex
    certificate: float

    @property
    def tame_label(self) -> str:
        return ":".join(f"{r.numerator}/{r.order}" for r in self.tame) or "1"


class FamilyData:
    """Central values of one family, regrouped by level and tame part."""

    def __init__(self, ctx: Context, alpha: int, beta: int, k: int):
        self.ctx, self.alpha, self.beta, self.k = ctx, alpha, beta, k
        self.family = ctx.family(alpha, beta)
        self.values = ctx.family_values(alpha, beta, k)
        self.v = np.array([c.value for c in self.values])
        self.cert = np.array([c.certificate for c in self.values])
        self.x = np.array([W.x for W in self.family.members])
        self.y = np.array([W.y for W in self.family.members])

    @cached_property
    def tames(self) -> list[tuple]:
        seen = {}
        for W in self.family.members:
            seen.setdefault(W.tame, None)
        return sorted(seen, key=lambda t: tuple((r.order, r.numerator) for r in t))

    def H_hecke(self, x: int, y: int) -> complex:
        """h_{c',q'} H_{c',q'} at (p^x, p^y), with the zero convention for negative exponents."""
        if x < 0 or y < 0:
            return 0j
        mask = (self.x <= x) & (self.y <= y)
        return complex(self.v[mask].sum())

    def cert_hecke(self, x: int, y: int) -> float:
        if x < 0 or y < 0:
            return 0.0
        mask = (self.x <= x) & (self.y <= y)
        return float(self.cert[mask].sum())

    def h(self, x: int, y: int) -> int:
        return self.ctx.class_number(x) * euler_phi(self.ctx.p**y)

    def H(self, x: int, y: int) -> complex:
        return self.H_hecke(x, y) / self.h(x, y)

    def galois(self, x: int, y: int) -> list[GaloisEntry]:
        sets = self.family.primitive_sets()
        out = []
        for t in self.tames:
            idx = sets.get((x, y, t), [])
            if idx:
                delta = complex(self.v[idx].mean())
                cert = float(self.cert[idx].mean())
            else:
                delta, cert = 0j, 0.0
            out.append(GaloisEntry(x, y, t, len(idx), delta, cert))
        return out

    def galois_all(self) -> list[GaloisEntry]:
        return [e for x in range(self.alpha + 1) for y in range(self.beta + 1) for e in self.galois(x, y)]


def galois_averages(ctx: Context, alpha: int, beta: int, k: int) -> list[GaloisEntry]:
    return FamilyData(ctx, alpha, beta, k).galois(alpha, beta)


@dataclass
class Residuals:
    R1: float
    R2: float
    R3: float
    certificate: float


def relation_residuals(data: FamilyData, galois: list[GaloisEntry] | None = None) -> Residuals:
    """|LHS - RHS| of the regrouping identity and its two Moebius inversions."""
    a, b, p = data.alpha, data.beta, data.ctx.p
    entries = data.galois_all() if galois is None else galois
    total = sum(e.h_star * e.delta for e in entries)
    R1 = abs(data.H_hecke(a, b) - total)
    top = [e for e in entries if e.x == a and e.y == b]
    lhs = sum(e.h_star * e.delta for e in top)
    rhs2 = 0j
    for x in range(a + 1):
        for y in range(b + 1):
            mu = moebius(p ** (a - x)) * moebius(p ** (b - y))
            if mu:
                rhs2 += mu * data.H_hecke(x, y)
    rhs3 = data.H_hecke(a, b) - data.H_hecke(a - 1, b) - (data.H_hecke(a, b - 1) - data.H_hecke(a - 1, b - 1))
    cert = data.cert_hecke(a, b) + data.cert_hecke(a - 1, b) + data.cert_hecke(a, b - 1) + data.cert_hecke(a - 1, b - 1)
    return Residuals(float(R1), float(abs(lhs - rhs2)), float(abs(lhs - rhs3)), cert)


# ---------------------------------------------------------------------------
# difference sums


def theta_constant(ctx: Context, m: int) -> float:
    """h(O_{p^m}) / p^(m-1) from the class number formula."""
    from .quadfield import class_number_formula

    return class_number_formula(ctx.D, ctx.p**m) / ctx.p ** (m - 1)


def j_bracket(p: int, gamma: float, eps: float, s: complex = 0.0) -> complex:
    return p ** (1 - gamma) * (p ** (1 - eps) - p ** (-2 * s - eps)) - p ** (-gamma) * (p ** (1 - eps) - p ** (-4 * s - eps))


@dataclass
class DifferenceSum:
    direct: complex
    factored: complex
    measured_bracket: complex
    lead_chi: float | None
    lead_chi2: float | None
    j0: float
    certificate: float


def _avg_L1(ctx: Context, q: int, square: bool) -> float:
    total = 0j
    chars = dirichlet_group(q)
    for chi in chars:
        theta = ctx.field.omega * (chi * chi if square else chi)
        total += analytic.L1_dirichlet(theta, ctx.N)
    return (total / len(chars)).real


def difference_sum(data: FamilyData, eps: float = 0.5, gamma: float = 0.5) -> DifferenceSum:
    """The four-term difference and its factorization through L^eps."""
    if not (0 < eps < 1 and 0 < gamma < 1):
        raise ValueError("weights must lie in (0, 1)")
    ctx, a, b, p = data.ctx, data.alpha, data.beta, data.ctx.p
    if a < 1:
        raise ValueError("alpha must be at least 1")
    H = lambda x, y: data.H(x, y) if x >= 0 and y >= 0 else 0j
    direct = data.H_hecke(a, b) - data.H_hecke(a - 1, b) - (data.H_hecke(a, b - 1) - data.H_hecke(a - 1, b - 1))
    Leps = lambda y: p ** (1 - eps) * H(a, y) - p ** (-eps) * H(a - 1, y)
    theta = theta_constant(ctx, a)
    if b >= 1:
        bracket = p ** (1 - gamma) * Leps(b) - p ** (-gamma) * Leps(b - 1)
        factored = theta * (p - 1) * p ** (b + gamma - 2) * p ** (a + eps - 2) * bracket
    else:
        bracket = Leps(0)
        factored = theta * p ** (a + eps - 2) * bracket
    j0 = float(j_bracket(p, gamma, eps).real)
    lead_chi = lead_chi2 = None
    if b >= 1:
        q = p**b
        lead_chi = j0 * _avg_L1(ctx, q, False)
        lead_chi2 = j0 * _avg_L1(ctx, q, True)
    cert = data.cert_hecke(a, b) + data.cert_hecke(a - 1, b) + data.cert_hecke(a, b - 1) + data.cert_hecke(a - 1, b - 1)
    return DifferenceSum(direct, factored, bracket, lead_chi, lead_chi2, j0, cert)


# ---------------------------------------------------------------------------
# reports


def main_term(ctx: Context, alpha: int, beta: int, k: int, convention: str = "residue") -> float | None:
    """Predicted value of H for the branch the family falls in, if any."""
    table = ctx.table(SYM2_DEPTH)
    c = ctx.p**alpha
    if beta == 0:
        if ctx.omega_N == -1 and k == 0:
            return analytic.main_term_generic(ctx.field, table, c)
        if ctx.omega_N == 1:
            return 0.0 if k == 0 else analytic.main_term_exceptional(ctx.field, table, c, convention)
        return None
    if k == 0:
        return analytic.main_term_cyclotomic(ctx.field, ctx.N, ctx.p**beta)
    return None


@dataclass
class Nonvanishing:
    value: complex
    certificate: float
    verdict: str


def nonvanishing_report(data: FamilyData) -> Nonvanishing:
    a, b = data.alpha, data.beta
    value = data.H_hecke(a, b) - data.H_hecke(a - 1, b) - (data.H_hecke(a, b - 1) - data.H_hecke(a - 1, b - 1))
    cert = data.cert_hecke(a, b) + data.cert_hecke(a - 1, b) + data.cert_hecke(a, b - 1) + data.cert_hecke(a - 1, b - 1)
    return Nonvanishing(value, cert, "nonzero" if abs(value) > cert else "indeterminate")


@dataclass
class AverageReport:
    p: int
    alpha: int
    beta: int
    k: int
    H_direct: complex
    H_formula: float
    residual: float
    certificate: float
    D: float
    Dt: float
    E: float
    convention: str
    main_term: float | None
    galois: list[GaloisEntry] = field(default_factory=list)
    residuals: Residuals | None = None
    nonvanishing: Nonvanishing | None = None
    clamped: bool = False

    @property
    def identity_ok(self) -> bool:
        return self.residual <= self.certificate


def average_report(ctx: Context, alpha: int, beta: int, k: int, convention: str = "exact", with_main: bool = True) -> AverageReport:
    ctx.prepare(alpha, beta, (k,))
    data = FamilyData(ctx, alpha, beta, k)
    Hd, cd = harmonic_direct(ctx, alpha, beta, k)
    fr = harmonic_formula(ctx, alpha, beta, k, convention)
    clamped = any(ctx.truncation(s, k).clamped for s in range(alpha + beta + 1))
    return AverageReport(
        p=ctx.p,
        alpha=alpha,
        beta=beta,
        k=k,
        H_direct=Hd,
        H_formula=fr.H,
        residual=float(abs(Hd - fr.H)),
        certificate=cd + fr.certificate,
        D=fr.D,
        Dt=fr.Dt,
        E=fr.E,
        convention=convention,
        main_term=main_term(ctx, alpha, beta, k) if with_main else None,
        galois=data.galois(alpha, beta),
        residuals=relation_residuals(data),
        nonvanishing=nonvanishing_report(data),
        clamped=clamped,
    )


# ---------------------------------------------------------------------------
# short sums


def short_sum_diag(ctx: Context, b: int, x_max: int) -> tuple[list[tuple[int, float]], float]:
    """S_x = sum_{a <= x} lambda_f(a^2 - b^2 D) on a doubling grid, and a fitted exponent."""
    if b < 1 or x_max < 1:
        raise ValueError("b and x_max must be positive")
    shift = b * b * abs(ctx.D)
    a = np.arange(1, x_max + 1, dtype=np.int64)
    args = a * a + shift
    top = int(args[-1])
    if ctx.coeffs is not None and top > 2 * 10**7:
        lam = np.array([coefficient(ctx.coeffs, int(n), ctx.N) for n in args])
    else:
        lam = ctx.table(top).lam[args]
    S = np.cumsum(lam)
    grid = sorted({min(2**j, x_max) for j in range(x_max.bit_length() + 1)} | {x_max})
    rows = [(x, float(S[x - 1])) for x in grid]
    pts = [(math.log(x), math.log(abs(s))) for x, s in rows if x >= 8 and s != 0]
    slope = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) >= 2 else float("nan")
    return rows, slope
