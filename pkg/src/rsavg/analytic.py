"""Cutoff kernels for the approximate functional equation, certified truncation,
and the auxiliary L-values and constants entering the main terms."""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numba
import numpy as np
from scipy import integrate, special

from .arith import DirichletCharacter, prime_divisors, primes_up_to, spf_sieve

EULER_GAMMA = float(mpmath.euler)
LOG_2PI = math.log(2 * math.pi)
QUAD_ABSCISSA = 2.0
QUAD_STEP = 0.05


# ---------------------------------------------------------------------------
# Mellin side

def v_hat(m: int, s):
    """(2 pi)^(-s) Gamma(s + 1) s^(-m)."""
    s = np.asarray(s, dtype=complex)
    if np.any(s == 0):
        raise ZeroDivisionError("v_hat has a pole at s = 0")
    return np.exp(-s * LOG_2PI + special.loggamma(s + 1)) / s**m


def gamma_r(s):
    s = np.asarray(s, dtype=complex)
    return np.pi ** (-s / 2) * special.gamma(s / 2)


def gamma_factor(s):
    """Archimedean factor Gamma_R(s + 1/2) Gamma_R(s + 3/2)."""
    return gamma_r(np.asarray(s) + 0.5) * gamma_r(np.asarray(s) + 1.5)


def v_hat_from_gamma_factor(m: int, s):
    """pi * L_inf(s + 1/2) * s^(-m): the unreduced form, kept as an oracle."""
    s = np.asarray(s, dtype=complex)
    return np.pi * gamma_factor(s + 0.5) / s**m


def g_weight(m: int, s):
    return np.asarray(s, dtype=complex) ** (-m)


# ---------------------------------------------------------------------------
# kernels

def _abs_gamma3(t):
    """|Gamma(3 + it)| exactly, from |Gamma(1 + it)|^2 = pi t / sinh(pi t)."""
    t = np.abs(np.asarray(t, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.where(t < 1e-8, 1.0, np.pi * t / np.sinh(np.pi * t))
    return np.sqrt((4 + t * t) * (1 + t * t) * r)


def _tail_majorant(m: int, t):
    # |v_hat(2 + it)| <= (2 pi)^-2 sqrt((4+t^2)(1+t^2) 2 pi t e^{-pi t} / (1 - e^{-2 pi})) / |2+it|^m, t >= 1
    t = np.asarray(t, dtype=float)
    poly = np.sqrt((4 + t * t) * (1 + t * t) * 2 * np.pi * t / (1 - math.exp(-2 * np.pi)))
    return poly * np.exp(-np.pi * t / 2) / (4 * np.pi**2) / (4 + t * t) ** (m / 2)


def quad_height(m: int, ymin: float, tol: float) -> float:
    """Height T with (1/pi) ymin^-2 int_T^inf |v_hat(2 + it)| dt < tol / 2."""
    T = 4.0
    while True:
        tail, _ = integrate.quad(lambda t: _tail_majorant(m, t), T, np.inf, limit=200)
        if tail * ymin ** (-QUAD_ABSCISSA) / np.pi < tol / 2:
            return T
        T *= 1.25


def v_quad(m: int, y, tol: float = 1e-14, step: float = QUAD_STEP):
    """V_m(y) by the trapezoid rule on the line Re s = 2."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    T = quad_height(m, float(y.min()), tol)
    t = np.arange(0.0, T + step, step)
    s = QUAD_ABSCISSA + 1j * t
    vh = v_hat(m, s)
    w = np.full(t.shape, step)
    w[0] = step / 2
    # (1/2 pi) int_R v_hat(2+it) y^(-2-it) dt, folded onto t >= 0 by conjugate symmetry
    logy = np.log(y)[:, None]
    vals = (vh[None, :] * np.exp(-s[None, :] * logy)).real
    return vals @ w / np.pi


def v(m: int, y):
    """V_m(y): closed forms for m = 1, 2 and quadrature beyond."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    if m == 1:
        return np.exp(-2 * np.pi * y)
    if m == 2:
        return special.exp1(2 * np.pi * y)
    out = v_quad(m, y.ravel())
    return out.reshape(y.shape) if y.shape else float(out[0])


def v_rankin(m: int, y):
    """Cutoff for the degree-four gamma factor Gamma_C(s + 1/2)^2 (not used by the averages).

    V_1(y) = u K_1(u) with u = 4 pi sqrt(y); V_2(y) = int_y^oo V_1(t) dt / t.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    one = lambda t: 4 * np.pi * np.sqrt(t) * special.k1(4 * np.pi * np.sqrt(t))
    if m == 1:
        return one(y)
    if m == 2:
        f = lambda t: integrate.quad(lambda x: one(x) / x, t, np.inf, limit=200, epsabs=1e-15)[0]
        return np.vectorize(f)(y)
    raise ValueError("only m = 1, 2 are provided")


def v_tilde_level(m: int, y, p: int):
    y = np.asarray(y, dtype=float)
    return v(m, p**4 * y) - v(m, y)


def v_tilde_weight(m: int, y, p: int, eps: float):
    if not 0 < eps < 1:
        raise ValueError("weight must lie in (0, 1)")
    y = np.asarray(y, dtype=float)
    return p ** (1 - eps) * v(m, y) - p ** (-eps) * v(m, p * p * y)


# ---------------------------------------------------------------------------
# truncation certificates

def _shift_constant(m: int, C: float) -> float:
    """(1/2 pi) int |v_hat(C + it)| dt."""
    f = lambda t: abs(complex(v_hat(m, C + 1j * t)))
    val, _ = integrate.quad(f, 0, np.inf, limit=400)
    return val / np.pi


def kernel_majorant(m: int, y):
    """A decreasing upper bound for |V_m(y)|."""
    y = np.asarray(y, dtype=float)
    if m == 1:
        return np.exp(-2 * np.pi * y)
    if m == 2:
        return special.exp1(2 * np.pi * y)
    cs = (1.0, 2.0, 4.0, 8.0, 16.0)
    consts = [_shift_constant(m, C) for C in cs]
    return np.min([K * y ** (-C) for C, K in zip(cs, consts)], axis=0)


def tail_bound(m: int, level: float, T: float) -> float:
    """Bound on sum_{n > T} d_4(n) n^(-1/2) |V_m(n / level)|.

    Uses sum_{n <= x} d_4(n) <= x (1 + log x)^3 and partial summation against the
    decreasing weight g(t) = t^(-1/2) V(t / level).
    """
    T = max(float(T), 1.0)
    g = lambda t: t**-0.5 * float(kernel_majorant(m, t / level))
    head = T * (1 + math.log(T)) ** 3 * g(T)

    def integrand(u):
        t = T + u * level
        L = 1 + math.log(t)
        return (L**3 + 3 * L**2) * g(t) * level

    body, err = integrate.quad(integrand, 0, np.inf, limit=400, epsabs=0, epsrel=1e-10)
    return (head + body + abs(err)) * (1 + 1e-9)


def truncation_length(m: int, level: float, tol: float) -> tuple[int, float]:
    """Smallest n_max (up to bisection) with tail_bound(m, level, n_max) <= tol."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if math.isinf(tol):
        return 1, tail_bound(m, level, 1)
    lo, hi = 1, max(2, int(level))
    if tail_bound(m, level, lo) <= tol:
        return lo, tail_bound(m, level, lo)
    while tail_bound(m, level, hi) > tol:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(m, level, mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi, tail_bound(m, level, hi)


# ---------------------------------------------------------------------------
# zeta constants

def zeta2_removed(M: int = 1) -> float:
    val = math.pi**2 / 6
    for l in prime_divisors(M) if M > 1 else ():
        val *= 1 - l**-2.0
    return val


@lru_cache(maxsize=None)
def _zeta_logderiv_2() -> float:
    return float(mpmath.zeta(2, derivative=1) / mpmath.zeta(2))


def zeta_logderiv2_removed(M: int = 1) -> float:
    """(zeta^(M))'/zeta^(M) at s = 2."""
    val = _zeta_logderiv_2()
    for l in prime_divisors(M) if M > 1 else ():
        val += math.log(l) / (l * l - 1)
    return val


# ---------------------------------------------------------------------------
# Dirichlet L-values at s = 1

def _euler_removed(theta: DirichletCharacter, M: int, s: float = 1.0) -> complex:
    out = 1.0 + 0j
    for l in prime_divisors(M) if M > 1 else ():
        out *= 1 - theta(l) / l**s
    return out


def L1_dirichlet(theta: DirichletCharacter, M: int = 1) -> complex:
    """L^(M)(1, theta) = -(1/q) sum_a theta(a) psi(a/q), times removed Euler factors."""
    if theta.is_principal():
        raise ValueError("L(s, theta) has a pole at s = 1 for principal theta")
    q = theta.modulus
    vals = theta.values()
    a = np.arange(1, q)
    L = -np.sum(vals[1:] * special.digamma(a / q)) / q
    val = L * _euler_removed(theta, M)
    return val.real if theta.is_real() else val


def _richardson3(s1, s2, s4):
    """Eliminate X^-1 and X^-2 terms from S(X), S(2X), S(4X)."""
    r1 = 2 * s2 - s1
    r2 = 2 * s4 - s2
    return (4 * r2 - r1) / 3, abs((4 * r2 - r1) / 3 - r2)


def L1_dirichlet_smoothed(theta: DirichletCharacter, X: float = 2e4, M: int = 1):
    """Independent route: sum theta(n)/n e^(-n/X) with Richardson extrapolation."""
    vals = theta.values()
    sums = []
    for scale in (X, 2 * X, 4 * X):
        n = np.arange(1, int(40 * scale) + 1)
        sums.append(np.sum(vals[n % theta.modulus] / n * np.exp(-n / scale)))
    L, err = _richardson3(*sums)
    L = L * _euler_removed(theta, M)
    return (L.real if theta.is_real() else L), err


def Lprime_1(theta: DirichletCharacter) -> complex:
    """L'(1, theta) = -log q L(1, theta) - (1/q) sum_a theta(a) gamma_1(a/q)."""
    q = theta.modulus
    vals = theta.values()
    acc = mpmath.mpf(0)
    for a in range(1, q):
        if vals[a] != 0:
            acc += complex(vals[a]) * mpmath.stieltjes(1, mpmath.mpf(a) / q)
    L1 = complex(L1_dirichlet(theta))
    return -math.log(q) * L1 - complex(acc) / q


def Lprime_1_smoothed(theta: DirichletCharacter, X: float = 2e4):
    """-sum theta(n) log(n) / n e^(-n/X), Richardson-extrapolated."""
    vals = theta.values()
    sums = []
    for scale in (X, 2 * X, 4 * X):
        n = np.arange(1, int(40 * scale) + 1)
        sums.append(-np.sum(vals[n % theta.modulus] * np.log(n) / n * np.exp(-n / scale)))
    return _richardson3(*sums)


def Lprime_over_L_1(omega: DirichletCharacter, M: int = 1, method: str = "stieltjes", X: float = 2e4) -> float:
    """(L^(M))'/L^(M) at s = 1 for a real character."""
    L = L1_dirichlet(omega)
    if method == "stieltjes":
        Lp = Lprime_1(omega)
    elif method == "series":
        Lp, _ = Lprime_1_smoothed(omega, X)
    else:
        raise ValueError(method)
    val = complex(Lp) / complex(L)
    for l in prime_divisors(M) if M > 1 else ():
        w = omega(l)
        val += w * math.log(l) / (l - w)
    return val.real


# ---------------------------------------------------------------------------
# symmetric square

@numba.njit(cache=True)
def _square_coeffs(spf, lam_p, level_mask, n):
    """g(k) = lambda(k^2) for k <= n, by multiplicativity."""
    g = np.zeros(n + 1)
    ppow = np.zeros(n + 1, dtype=np.int64)
    expo = np.zeros(n + 1, dtype=np.int64)
    if n >= 1:
        g[1] = 1.0
    for k in range(2, n + 1):
        p = spf[k]
        m = k // p
        if m > 1 and spf[m] == p:
            ppow[k] = ppow[m] * p
            expo[k] = expo[m] + 1
        else:
            ppow[k] = p
            expo[k] = 1
        pk = ppow[k]
        if pk == k:
            e2 = 2 * expo[k]
            lp = lam_p[p]
            if level_mask[p]:
                v = lp**e2
            else:
                a, b = 1.0, lp
                for _ in range(e2 - 1):
                    a, b = b, lp * b - a
                v = b
            g[k] = v
        else:
            g[k] = g[pk] * g[k // pk]
    return g


def sym2_dirichlet_coeffs(table, n: int, M: int = 1) -> np.ndarray:
    """Coefficients b_n of L^(M)(s, Sym^2 f) = zeta^(MN)(2s) sum_{(k,M)=1} lambda(k^2) k^-s."""
    seeds = table.seeds
    if seeds.bound < n:
        raise ValueError(f"seeds reach {seeds.bound}; symmetric square needs primes to {n}")
    primes = primes_up_to(n)
    lam_p = np.zeros(n + 1)
    lam_p[primes] = seeds.ap[primes] / np.sqrt(primes)
    level_mask = np.zeros(n + 1, dtype=np.bool_)
    for l in prime_divisors(table.level):
        if l <= n:
            level_mask[l] = True
    g = _square_coeffs(spf_sieve(n), lam_p, level_mask, n)
    k = np.arange(n + 1)
    bad = np.zeros(n + 1, dtype=bool)
    for l in prime_divisors(M) if M > 1 else ():
        bad |= k % l == 0
    g[bad] = 0
    g[0] = 0
    # convolve with the indicator of squares m^2, (m, MN) = 1
    b = g.copy()
    excl = prime_divisors(M * table.level) if M * table.level > 1 else []
    for m in range(2, math.isqrt(n) + 1):
        if any(m % l == 0 for l in excl):
            continue
        b[m * m :: m * m] += g[1 : n // (m * m) + 1]
    return b


def _sym2_sums(table, M: int, X: float, weight_log: bool):
    nmax = int(40 * 4 * X)
    b = sym2_dirichlet_coeffs(table, nmax, M)
    n = np.arange(1, nmax + 1, dtype=float)
    w = b[1:] / n
    if weight_log:
        w = -w * np.log(n)
    sums = []
    for scale in (X, 2 * X, 4 * X):
        k = int(40 * scale)
        sums.append(float(np.sum(w[:k] * np.exp(-n[:k] / scale))))
    return sums


def L1_sym2(table, M: int = 1, X: float = 2e4, with_error: bool = False):
    """L^(M)(1, Sym^2 f) by exponential smoothing at X, 2X, 4X plus Richardson."""
    val, err = _richardson3(*_sym2_sums(table, M, X, False))
    return (val, err) if with_error else val


def Lprime_sym2(table, M: int = 1, X: float = 2e4, with_error: bool = False):
    val, err = _richardson3(*_sym2_sums(table, M, X, True))
    return (val, err) if with_error else val


# ---------------------------------------------------------------------------
# main terms

def main_term_constant(field, table, c: int) -> float:
    """C = L^(N)(1, omega) L^(c)(1, Sym^2 f) / zeta^(cN)(2)."""
    N = table.level
    return L1_dirichlet(field.omega, N) * L1_sym2(table, c) / zeta2_removed(c * N)


def main_term_generic(field, table, c: int) -> float:
    return 2 * main_term_constant(field, table, c)


def main_term_exceptional(field, table, c: int, convention: str = "residue") -> float:
    """Residue of the b = 0 term for k = 1.

    ``residue`` is the constant obtained by differentiating the full Mellin
    integrand at s = 0; ``literal`` keeps the bracket with -zeta'/zeta(2) - gamma - log 2 pi.
    """
    N = table.level
    Delta = abs(field.D) * c * c
    C = main_term_constant(field, table, c)
    lw = Lprime_over_L_1(field.omega, N)
    ls = Lprime_sym2(table, c) / L1_sym2(table, c)
    lz = zeta_logderiv2_removed(c * N)
    if convention == "residue":
        bracket = 0.5 * math.log(N * Delta) + lw + ls - 2 * lz - 0.5 * (EULER_GAMMA + LOG_2PI)
    elif convention == "literal":
        bracket = 0.5 * math.log(N * Delta) + lw + ls - lz - EULER_GAMMA - LOG_2PI
    else:
        raise ValueError(convention)
    return 4 * C * bracket


def main_term_cyclotomic(field, N: int, q: int) -> float:
    """(1/phi(q)) sum_{chi mod q} L^(N)(1, omega chi^2)."""
    from .arith import dirichlet_group

    chars = dirichlet_group(q)
    total = 0j
    for chi in chars:
        total += L1_dirichlet(field.omega * chi**2, N)
    return (total / len(chars)).real
