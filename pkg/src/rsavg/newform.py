"""Normalized Hecke eigenvalues of weight-2 newforms from a_p seeds.

Seeds come either from a text file (``N,<level>`` header then ``p,ap`` lines) or
from point counts on an elliptic curve.  Small primes are counted naively; the
bulk generator uses baby-step giant-step on the short Weierstrass model.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .arith import factorize, is_squarefree, primes_up_to, spf_sieve

CURVES = {
    "11a1": (0, -1, 1, -10, -20),
    "14a1": (1, 0, 1, 4, -6),
    "15a1": (1, 1, 1, -10, -10),
    "17a1": (1, -1, 1, -1, -14),
    "19a1": (0, 1, 1, -9, -15),
}


class SeedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# curve invariants and naive counting

def curve_invariants(coeffs):
    a1, a2, a3, a4, a6 = coeffs
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    c4 = b2 * b2 - 24 * b4
    c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return c4, c6, disc


def count_points(coeffs, p: int) -> int:
    """#E(F_p) including the point at infinity (and any singular point)."""
    a1, a2, a3, a4, a6 = (c % p for c in coeffs)
    x = np.arange(p, dtype=np.int64)
    if p == 2:
        cnt = 0
        for xx in range(2):
            for yy in range(2):
                if (yy * yy + a1 * xx * yy + a3 * yy - xx**3 - a2 * xx * xx - a4 * xx - a6) % 2 == 0:
                    cnt += 1
        return cnt + 1
    # y^2 + (a1 x + a3) y - rhs = 0 has 1 + legendre(disc) roots
    rhs = (((x * x) % p * x) % p + a2 * x % p * x + a4 * x + a6) % p
    lin = (a1 * x + a3) % p
    disc = (lin * lin + 4 * rhs) % p
    squares = np.zeros(p, dtype=np.int64)
    squares[(x * x) % p] = 1
    leg = np.where(disc == 0, 0, 2 * squares[disc] - 1)
    return int(p + np.sum(leg)) + 1


def reduction_type(coeffs, p: int) -> str:
    c4, _, disc = curve_invariants(coeffs)
    if disc % p:
        return "good"
    return "multiplicative" if c4 % p else "additive"


def ap_from_curve(coeffs, p: int) -> int:
    """a_p = p + 1 - #E(F_p); +-1 at multiplicative primes."""
    kind = reduction_type(coeffs, p)
    if kind == "additive":
        raise SeedError(f"additive reduction at {p}")
    return p + 1 - count_points(coeffs, p)


def curve_conductor(coeffs) -> int:
    """Conductor of a minimal model whose bad primes are all multiplicative."""
    _, _, disc = curve_invariants(coeffs)
    N = 1
    for p, _ in factorize(abs(disc)):
        if reduction_type(coeffs, p) == "additive":
            raise SeedError(f"additive reduction at {p}: level would not be squarefree")
        N *= p
    return N


# ---------------------------------------------------------------------------
# compiled point counting on y^2 = x^3 + A x + B

@numba.njit(cache=True)
def _inv(a, p):
    t, nt, r, nr = 0, 1, p, a % p
    while nr:
        q = r // nr
        t, nt = nt, t - q * nt
        r, nr = nr, r - q * nr
    return t % p


@numba.njit(cache=True)
def _add(x1, y1, z1, x2, y2, z2, A, p):
    # affine points with z = 0 for infinity, z = 1 otherwise
    if z1 == 0:
        return x2, y2, z2
    if z2 == 0:
        return x1, y1, z1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return 0, 0, 0
        lam = (3 * x1 * x1 + A) % p * _inv(2 * y1, p) % p
    else:
        lam = (y2 - y1) % p * _inv((x2 - x1) % p, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * (x1 - x3) - y1) % p
    return x3, y3, 1


@numba.njit(cache=True)
def _mul(k, x, y, z, A, p):
    rx, ry, rz = 0, 0, 0
    if k < 0:
        k = -k
        y = (-y) % p
    while k:
        if k & 1:
            rx, ry, rz = _add(rx, ry, rz, x, y, z, A, p)
        x, y, z = _add(x, y, z, x, y, z, A, p)
        k >>= 1
    return rx, ry, rz


@numba.njit(cache=True)
def _powmod(b, e, m):
    r = 1
    b %= m
    while e:
        if e & 1:
            r = r * b % m
        b = b * b % m
        e >>= 1
    return r


@numba.njit(cache=True)
def _sqrtmod(a, p):
    if a == 0:
        return 0
    if p % 4 == 3:
        return _powmod(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while _powmod(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, _powmod(z, q, p), _powmod(a, q, p), _powmod(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = _powmod(c, 1 << (m - i - 1), p)
        bb = b * b % p
        m, c, t, r = i, bb, t * bb % p, r * b % p
    return r


@numba.njit(cache=True)
def _point_order(x, y, A, p, lo, hi):
    """Order of (x, y) given that it divides some m in [lo, hi]; 0 if none found."""
    width = hi - lo
    s = int(math.sqrt(width)) + 1
    bx = np.empty(s, dtype=np.int64)
    by = np.empty(s, dtype=np.int64)
    bz = np.empty(s, dtype=np.int64)
    cx, cy, cz = 0, 0, 0
    for j in range(s):
        bx[j], by[j], bz[j] = cx, cy, cz
        cx, cy, cz = _add(cx, cy, cz, x, y, 1, A, p)
    keys = np.where(bz == 0, -1, bx)
    order = np.argsort(keys)
    skeys = keys[order]
    gx, gy, gz = _mul(s, x, y, 1, A, p)
    rx, ry, rz = _mul(lo, x, y, 1, A, p)
    m = -1
    # R_i = (lo + i s) P; R_i = +-jP gives (lo + i s -+ j) P = 0
    nsteps = width // s + 2
    for i in range(nsteps):
        key = -1 if rz == 0 else rx
        k = np.searchsorted(skeys, key)
        base = lo + i * s
        while k < s and skeys[k] == key:
            j = order[k]
            if rz == 0:
                cand = base
            elif by[j] == ry:
                cand = base - j
            else:
                cand = base + j
            if lo <= cand <= hi and cand > 0:
                m = cand
                break
            k += 1
        if m > 0:
            break
        rx, ry, rz = _add(rx, ry, rz, gx, gy, gz, A, p)
    if m < 0:
        return 0
    # strip prime factors
    n = m
    q = 2
    mm = m
    while q * q <= mm:
        if mm % q == 0:
            while mm % q == 0:
                mm //= q
            while n % q == 0:
                tx, ty, tz = _mul(n // q, x, y, 1, A, p)
                if tz == 0:
                    n //= q
                else:
                    break
        q += 1
    if mm > 1:
        tx, ty, tz = _mul(n // mm, x, y, 1, A, p)
        if tz == 0:
            n //= mm
    return n


@numba.njit(cache=True)
def _group_order(A, B, p, start):
    """#E(F_p) for y^2 = x^3 + A x + B if determined by point orders, else 0."""
    r = int(math.sqrt(p))
    while r * r > p:
        r -= 1
    while (r + 1) * (r + 1) <= p:
        r += 1
    lo = p + 1 - 2 * r - 2
    hi = p + 1 + 2 * r + 2
    if lo < 1:
        lo = 1
    L = 1
    x = start
    tries = 0
    while tries < 12 and x < p:
        rhs = (x * x % p * x + A * x + B) % p
        if rhs != 0 and _powmod(rhs, (p - 1) // 2, p) == 1:
            y = _sqrtmod(rhs, p)
            o = _point_order(x, y, A, p, lo, hi)
            if o == 0:
                return 0
            a, b = L, o
            while b:
                a, b = b, a % b
            L = L // a * o
            first = ((lo + L - 1) // L) * L
            if first <= hi and first + L > hi:
                # exactly one multiple of L in the Hasse interval
                if abs(p + 1 - first) * abs(p + 1 - first) <= 4 * p:
                    return first
            tries += 1
        x += 1
    return 0


@numba.njit(cache=True)
def _ap_short(A, B, p):
    n = _group_order(A, B, p, 1)
    if n:
        return p + 1 - n
    # quadratic twist by the smallest non-residue
    d = 2
    while _powmod(d, (p - 1) // 2, p) != p - 1:
        d += 1
    nt = _group_order(A * d % p * d % p, B * d % p * d % p * d % p, p, 1)
    if nt:
        return nt - (p + 1)
    return 1 << 40  # sentinel: caller falls back to naive counting


@numba.njit(cache=True)
def _ap_many(c4, c6, primes):
    out = np.empty(primes.shape[0], dtype=np.int64)
    for i in range(primes.shape[0]):
        p = primes[i]
        A = (-27 * (c4 % p)) % p
        B = (-54 * (c6 % p)) % p
        out[i] = _ap_short(A, B, p)
    return out


_AP_CACHE: dict[tuple, np.ndarray] = {}


def ap_table(coeffs, bound: int) -> dict[int, int] | np.ndarray:
    """Array ap[p] for all primes p <= bound (zero at non-primes)."""
    coeffs = tuple(int(c) for c in coeffs)
    cached = _AP_CACHE.get(coeffs)
    if cached is None:
        cached = _disk_load(coeffs)
        if cached is not None:
            _AP_CACHE[coeffs] = cached
    if cached is not None and len(cached) > bound:
        return cached[: bound + 1]
    c4, c6, disc = curve_invariants(coeffs)
    primes = primes_up_to(bound)
    out = np.zeros(bound + 1, dtype=np.int64)
    naive = primes[(primes < 400) | (np.abs(disc) % primes == 0)]
    for p in naive:
        out[p] = ap_from_curve(coeffs, int(p))
    fast = primes[(primes >= 400) & (np.abs(disc) % primes != 0)]
    vals = _ap_many(c4, c6, fast) if len(fast) else np.zeros(0, dtype=np.int64)
    bad = vals == (1 << 40)
    for p in fast[bad]:
        vals[np.searchsorted(fast, p)] = ap_from_curve(coeffs, int(p))
    out[fast] = vals
    _AP_CACHE[coeffs] = out
    if bound >= DISK_CACHE_MIN:
        _disk_store(coeffs, out)
    return out


DISK_CACHE_MIN = 10**6


def _cache_dir() -> Path | None:
    root = os.environ.get("RSAVG_CACHE", str(Path.home() / ".cache" / "rsavg"))
    if root in ("", "0", "off"):
        return None
    return Path(root)


def _cache_file(coeffs) -> Path | None:
    root = _cache_dir()
    if root is None:
        return None
    return root / ("ap_" + "_".join(str(c) for c in coeffs) + ".npy")


def _disk_load(coeffs) -> np.ndarray | None:
    path = _cache_file(coeffs)
    if path is None or not path.exists():
        return None
    try:
        return np.load(path)
    except (OSError, ValueError):
        return None


def _disk_store(coeffs, ap: np.ndarray) -> None:
    path = _cache_file(coeffs)
    if path is None:
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp.npy")
        np.save(tmp, ap)
        os.replace(tmp, path)
    except OSError:
        pass


# ---------------------------------------------------------------------------
# seeds and tables

@dataclass
class Seeds:
    level: int
    ap: np.ndarray  # ap[p] at primes, indexed by p
    source: str = ""

    @property
    def bound(self) -> int:
        return len(self.ap) - 1


def seeds_from_curve(coeffs, bound: int) -> Seeds:
    N = curve_conductor(coeffs)
    return Seeds(N, ap_table(coeffs, bound).copy(), "curve " + ",".join(str(c) for c in coeffs))


def read_seeds(path) -> Seeds:
    """Parse ``N,<level>`` followed by ``p,ap`` lines; '#' starts a comment."""
    path = Path(path)
    level = None
    pairs = {}
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [t.strip() for t in line.split(",")]
            if len(parts) != 2:
                raise SeedError(f"{path}:{lineno}: expected two comma-separated fields")
            if level is None:
                if parts[0] != "N":
                    raise SeedError(f"{path}:{lineno}: first record must be 'N,<level>'")
                try:
                    level = int(parts[1])
                except ValueError:
                    raise SeedError(f"{path}:{lineno}: level is not an integer") from None
                continue
            try:
                p, ap = int(parts[0]), int(parts[1])
            except ValueError:
                raise SeedError(f"{path}:{lineno}: non-integer field") from None
            if p < 2 or factorize(p) != ((p, 1),):
                raise SeedError(f"{path}:{lineno}: {p} is not prime")
            if p in pairs:
                raise SeedError(f"{path}:{lineno}: duplicate prime {p}")
            pairs[p] = ap
    if level is None:
        raise SeedError(f"{path}: missing 'N,<level>' header")
    bound = max(pairs) if pairs else 1
    ap = np.zeros(bound + 1, dtype=np.int64)
    for p, v in pairs.items():
        ap[p] = v
    primes = primes_up_to(bound)
    missing = [int(p) for p in primes if int(p) not in pairs]
    if missing:
        raise SeedError(f"{path}: no seed for prime {missing[0]}")
    return Seeds(level, ap, str(path))


def write_seeds(seeds: Seeds, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"N,{seeds.level}\n")
        for p in primes_up_to(seeds.bound):
            fh.write(f"{p},{seeds.ap[p]}\n")


@numba.njit(cache=True)
def _fill_lambda(spf, lam_p, level_mask, n_max):
    lam = np.zeros(n_max + 1)
    ppow = np.zeros(n_max + 1, dtype=np.int64)
    if n_max >= 1:
        lam[1] = 1.0
        ppow[1] = 1
    for n in range(2, n_max + 1):
        p = spf[n]
        m = n // p
        if m > 1 and spf[m] == p:
            ppow[n] = ppow[m] * p
        else:
            ppow[n] = p
        pk = ppow[n]
        if pk == n:
            if n == p:
                lam[n] = lam_p[p]
            elif level_mask[p]:
                lam[n] = lam_p[p] * lam[n // p]
            else:
                lam[n] = lam_p[p] * lam[n // p] - lam[n // (p * p)]
        else:
            lam[n] = lam[pk] * lam[n // pk]
    return lam


@dataclass
class NewformTable:
    """lambda_f(n) for n <= n_max in the analytic normalization."""

    level: int
    seeds: Seeds
    lam: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.lam) - 1

    def __call__(self, n: int) -> float:
        if n > self.n_max:
            raise IndexError(f"coefficient {n} beyond table depth {self.n_max}")
        return float(self.lam[n])

    def a(self, n: int) -> float:
        return math.sqrt(n) * self(n)

    def ap(self, p: int) -> int:
        return int(self.seeds.ap[p])


def build_table(seeds: Seeds, n_max: int) -> NewformTable:
    N = seeds.level
    if N < 1 or not is_squarefree(N):
        raise SeedError(f"level {N} is not squarefree")
    if seeds.bound < n_max:
        raise SeedError(f"seeds cover primes up to {seeds.bound} only; need {n_max}")
    primes = primes_up_to(n_max)
    ap = seeds.ap[: n_max + 1]
    level_mask = np.zeros(n_max + 1, dtype=np.bool_)
    for q, _ in factorize(N) if N > 1 else ():
        if q <= n_max:
            level_mask[q] = True
            if ap[q] not in (-1, 1):
                raise SeedError(f"a_{q} = {ap[q]} but must be +-1 at a prime dividing the level")
    good = primes[~level_mask[primes]]
    viol = good[ap[good] ** 2 > 4 * good]
    if len(viol):
        p = int(viol[0])
        raise SeedError(f"|a_{p}| = {abs(int(ap[p]))} exceeds 2 sqrt({p})")
    lam_p = np.zeros(n_max + 1)
    lam_p[primes] = ap[primes] / np.sqrt(primes)
    spf = spf_sieve(n_max)
    lam = _fill_lambda(spf, lam_p, level_mask, n_max)
    return NewformTable(N, seeds, lam)


_TABLE_CACHE: dict[tuple, NewformTable] = {}


def curve_table(name_or_coeffs, n_max: int) -> NewformTable:
    """Cached table for a named or explicit curve, reusing deeper tables."""
    coeffs = CURVES[name_or_coeffs] if isinstance(name_or_coeffs, str) else tuple(name_or_coeffs)
    cached = _TABLE_CACHE.get(coeffs)
    if cached is not None and cached.n_max >= n_max:
        return cached
    t = build_table(seeds_from_curve(coeffs, max(n_max, 2)), max(n_max, 2))
    _TABLE_CACHE[coeffs] = t
    return t


def ap_single(coeffs, p: int) -> int:
    """a_p for one prime, without building a table."""
    coeffs = tuple(int(c) for c in coeffs)
    c4, c6, disc = curve_invariants(coeffs)
    if p < 400 or disc % p == 0:
        return ap_from_curve(coeffs, p)
    val = int(_ap_short((-27 * (c4 % p)) % p, (-54 * (c6 % p)) % p, p))
    return ap_from_curve(coeffs, p) if val == (1 << 40) else val


def coefficient(coeffs, n: int, level: int | None = None) -> float:
    """lambda_f(n) by factoring n and computing each a_p directly."""
    N = curve_conductor(coeffs) if level is None else level
    out = 1.0
    for p, e in factorize(n) if n > 1 else ():
        ap = ap_single(coeffs, p)
        lp = ap / math.sqrt(p)
        if N % p == 0:
            out *= lp**e
            continue
        prev, cur = 1.0, lp
        for _ in range(e - 1):
            prev, cur = cur, lp * cur - prev
        out *= cur
    return out
