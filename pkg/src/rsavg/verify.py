"""Self-check suites bundled with the command-line tool.

Each suite returns a list of Check records; a suite passes when all of them do.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import analytic
from .arith import dirichlet_group, kronecker, moebius, mobius_sieve
from .averages import Context, FamilyData, average_report, relation_residuals
from .quadfield import ImagQuadField, class_number_formula, form_norm_table, order_class_group


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


def r1_by_divisors(D: int, n_max: int) -> np.ndarray:
    """r_1(n) = sum_{d | n} (D/d) for n <= n_max, by a divisor sieve."""
    r = np.zeros(n_max + 1, dtype=np.int64)
    for d in range(1, n_max + 1):
        k = kronecker(D, d)
        if k:
            r[d::d] += k
    return r


def r_by_forms(D: int, f: int, n_max: int) -> np.ndarray:
    """Invertible ideals of O_f by norm, from the reduced forms of discriminant f^2 D."""
    group = order_class_group(ImagQuadField(D), f)
    r = np.zeros(n_max + 1, dtype=np.int64)
    for F in group.forms:
        d, cnt = form_norm_table(F, n_max, f if f > 1 else 0)
        r[d] += cnt
    return r


def suite_counting(n_max: int = 10**5, cox_max: int = 10**4) -> list[Check]:
    out = []
    for D in (-7, -11, -23):
        a, b = r1_by_divisors(D, n_max)[1:], r_by_forms(D, 1, n_max)[1:]
        bad = np.nonzero(a != b)[0]
        out.append(Check(f"r1 D={D} n<={n_max}", len(bad) == 0, f"{len(bad)} mismatches"))
    for D in (-7, -11, -23):
        r1 = r1_by_divisors(D, cox_max)
        for f in (3, 9, 5):
            if math.gcd(f, D) != 1:
                continue
            rf = r_by_forms(D, f, cox_max)
            n = np.arange(cox_max + 1)
            mask = (n >= 1) & (np.gcd(n, f) == 1)
            bad = int(np.count_nonzero(rf[mask] != r1[mask]))
            out.append(Check(f"r_f = r_1 D={D} f={f}", bad == 0, f"{bad} mismatches"))
    for D in (-7, -11, -19, -23, -43):
        for f in (1, 3, 9, 27, 5, 25):
            h_formula = class_number_formula(D, f)
            h_enum = order_class_group(ImagQuadField(D), f).h
            out.append(Check(f"class number D={D} f={f}", h_formula == h_enum, f"{h_formula} vs {h_enum}"))
    return out


def suite_cutoff(seed: int = 1) -> list[Check]:
    out = []
    y = np.logspace(-3, 1, 60)
    for m, closed in ((1, np.exp(-2 * np.pi * y)), (2, special.exp1(2 * np.pi * y))):
        err = float(np.max(np.abs(analytic.v_quad(m, y) - closed)))
        out.append(Check(f"quadrature vs closed form m={m}", err < 1e-10, f"max err {err:.3g}"))
    rng = np.random.default_rng(seed)
    s = rng.uniform(-0.5, 3, 100) + 1j * rng.uniform(-20, 20, 100)
    rel = np.abs(analytic.v_hat(0, s) - analytic.v_hat_from_gamma_factor(0, s)) / np.abs(analytic.v_hat(0, s))
    out.append(Check("duplication identity", float(rel.max()) < 1e-11, f"max rel err {rel.max():.3g}"))
    for m in (1, 2, 3):
        odd = np.abs(analytic.g_weight(m, -s) - (-1) ** m * analytic.g_weight(m, s)).max()
        out.append(Check(f"G_{m}(-s) = (-1)^{m} G_{m}(s)", odd == 0, f"max diff {odd:.3g}"))
    ys = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    d1 = np.abs(analytic.v(1, ys) - 1) / ys
    d2 = np.abs(analytic.v(2, ys) + np.log(2 * np.pi * ys) + analytic.EULER_GAMMA) / ys
    out.append(Check("small-y law", bool(d1.max() < 10 and d2.max() < 10), f"O(y) ratios {d1.max():.3g}, {d2.max():.3g}"))
    for m in (1, 2):
        lhs = analytic.v_tilde_level(m, y, 3) + analytic.v(m, y)
        diff = float(np.max(np.abs(lhs - analytic.v(m, 81 * y))))
        out.append(Check(f"shifted kernel m={m}", diff <= 1e-15, f"max diff {diff:.3g}"))
    return out


def suite_mobius(ctx: Context | None = None, grid: int = 1) -> list[Check]:
    out = []
    mu = mobius_sieve(10**4)
    sums = np.zeros(10**4 + 1, dtype=np.int64)
    for d in range(1, 10**4 + 1):
        if mu[d]:
            sums[d::d] += mu[d]
    ok = sums[1] == 1 and not sums[2:].any()
    out.append(Check("sum_{d|n} mu(d) = [n = 1]", bool(ok), "n <= 10^4"))
    ok = all(moebius(n) == mu[n] for n in range(1, 2000))
    out.append(Check("moebius vs sieve", ok, "n < 2000"))
    for q in (9, 25, 27):
        worst = 0.0
        for a in range(1, q):
            if math.gcd(a, q) != 1:
                continue
            tot = sum(complex(chi.root(a)) for chi in dirichlet_group(q))
            want = len(dirichlet_group(q)) if a % q == 1 else 0
            worst = max(worst, abs(tot - want))
        out.append(Check(f"orthogonality q={q}", worst < 1e-12, f"max err {worst:.3g}"))
    if ctx is not None:
        for a in range(grid + 1):
            for b in range(grid + 1):
                for k in (0, 1):
                    r = relation_residuals(FamilyData(ctx, a, b, k))
                    worst = max(r.R1, r.R2, r.R3)
                    out.append(
                        Check(f"R1-R3 p={ctx.p} ({a},{b}) k={k}", worst <= 2 * r.certificate, f"{worst:.3g} vs 2x{r.certificate:.3g}")
                    )
    return out


def suite_afe(ctx: Context, top: int = 2) -> list[Check]:
    out = []
    for a in range(top + 1):
        vals = ctx.family_values(a, 0, 0)
        zeros = [v for v in vals if v.forced_zero]
        worst = max((abs(v.value) - v.certificate for v in zeros), default=-1.0)
        out.append(Check(f"forced zeros ({a},0)", worst < 0, f"{len(zeros)} members, worst margin {worst:.3g}"))
    fam = ctx.family(1, 1)
    vals = ctx.family_values(1, 1, 1)
    worst = max((abs(v.value.imag) for v, W in zip(vals, fam.members) if W.self_dual), default=0.0)
    out.append(Check("self-dual values real", worst < 1e-12, f"max |imag| {worst:.3g}"))
    return out


def suite_haf(ctx: Context, top: int = 2) -> list[Check]:
    out = []
    for a in range(top + 1):
        for b in range(top + 1):
            ctx.prepare(a, b, (0, 1))
            for k in (0, 1):
                r = average_report(ctx, a, b, k, with_main=False)
                out.append(
                    Check(f"haf p={ctx.p} ({a},{b}) k={k}", r.identity_ok, f"residual {r.residual:.3g}, certificate {r.certificate:.3g}")
                )
    return out


SUITES = ("afe", "haf", "mobius", "cutoff", "counting")


def run_suite(name: str, ctx: Context | None) -> tuple[list[Check], float]:
    t0 = time.perf_counter()
    if name == "counting":
        checks = suite_counting()
    elif name == "cutoff":
        checks = suite_cutoff()
    elif name == "mobius":
        checks = suite_mobius(ctx)
    elif name == "afe":
        checks = suite_afe(ctx)
    elif name == "haf":
        checks = suite_haf(ctx)
    else:
        raise ValueError(f"unknown suite {name!r}")
    return checks, time.perf_counter() - t0
