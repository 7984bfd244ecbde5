import math

import numpy as np
import pytest
import sympy
from scipy import special

from rsavg import analytic
from rsavg.arith import kronecker
from rsavg.averages import (
    Context,
    FamilyData,
    ToleranceError,
    average_report,
    central_value,
    difference_sum,
    harmonic_direct,
    harmonic_formula,
    j_bracket,
    main_term,
    nonvanishing_report,
    rankin_central_value,
    relation_residuals,
    short_sum_diag,
    theta_constant,
)
from rsavg.heckechar import HypothesisError, dirichlet_coefficients
from rsavg.newform import curve_table


def reference_value(ctx, alpha, beta, W, k, own):
    """Central value from ideal-enumeration coefficients and the closed-form kernel."""
    fam = ctx.family(alpha, beta)
    s = W.x + W.y
    level = ctx.N * abs(ctx.D) * ctx.p ** (2 * s)
    n_max = ctx.truncation(s, k).n_max
    M = 0 if own else ctx.p ** (alpha + beta)
    if not own and alpha + beta == 0:
        M = 1
    a = dirichlet_coefficients(W, fam, ctx.table(n_max), n_max, depletion=M if M > 1 else 0)
    n = np.arange(1, n_max + 1)
    S1 = np.sum(a[1:] / np.sqrt(n) * analytic.v(k + 1, n / level))
    return S1 + (-1) ** k * complex(W.root_number) * np.conj(S1)


@pytest.mark.parametrize("alpha,beta", [(0, 0), (1, 1), (0, 2), (2, 0)])
@pytest.mark.parametrize("k", [0, 1])
def test_two_coefficient_pipelines(ctx, alpha, beta, k):
    fam = ctx.family(alpha, beta)
    top = ctx.family_values(alpha, beta, k, "top")
    own = ctx.family_values(alpha, beta, k, "own")
    for W in fam.members[:: max(1, fam.size // 6)]:
        assert abs(top[W.index].value - reference_value(ctx, alpha, beta, W, k, False)) < 1e-12
        assert abs(own[W.index].value - reference_value(ctx, alpha, beta, W, k, True)) < 1e-12


def test_top_and_own_agree_for_members_primitive_at_top(ctx):
    top = ctx.family_values(1, 1, 1, "top")
    own = ctx.family_values(1, 1, 1, "own")
    for W, a, b in zip(ctx.family(1, 1).members, top, own):
        if W.x == 1 and W.y == 1:
            assert abs(a.value - b.value) < 1e-13


def test_forced_zeros(ctx):
    for alpha in range(3):
        for cv in ctx.family_values(alpha, 0, 0):
            assert cv.forced_zero
            assert abs(cv.value) < cv.certificate


def test_self_dual_values_real(ctx):
    fam = ctx.family(2, 1)
    for W, cv in zip(fam.members, ctx.family_values(2, 1, 1)):
        if W.self_dual:
            assert abs(cv.value.imag) < 1e-12


def gl2_value(coeffs_table, n_max, conductor, twist, derivative):
    """L(1) or L'(1) of an elliptic curve (or quadratic twist) with root number +1 or -1."""
    n = np.arange(1, n_max + 1)
    a = np.array([coeffs_table.a(int(k)) for k in n]) * twist(n)
    x = 2 * np.pi * n / math.sqrt(conductor)
    kern = special.exp1(x) if derivative else np.exp(-x)
    return 2 * np.sum(a / n * kern)


def test_degree_four_value_factors_through_gl2():
    # for W = 1 the Rankin-Selberg L-function is L(f) L(f x omega)
    ctx = Context(-7, "11a1", 3)
    t = curve_table("11a1", 3000)
    L_f = gl2_value(t, 400, 11, lambda n: np.ones(len(n)), False)
    chi = np.array([kronecker(-7, int(k)) for k in range(3001)])
    dL_twist = gl2_value(t, 3000, 11 * 49, lambda n: chi[n], True)
    assert abs(L_f - 0.2538418608559106) < 1e-12
    val = rankin_central_value(ctx, 0, 0, 0, 0, 1)
    assert abs(val.imag) < 1e-14
    assert abs(val.real - L_f * dL_twist) < 1e-10


def test_default_kernel_differs_from_degree_four_value(ctx):
    # the averages use the single Gamma(s + 1) cutoff; it is not the degree-four value
    default = central_value(ctx, 0, 0, 0, 0, 1).value.real
    assert abs(default - 0.6924465891835692) < 1e-12
    assert abs(default - rankin_central_value(ctx, 0, 0, 0, 0, 1).real) > 0.3


@pytest.mark.parametrize("alpha", range(3))
@pytest.mark.parametrize("beta", range(3))
def test_harmonic_identity(ctx, alpha, beta):
    ctx.prepare(alpha, beta, (0, 1))
    for k in (0, 1):
        Hd, cd = harmonic_direct(ctx, alpha, beta, k)
        fr = harmonic_formula(ctx, alpha, beta, k)
        assert abs(Hd - fr.H) <= cd + fr.certificate
        assert abs(Hd - fr.H) < 1e-12
        assert abs(Hd.imag) < 1e-12


def test_literal_convention_agrees_at_level_one(ctx):
    for k in (0, 1):
        a = harmonic_formula(ctx, 0, 0, k, "exact").H
        b = harmonic_formula(ctx, 0, 0, k, "literal").H
        assert abs(a - b) < 1e-13
    with pytest.raises(ValueError):
        harmonic_formula(ctx, 0, 0, 0, "other")


def test_relations_and_detector(ctx):
    for alpha, beta, k in [(2, 2, 1), (1, 2, 0), (2, 1, 1)]:
        data = FamilyData(ctx, alpha, beta, k)
        r = relation_residuals(data)
        assert max(r.R1, r.R2, r.R3) <= 2 * r.certificate
        entries = data.galois_all()
        i = next(j for j, e in enumerate(entries) if e.h_star and e.x == alpha and e.y == beta)
        bumped = list(entries)
        e = bumped[i]
        bumped[i] = type(e)(e.x, e.y, e.tame, e.h_star, e.delta + 1e-3, e.certificate)
        r2 = relation_residuals(data, bumped)
        assert abs(r2.R1 - e.h_star * 1e-3) < 1e-9
        assert r2.R1 > 2 * r2.certificate and r2.R2 > 2 * r2.certificate and r2.R3 > 2 * r2.certificate


def test_partition_of_family(ctx):
    data = FamilyData(ctx, 2, 2, 0)
    assert sum(e.h_star for e in data.galois_all()) == data.family.size == data.h(2, 2)


def test_j_bracket_symbolic():
    p, g, e, s = sympy.symbols("p gamma epsilon s", positive=True)
    J = p ** (1 - g) * (p ** (1 - e) - p ** (-2 * s - e)) - p ** (-g) * (p ** (1 - e) - p ** (-4 * s - e))
    J0 = sympy.simplify(J.subs(s, 0))
    assert sympy.simplify(J0 - (p ** (1 - g) - p ** (-g)) * (p ** (1 - e) - p ** (-e))) == 0
    # J(0) = p^(-g-e) (p - 1)^2, nonzero for p > 1
    assert sympy.simplify(J0 - p ** (-g - e) * (p - 1) ** 2) == 0
    for pv in (3, 5, 7):
        for gv, ev in ((0.5, 0.5), (0.2, 0.9)):
            assert abs(j_bracket(pv, gv, ev) - float(J0.subs({p: pv, g: gv, e: ev}))) < 1e-13


@pytest.mark.parametrize("alpha,beta", [(2, 2), (2, 0), (3, 0)])
@pytest.mark.parametrize("k", [0, 1])
def test_difference_factorization(ctx, alpha, beta, k):
    ctx.prepare(alpha, beta, (k,))
    ds = difference_sum(FamilyData(ctx, alpha, beta, k))
    assert abs(ds.direct - ds.factored) <= 1e-10 * max(abs(ds.direct), 1e-300) + 1e-14


def test_theta_constant(ctx):
    for m in range(1, 5):
        assert ctx.class_number(m + 1) == ctx.p * ctx.class_number(m)
        assert theta_constant(ctx, m + 1) == theta_constant(ctx, m)


def test_main_term_branches(ctx, ctx17):
    assert main_term(ctx, 2, 0, 0) == 0.0
    assert main_term(ctx, 2, 0, 1) > 0
    assert main_term(ctx17, 2, 0, 1) is None
    assert main_term(ctx17, 2, 0, 0) > 0
    assert main_term(ctx, 1, 2, 1) is None
    assert abs(main_term(ctx, 1, 2, 0) - 1) < 0.1


def test_nonvanishing_verdicts(ctx, ctx17):
    assert nonvanishing_report(FamilyData(ctx, 1, 0, 0)).verdict == "indeterminate"
    ctx17.prepare(1, 2, (0,))
    assert nonvanishing_report(FamilyData(ctx17, 1, 2, 0)).verdict == "nonzero"


def test_report_fields(ctx):
    r = average_report(ctx, 1, 1, 1, with_main=False)
    assert r.identity_ok and not r.clamped and r.main_term is None
    # H = D + (-1)^(k+1) omega(N) Dt + E with k = 1
    assert abs(r.H_formula - (r.D + ctx.omega_N * r.Dt + r.E)) < 1e-12


def test_tolerance_cap():
    small = Context(-7, "11a1", 3, n_cap=1000)
    with pytest.raises(ToleranceError):
        small.family_values(2, 2, 0)
    clamp = Context(-7, "11a1", 3, n_cap=1000, on_cap="clamp")
    vals = clamp.family_values(2, 2, 0)
    assert all(v.n_max <= 1000 for v in vals)
    assert max(v.certificate for v in vals) > 1e-10
    r = average_report(clamp, 2, 2, 0, with_main=False)
    assert r.clamped and r.identity_ok


@pytest.mark.parametrize("D,curve,p", [(-7, "11a1", 7), (-7, "14a1", 3), (-4, "11a1", 3), (-7, "15a1", 3), (-7, "11a1", 11)])
def test_hypotheses(D, curve, p):
    with pytest.raises((HypothesisError, ValueError)):
        Context(D, curve, p)


def test_thread_determinism():
    a = Context(-7, "11a1", 3, threads=1).family_values(2, 2, 1)
    b = Context(-7, "11a1", 3, threads=4).family_values(2, 2, 1)
    assert [v.value for v in a] == [v.value for v in b]


def test_short_sums(ctx):
    rows, slope = short_sum_diag(ctx, 1, 10**4)
    # S_1 is the single term lambda_f(1 + 7)
    assert rows[0] == (1, pytest.approx(float(curve_table("11a1", 10).lam[8]), abs=1e-15))
    xs = [x for x, _ in rows]
    assert xs[-1] == 10**4 and all(b == 2 * a for a, b in zip(xs[:-2], xs[1:-1]))
    assert abs(rows[-1][1]) / 10**4 < 0.05
    assert slope < 1
    with pytest.raises(ValueError):
        short_sum_diag(ctx, 0, 10)
