import random

import pytest
import sympy
from gmpy2 import mpc, mpfr, mpq
from hypothesis import given
from hypothesis import strategies as st

from equivmod.errors import CriticalPoint, InsufficientJetOrder
from equivmod.moebius import GAMMA2_A, Mat2, mobius_apply, mobius_fit
from equivmod.numerics import Jet
from equivmod.ode import FundamentalSystem, OdeCoefficients, PathPolyline, solution_jets, transport
from equivmod.qforms import form_sampler
from equivmod.sampler import constant_sampler, from_jet_function, mobius_sampler, polynomial_sampler
from equivmod.schwarz import (
    bol_residual,
    bol_sides,
    compose_with_mobius,
    schwarz_cocycle_residual,
    schwarzian,
    schwarzian_jet,
    weight4_automorphy_residual,
)

TOL = mpfr(2) ** -(256 - 16)
TOL_COCYCLE = mpfr(2) ** -(256 - 76)
S = Mat2(0, -1, 1, 0)
T = Mat2(1, 1, 0, 1)
L = Mat2(1, 0, 1, 1)

exp_f = from_jet_function(lambda t: t.exp(), name="exp")
rat_exp = from_jet_function(lambda t: (t.exp() + 2) / (t * t + 3), name="rational-exp")
POOL = [exp_f, rat_exp, polynomial_sampler([1, 2, 0, 1])]


def sym_schwarzian(expr, z):
    d1 = sympy.diff(expr, z)
    r = sympy.diff(d1, z) / d1
    return sympy.simplify(sympy.diff(r, z) - r**2 / 2)


def to_mpc(v):
    v = complex(sympy.N(v, 80))
    return mpc(v)


def test_mobius_schwarzian_vanishes():
    f = mobius_sampler(Mat2(2, 1, 1, 1))
    for z in (mpc(0.3, 0.4), mpc(-2, 1), mpc(5, -3)):
        assert abs(schwarzian(f, z)) < TOL


def test_exp_schwarzian_matches_symbolic():
    z = sympy.symbols("z")
    assert sym_schwarzian(sympy.exp(z), z) == sympy.Rational(-1, 2)
    for w in (mpc(0, 1), mpc(1.5, -0.5)):
        assert abs(schwarzian(exp_f, w) + mpq(1, 2)) < TOL


def test_ratio_of_solutions_with_constant_g():
    # solutions of y'' + y = 0 continued from 0 to 0.3 + 0.9i; S(y1/y2) = 2
    g1 = OdeCoefficients(constant_sampler(1))
    z = mpc(mpfr("0.3"), mpfr("0.9"))
    sys = transport(g1, PathPolyline.segment(0, z), FundamentalSystem.identity(0))
    v = sys.values
    y1 = solution_jets(g1, z, v.a, v.c, 6)
    y2 = solution_jets(g1, z, v.b, v.d, 6)
    assert abs(schwarzian_jet(y1 / y2).value - 2) < mpfr(2) ** -(256 - 56)


def test_rational_schwarzian_against_sympy():
    z = sympy.symbols("z")
    expr = (sympy.exp(z) + 2) / (z**2 + 3)
    oracle = sym_schwarzian(expr, z).subs(z, sympy.Rational(3, 10) + sympy.I / 2)
    got = schwarzian(rat_exp, mpc(mpfr("0.3"), mpfr("0.5")), 6)
    assert abs(got - to_mpc(oracle)) < 1e-14 * max(1, abs(got))


def test_critical_point_and_order():
    square = polynomial_sampler([0, 0, 1])
    with pytest.raises(CriticalPoint):
        schwarzian(square, 0)
    with pytest.raises(InsufficientJetOrder):
        schwarzian_jet(Jet(0, [0, 1, 2]))


def test_j_has_a_critical_point_at_i():
    with pytest.raises(CriticalPoint):
        schwarzian(form_sampler("j"), mpc(0, 1))


def test_cocycle_identity_is_exact():
    assert schwarz_cocycle_residual(exp_f, Mat2.identity(), mpc(0.2, 1)) == 0


def test_cocycle_for_j_near_i():
    j = form_sampler("j")
    z = mpc(mpfr("0.05"), mpfr("1.05"))
    assert schwarz_cocycle_residual(j, T, z, 6) < TOL_COCYCLE
    assert schwarz_cocycle_residual(j, S, z, 6) < TOL_COCYCLE


def test_literal_positive_exponent_form_fails_for_inversion():
    # S(f o g)(z) = (cz+d)^4 S(f)(g z) is false when c != 0; the correct factor is (cz+d)^-4
    f = rat_exp
    z = mpc(mpfr("0.2"), mpfr("1.3"))
    lhs = schwarzian_jet(compose_with_mobius(f, S, z, 6)).value
    rhs_plus = z**4 * schwarzian(f, mobius_apply(S, z), 6)
    rhs_minus = z**-4 * schwarzian(f, mobius_apply(S, z), 6)
    assert abs(lhs - rhs_plus) > 1e-3
    assert abs(lhs - rhs_minus) < TOL


def test_cocycle_for_legendre_ratio(legendre_pullback):
    h = legendre_pullback.ratio_sampler()
    z = mpc(mpfr("0.1"), mpfr("1.2"))
    assert schwarz_cocycle_residual(h, GAMMA2_A, z, 6) < TOL_COCYCLE
    assert weight4_automorphy_residual(h, GAMMA2_A, z, 6) < TOL_COCYCLE


@pytest.mark.parametrize(
    "poly,r,gamma,z",
    [
        ([0, 0, 1], 0, S, mpc(0, 2)),
        ([0, 0, 0, 1], 1, L, mpc(1, 1)),
    ],
)
def test_bol_examples_against_sympy(poly, r, gamma, z):
    x = sympy.symbols("x")
    F = sum(sympy.Integer(c) * x**k for k, c in enumerate(poly))
    a, b, c, d = (sympy.Integer(int(v)) for v in gamma.entries())
    gx = (a * x + b) / (c * x + d)
    lhs_sym = sympy.diff((c * x + d) ** r * F.subs(x, gx), x, r + 1)
    rhs_sym = sympy.diff(F, x, r + 1).subs(x, gx) * (c * x + d) ** (-(r + 2))
    assert sympy.simplify(lhs_sym - rhs_sym) == 0
    pt = sympy.Float(str(z.real), 80) + sympy.I * sympy.Float(str(z.imag), 80)
    lhs, rhs = bol_sides(polynomial_sampler(poly), r, gamma, z)
    assert abs(lhs - to_mpc(lhs_sym.subs(x, pt))) < 1e-12
    assert abs(lhs - rhs) < TOL


def test_bol_identity_matrix_is_exact():
    assert bol_residual(polynomial_sampler([1, 2, 3]), 2, Mat2.identity(), mpc(0.5, 1)) == 0


def test_bol_requires_det_one_unless_exploring():
    F = polynomial_sampler([1, 1, 1])
    with pytest.raises(ValueError):
        bol_residual(F, 1, Mat2(2, 0, 0, 1), mpc(0, 1))
    bol_sides(F, 1, Mat2(2, 0, 0, 1), mpc(0, 1), strict=False)


@pytest.mark.parametrize("gamma", [T, S, L])
def test_bol_degenerates_at_r0_symbolically(gamma):
    x = sympy.symbols("x")
    a, b, c, d = (sympy.Integer(int(v)) for v in gamma.entries())
    gx = (a * x + b) / (c * x + d)
    for deg in range(6):
        F = sum(sympy.Symbol(f"c{k}") * x**k for k in range(deg + 1))
        lhs = sympy.diff(F.subs(x, gx), x)
        rhs = sympy.diff(F, x).subs(x, gx) / (c * x + d) ** 2
        assert sympy.simplify(lhs - rhs) == 0


@given(st.integers(0, 10 ** 6))
def test_schwarzian_invariant_under_post_composed_mobius(seed):
    rng = random.Random(seed)
    alpha = Mat2(*(mpc(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(4)))
    f = rng.choice(POOL)
    z = mpc(rng.uniform(-1, 1), rng.uniform(0.2, 1.5))
    af = from_jet_function(
        lambda t: (alpha.a * f.jet(t.base, t.order) + alpha.b) / (alpha.c * f.jet(t.base, t.order) + alpha.d))
    try:
        s_af = schwarzian(af, z, 6)
    except Exception:
        return  # alpha sends f(z) to infinity; not a sample point for this property
    s_f = schwarzian(f, z, 6)
    assert abs(s_af - s_f) < mpfr(2) ** -(256 - 60) * max(1, abs(s_f))


def test_projective_equivalence_detected_by_fit():
    rng = random.Random(11)
    alpha = Mat2(mpc(1, 1), 2, mpc(0, -1), 3)
    f = rat_exp
    g = from_jet_function(
        lambda t: (alpha.a * f.jet(t.base, t.order) + alpha.b) / (alpha.c * f.jet(t.base, t.order) + alpha.d))
    pts = [mpc(rng.uniform(-1, 1), rng.uniform(0.3, 1.5)) for _ in range(23)]
    for z in pts[:10]:
        assert abs(schwarzian(f, z, 6) - schwarzian(g, z, 6)) < mpfr(2) ** -(256 - 60) * max(1, abs(schwarzian(f, z, 6)))
    fitted = mobius_fit([(f(z), g(z)) for z in pts[:3]])
    for z in pts[3:]:
        assert abs(g(z) - mobius_apply(fitted, f(z))) < mpfr(2) ** -(256 - 60) * max(1, abs(g(z)))
