import random

import gmpy2
import mpmath
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given
from hypothesis import strategies as st

from equivmod.errors import NotInUpperHalfPlane
from equivmod.moebius import GAMMA2_A, GAMMA2_B, Mat2, mobius_apply
from equivmod.qforms import coefficients, eval_form, form_jet, terms_needed

mpmath.mp.dps = 90
TOL = mpfr(2) ** -(256 - 76)


def to_mp(z):
    return mpmath.mpc(str(z.real), str(z.imag))


def from_mp(w):
    return mpc(mpfr(mpmath.nstr(w.real, 85)), mpfr(mpmath.nstr(w.imag, 85)))


def value(name, z):
    return eval_form(name, z, terms_needed(name, z))[0]


def random_sl2z(rng, bound=10):
    while True:
        a, b, c = (rng.randint(-bound, bound) for _ in range(3))
        if a != 0 and (1 + b * c) % a == 0:
            d = (1 + b * c) // a
            if abs(d) <= bound:
                return Mat2(a, b, c, d)


def test_coefficients_known_integers():
    assert coefficients("Delta", 6) == (1, -24, 252, -1472, 4830, -6048)
    assert coefficients("E4", 4) == (1, 240, 2160, 6720)
    assert coefficients("E6", 3) == (1, -504, -16632)
    assert coefficients("j", 4) == (1, 744, 196884, 21493760)
    assert coefficients("E2", 3) == (1, -24, -72)
    with pytest.raises(KeyError):
        coefficients("nope", 3)


def test_j_at_i_is_1728():
    val, bound = eval_form("j", mpc(0, 1), 200)
    assert bound is not None
    assert abs(val - 1728) < TOL


def test_j_against_mpmath_kleinj():
    z = mpc(mpfr("0.1"), mpfr("1.1"))
    assert abs(value("j", z) - from_mp(1728 * mpmath.kleinj(to_mp(z)))) < TOL * 10 ** 6


def test_e4_vanishes_at_order_three_point():
    rho = mpc(mpfr(-1) / 2, gmpy2.sqrt(mpfr(3)) / 2)
    assert abs(value("E4", rho)) < TOL


def test_lambda_at_i_is_half():
    assert abs(value("lambda", mpc(0, 1)) - mpfr(1) / 2) < TOL


def test_lambda_against_theta_quotient():
    z = mpc(mpfr("0.3"), mpfr("0.9"))
    q = mpmath.exp(mpmath.pi * 1j * to_mp(z))
    oracle = (mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 4
    assert abs(value("lambda", z) - from_mp(oracle)) < TOL


def test_delta_against_euler_product():
    z = mpc(mpfr("-0.2"), mpfr("1.3"))
    q = mpmath.exp(2 * mpmath.pi * 1j * to_mp(z))
    oracle = q * mpmath.qp(q) ** 24
    assert abs(value("Delta", z) - from_mp(oracle)) < TOL * abs(value("Delta", z))


def test_tail_bound_absent_low_in_h():
    val, bound = eval_form("E4", mpc(0, 0.3), 400)
    assert bound is None
    with pytest.raises(NotInUpperHalfPlane):
        eval_form("E4", mpc(0, -1), 10)


def test_form_jet_derivative_matches_mpmath():
    z = mpc(mpfr("0.1"), mpfr("1.2"))
    jet = form_jet("E4", z, 2)
    with mpmath.workdps(90):
        e4 = lambda t: 1 + 240 * mpmath.nsum(  # noqa: E731
            lambda n: n**3 * mpmath.exp(2j * mpmath.pi * n * t) / (1 - mpmath.exp(2j * mpmath.pi * n * t)),
            [1, mpmath.inf])
        d = mpmath.diff(e4, to_mp(z))
    assert abs(jet.coeffs[1] - from_mp(d)) < mpfr(10) ** -60


@pytest.mark.parametrize("name,k", [("E4", 4), ("E6", 6), ("Delta", 12), ("j", 0)])
def test_weight_k_automorphy(name, k):
    rng = random.Random(name)
    for _ in range(4):
        g = random_sl2z(rng)
        z = mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 2))
        gz = mobius_apply(g, z)
        if gz.imag < 0.3:
            continue
        lhs = value(name, gz)
        rhs = (g.c * z + g.d) ** k * value(name, z)
        assert abs(lhs - rhs) <= TOL * max(1, abs(rhs))


def test_e2_is_only_quasimodular():
    z = mpc(mpfr("0.2"), mpfr("1.1"))
    lhs = value("E2", -1 / z)
    correction = 12 * z / (2 * mpc(0, 1) * gmpy2.const_pi())
    assert abs(lhs - z**2 * value("E2", z)) > 1e-3
    assert abs(lhs - z**2 * value("E2", z) - correction) < TOL


@given(st.floats(-1, 1), st.floats(0.8, 2))
def test_lambda_gamma2_invariance(x, y):
    z = mpc(x, y)
    lam = value("lambda", z)
    for g in (GAMMA2_A, GAMMA2_B):
        gz = mobius_apply(g, z)
        if gz.imag < 0.2:
            continue
        assert abs(value("lambda", gz) - lam) < TOL * 10 ** 3


def test_delta_nonvanishing_at_random_points():
    rng = random.Random(3)
    for _ in range(100):
        z = mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 3))
        assert abs(value("Delta", z)) > 0
