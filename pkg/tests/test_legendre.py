import random

import gmpy2
import mpmath
import pytest
from gmpy2 import mpc, mpfr, mpq

from equivmod.equivariant import EquivariantCandidate, equivariance_residual
from equivmod.errors import CorrespondenceUnresolved, SeriesDivergence, SingularPoint
from equivmod.legendre import (
    PuncturedPlaneSpec,
    covering_data,
    deck_check,
    homotopy_word,
    hypergeometric_half,
    lambda_image_path,
    legendre_fundamental,
    loop_monodromy,
    loop_monodromy_rep,
)
from equivmod.moebius import GAMMA2_A, GAMMA2_B, Mat2, mobius_apply
from equivmod.numerics import working_precision
from equivmod.ode import PathPolyline, wronskian
from equivmod.qforms import eval_form, terms_needed
from equivmod.schwarz import schwarzian

TOL_MONO = mpfr(2) ** -(256 - 106)
TOL_DRIFT = mpfr(2) ** -(256 - 40)
TOL_DECK = mpfr(2) ** -(256 - 106)


def lam(z):
    return eval_form("lambda", z, terms_needed("lambda", z))[0]


def test_hypergeometric_series_against_mpmath():
    with mpmath.workdps(90):
        oracle = mpmath.nstr(mpmath.hyp2f1(0.5, 0.5, 1, mpmath.mpf(1) / 2), 85)
        doracle = mpmath.nstr(mpmath.diff(lambda t: mpmath.hyp2f1(0.5, 0.5, 1, t), mpmath.mpf(1) / 2), 85)
    f, fp = hypergeometric_half(mpq(1, 2))
    assert abs(f - mpfr(oracle)) < mpfr(2) ** -240
    assert abs(fp - mpfr(doracle)) < mpfr(10) ** -70
    with pytest.raises(SeriesDivergence):
        hypergeometric_half(mpq(9, 10))


def test_fundamental_at_half():
    sys = legendre_fundamental(mpq(1, 2))
    assert abs(wronskian(sys) - 1) < mpfr(2) ** -250
    normal = legendre_fundamental(mpq(1, 2), "normal")
    assert abs(wronskian(normal) - 1) < mpfr(2) ** -250
    # the normal-form factor 2 sqrt(w(1-w)) equals 1 at w = 1/2
    assert abs(normal.values.a - sys.values.a) < mpfr(2) ** -250


def test_first_column_at_two_precisions():
    w = mpc(mpfr("0.4"), mpfr("0.1"))
    with working_precision(192):
        low = legendre_fundamental(w, "normal").values.a
    high = legendre_fundamental(w, "normal").values.a
    with mpmath.workdps(90):
        wm = mpmath.mpc("0.4", "0.1")
        oracle = 2 * mpmath.sqrt(wm * (1 - wm)) * mpmath.hyp2f1(0.5, 0.5, 1, wm)
        oracle = mpc(mpfr(mpmath.nstr(oracle.real, 85)), mpfr(mpmath.nstr(oracle.imag, 85)))
    assert abs(high - oracle) < mpfr(10) ** -70
    assert abs(low - high) < mpfr(2) ** -150


def test_fundamental_errors():
    with pytest.raises(SingularPoint):
        legendre_fundamental(0)
    with pytest.raises(SeriesDivergence):
        legendre_fundamental(mpq(5, 2))


def test_continued_fundamental_far_from_half_has_unit_wronskian_in_normal_gauge():
    sys = legendre_fundamental(mpc(1.5, 1), "normal")
    assert abs(wronskian(sys) - 1) < TOL_DRIFT


def test_loop_representation():
    rep = loop_monodromy_rep(PuncturedPlaneSpec())
    m0, m1 = rep.images["l0"], rep.images["l1"]
    for m in (m0, m1):
        assert abs(m.det() - 1) < TOL_DRIFT
        assert abs(m.trace() - 2) < TOL_MONO
        assert max(abs(x - y) for x, y in zip(m.entries(), Mat2.identity().entries())) > 0.1
    assert abs((m0 @ m1).trace() + 2) < TOL_MONO
    comm = m0 @ m1 @ m0.inverse() @ m1.inverse()
    assert abs(comm.trace() - 2) > 0.1


def test_known_generator_matrices():
    # M0 = [[1, 0], [i pi/2, 1]] in the hypergeometric basis at 1/2
    m0 = loop_monodromy(PuncturedPlaneSpec()).matrices["l0"]
    target = Mat2(1, 0, mpc(0, 1) * gmpy2.const_pi() / 2, 1)
    assert max(abs(a - b) for a, b in zip(m0.entries(), target.entries())) < TOL_MONO


def test_normal_gauge_flips_generator_signs():
    eq = loop_monodromy(PuncturedPlaneSpec(), "equation").matrices
    nf = loop_monodromy(PuncturedPlaneSpec(), "normal").matrices
    for name in ("l0", "l1"):
        assert abs(nf[name].trace() + 2) < TOL_MONO
        assert max(abs(a + b) for a, b in zip(nf[name].entries(), eq[name].entries())) < TOL_MONO


def test_homotopy_words_of_generator_loops():
    spec = PuncturedPlaneSpec()
    assert str(homotopy_word(spec.loop_ell0)) == "l0"
    assert str(homotopy_word(spec.loop_ell1)) == "l1"
    assert str(homotopy_word(spec.loop_ell0.reversed())) == "l0^-1"
    contractible = PathPolyline((mpq(1, 2), mpc(0.5, 0.3), mpq(1, 4), mpq(1, 2)), closed=True)
    assert len(homotopy_word(contractible)) == 0
    with pytest.raises(CorrespondenceUnresolved):
        homotopy_word(PathPolyline.segment(mpq(1, 2), mpq(1, 4)))


def test_lambda_image_path_endpoints_and_margin():
    za, zb = mpc(0, 1), mpc(mpfr("0.2"), mpfr("1.1"))
    path = lambda_image_path(za, zb)
    assert abs(path.start - lam(za)) < mpfr(2) ** -200
    assert abs(path.end - lam(zb)) < mpfr(2) ** -200
    assert path.margin((0, 1)) > 0


def test_correspondence(cover):
    assert {k: str(v) for k, v in cover.correspondence.items()} == {"A": "l0", "B": "l1^-1"}


def test_correspondence_needs_matching_basepoint():
    with pytest.raises(CorrespondenceUnresolved):
        covering_data(PuncturedPlaneSpec(basepoint=mpq(1, 3)))


def test_covering_property():
    rng = random.Random(5)
    for _ in range(20):
        z = mpc(rng.uniform(-1, 1), rng.uniform(0.8, 2))
        for g in (GAMMA2_A, GAMMA2_B):
            gz = mobius_apply(g, z)
            assert abs(lam(gz) - lam(z)) < mpfr(2) ** -(256 - 76) * 10 ** 3


def test_deck_identity_is_exact(cover):
    r = deck_check(cover, Mat2.identity(), mpc(0.2, 1.1))
    assert r.vector_residual == 0 and r.ratio_residual == 0


@pytest.mark.parametrize(
    "gamma,z",
    [
        (GAMMA2_A, mpc(mpfr("0.2"), mpfr("1.1"))),
        (GAMMA2_A @ GAMMA2_B.inverse(), mpc(mpfr("-0.3"), mpfr("1.4"))),
    ],
)
def test_deck_examples(cover, gamma, z):
    r = deck_check(cover, gamma, z)
    assert r.vector_residual < mpfr(2) ** -(256 - 60)
    assert r.ratio_residual < mpfr(2) ** -(256 - 60)


def test_deck_random_words(cover):
    rng = random.Random(9)
    gens = [GAMMA2_A, GAMMA2_B, GAMMA2_A.inverse(), GAMMA2_B.inverse()]
    for _ in range(4):
        g = Mat2.identity()
        for _ in range(rng.randint(1, 6)):
            g = g @ rng.choice(gens)
        z = mpc(rng.uniform(-1, 1), rng.uniform(0.8, 2))
        r = deck_check(cover, g, z)
        assert r.vector_residual < TOL_DECK


def test_pullback_ratio_is_equivariant(cover, legendre_pullback):
    h = EquivariantCandidate(legendre_pullback.ratio_sampler(), cover.rep, "legendre ratio")
    for z in (mpc(mpfr("0.1"), mpfr("1.3")), mpc(mpfr("-0.6"), mpfr("0.9"))):
        for g in ("A", "B"):
            assert equivariance_residual(h, g, z) < TOL_DECK


def test_pullback_ratio_is_a_moebius_function_of_tau(legendre_pullback):
    # the pulled-back ratio equals -4i/(pi tau), a Moebius function of tau, so its Schwarzian is 0
    h = legendre_pullback.ratio_sampler()
    for z in (mpc(mpfr("0.1"), mpfr("1.3")), mpc(mpfr("-0.4"), mpfr("1.0"))):
        assert abs(schwarzian(h, z, 6)) < mpfr(2) ** -(256 - 76)
    z = mpc(mpfr("0.3"), mpfr("1.2"))
    assert abs(h(z) * z + 4 * mpc(0, 1) / gmpy2.const_pi()) < mpfr(2) ** -(256 - 76)
