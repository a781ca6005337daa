import random

import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from equivmod.equivariant import (
    EquivariantCandidate,
    VmfCandidate,
    equivariance_residual,
    ratio_of_vmf,
    reconstruct,
    resolve_element,
    vmf_residual,
    weight_shift,
)
from equivmod.errors import (
    ConstantCandidate,
    CriticalPoint,
    DegenerateScalar,
    DegenerateVmf,
    UnknownGenerator,
)
from equivmod.moebius import GAMMA2_A, GAMMA2_B, GroupWord, Mat2, Rep, chordal_distance, projective_distance
from equivmod.qforms import form_sampler
from equivmod.sampler import (
    FunctionSampler,
    constant_sampler,
    from_jet_function,
    mobius_sampler,
    vector_sampler,
)

DEFINING = Rep(("A", "B"), {"A": GAMMA2_A, "B": GAMMA2_B}, "gamma2")
TWIST = Mat2(2, 1, 1, 1)
TOL = mpfr(2) ** -(256 - 116)
TOL_DECK = mpfr(2) ** -(256 - 106)
IDENT = from_jet_function(lambda t: t, name="z")


def probes(n, seed=1):
    rng = random.Random(seed)
    return [mpc(rng.uniform(-1, 1), rng.uniform(0.8, 2)) for _ in range(n)]


def twisted_rep():
    return DEFINING.with_images({k: TWIST @ v @ TWIST.inverse() for k, v in DEFINING.images.items()})


def test_trivial_candidate_is_exactly_equivariant():
    cand = EquivariantCandidate(IDENT, DEFINING)
    for z in probes(5):
        for g in ("A", "B", "A B^-1", GAMMA2_A @ GAMMA2_B @ GAMMA2_A):
            assert equivariance_residual(cand, g, z) == 0


def test_corrupted_representation_breaks_equivariance(cover, legendre_pullback):
    bad = cover.rep.with_images({"A": Mat2.identity().to_big(), "B": cover.rep.images["B"]})
    h = EquivariantCandidate(legendre_pullback.ratio_sampler(), bad)
    assert equivariance_residual(h, "A", mpc(mpfr("0.1"), mpfr("1.3"))) > 1e-3


def test_unknown_generator():
    cand = EquivariantCandidate(IDENT, DEFINING)
    with pytest.raises(UnknownGenerator):
        equivariance_residual(cand, GroupWord((("C", 1),)), mpc(0, 1))


def test_resolve_element_sign_for_odd_weight():
    minus = Mat2(-1, 0, 0, -1)
    _, rho_even = resolve_element(DEFINING, minus, 0)
    _, rho_odd = resolve_element(DEFINING, minus, -1)
    assert rho_even == Mat2.identity()
    assert rho_odd == -Mat2.identity()


def test_vmf_identity_is_exact():
    F = VmfCandidate(vector_sampler(IDENT, constant_sampler(1)), -1, DEFINING)
    assert vmf_residual(F, Mat2.identity(), mpc(0.3, 1)) == 0
    assert vmf_residual(F, "1", mpc(0.3, 1)) == 0


def test_pair_z_one_is_weight_minus_one():
    F = VmfCandidate(vector_sampler(IDENT, constant_sampler(1)), -1, DEFINING)
    for z in probes(4):
        for g in ("A", "B", GAMMA2_A @ GAMMA2_B.inverse()):
            assert vmf_residual(F, g, z) < mpfr(2) ** -240


def test_vmf_candidate_must_be_two_dimensional():
    with pytest.raises(ValueError):
        VmfCandidate(IDENT, 0, DEFINING)


def test_legendre_pair_weight_zero(cover, legendre_pullback):
    F = VmfCandidate(legendre_pullback.vector_sampler(), 0, cover.rep)
    assert vmf_residual(F, "A", mpc(mpfr("0.1"), mpfr("1.3"))) < TOL_DECK


def test_ratio_collapses_to_z():
    f2 = from_jet_function(lambda t: t.exp() + 3)
    F = VmfCandidate(FunctionSampler(lambda z, n: (IDENT.jet(z, n) * f2.jet(z, n), f2.jet(z, n)), dim=2),
                     -1, DEFINING)
    h = ratio_of_vmf(F)
    for z in probes(5):
        assert chordal_distance(h.h(z), z) < mpfr(2) ** -240
        assert equivariance_residual(h, "A", z) < mpfr(2) ** -240


def test_ratio_of_equal_components_is_constant():
    f = from_jet_function(lambda t: t.exp())
    h = ratio_of_vmf(VmfCandidate(vector_sampler(f, f), 0, DEFINING))
    assert all(h.h(z) == 1 for z in probes(3))


def test_ratio_degenerate():
    with pytest.raises(DegenerateVmf):
        ratio_of_vmf(VmfCandidate(vector_sampler(IDENT, constant_sampler(0)), 0, DEFINING))


def test_weight_shift_by_constant_one_is_identity():
    F = VmfCandidate(vector_sampler(IDENT, constant_sampler(1)), -1, DEFINING)
    shifted = weight_shift(F, constant_sampler(1), 0)
    assert shifted.weight == -1
    for z in probes(3):
        assert shifted.F(z) == F.F(z)
    with pytest.raises(DegenerateScalar):
        weight_shift(F, constant_sampler(0), 4)


def test_weight_shift_by_delta(cover, legendre_pullback):
    F = VmfCandidate(legendre_pullback.vector_sampler(), 0, cover.rep)
    shifted = weight_shift(F, form_sampler("Delta"), 12)
    z = mpc(mpfr("-0.2"), mpfr("1.2"))
    assert shifted.weight == 12
    assert vmf_residual(shifted, "B", z) < TOL_DECK
    assert chordal_distance(ratio_of_vmf(shifted).h(z), ratio_of_vmf(F).h(z)) < mpfr(2) ** -200


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_vmf_ratio_is_equivariant(seed):
    # for F = (a z + b, c z + d) with weight -1 under a conjugated representation
    rng = random.Random(seed)
    m = Mat2(*(mpc(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(4)))
    if abs(m.det()) < 0.1:
        return
    rep = DEFINING.with_images({k: m @ v.to_big() @ m.inverse() for k, v in DEFINING.images.items()})
    F = VmfCandidate(FunctionSampler(lambda z, n: (m.a * IDENT.jet(z, n) + m.b, m.c * IDENT.jet(z, n) + m.d),
                                     dim=2), -1, rep)
    z = mpc(rng.uniform(-1, 1), rng.uniform(0.8, 2))
    for g in ("A", "B"):
        tol = mpfr(2) ** -(256 - 40) * max(1, max(abs(x) for x in m.entries())) ** 4
        assert vmf_residual(F, g, z) < tol
        assert equivariance_residual(ratio_of_vmf(F), g, z) < 10 * tol


# reconstruction ---------------------------------------------------------------


def test_reconstruct_trivial():
    pts = probes(23, 2)
    res = reconstruct(EquivariantCandidate(IDENT, DEFINING), mpc(0, 1), pts, tolerance=TOL)
    assert res.passed
    # canonical identity data at i gives f1/f2 = 1/(z - i); the recovered pair is proportional to (z, 1)
    F = res.F
    for z in pts:
        f1, f2 = F(z)
        assert chordal_distance(f1 / f2, z) < TOL
    vmf = res.vmf()
    assert vmf.weight == -1
    for z in pts:
        if z in res.fit_probes:
            continue
        for g in ("A", "B"):
            assert vmf_residual(vmf, g, z) < TOL


def test_reconstruct_twisted_recovers_twist():
    pts = probes(23, 3)
    base = mpc(0, 1)
    triv = reconstruct(EquivariantCandidate(IDENT, DEFINING), base, pts, tolerance=TOL)
    tw = reconstruct(EquivariantCandidate(mobius_sampler(TWIST), twisted_rep()), base, pts, tolerance=TOL)
    assert projective_distance(TWIST.inverse().to_big(), triv.alpha.inverse() @ tw.alpha) < TOL
    for name in ("A", "B"):
        assert projective_distance(twisted_rep().images[name].to_big(), tw.rho_recovered.images[name]) < TOL


def test_reconstruct_legendre(cover, legendre_pullback):
    cand = EquivariantCandidate(legendre_pullback.ratio_sampler(), cover.rep, "legendre ratio")
    pts = probes(8, 4)
    res = reconstruct(cand, mpc(0, 1), pts, tolerance=TOL)
    assert res.passed
    h = cand.h
    for z in pts:
        f1, f2 = res.F(z)
        assert chordal_distance(f1 / f2, h(z)) < TOL


def test_reconstruct_rejects_constant_candidate():
    with pytest.raises(ConstantCandidate):
        reconstruct(EquivariantCandidate(constant_sampler(2), DEFINING), mpc(0, 1), probes(5))


def test_reconstruct_rejects_critical_base():
    sq = from_jet_function(lambda t: (t - mpc(0, 1)) ** 2)
    with pytest.raises(CriticalPoint):
        reconstruct(EquivariantCandidate(sq, DEFINING), mpc(0, 1), probes(5))


def test_reconstruct_rejects_declared_poles():
    with pytest.raises(ValueError):
        reconstruct(EquivariantCandidate(IDENT, DEFINING, g_singular_points=(mpc(0, 2),)), mpc(0, 1), probes(5))
