"""Equivariance and vector-valued modular form residuals, the ratio map
``F -> f1/f2``, weight shifting by a scalar form, and the reconstruction of a
vector-valued form of weight -1 from an equivariant function.

Group elements may be given as words in the representation's generators or
(for Gamma(2) representations) as integer matrices.  All comparisons of
Moebius-valued quantities use the chordal metric, and representations are
compared projectively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpc, mpfr

from .errors import (
    ConjugationMismatch,
    ConstantCandidate,
    CriticalPoint,
    DegenerateScalar,
    DegenerateVmf,
    FitFailure,
)
from .moebius import (
    INF,
    GroupWord,
    Mat2,
    Rep,
    automorphy_factor,
    chordal_distance,
    gamma2_word,
    mobius_apply,
    mobius_fit,
    projective_distance,
    rep_extend,
)
from .numerics import Jet, big
from .ode import ContinuedSystem, FundamentalSystem, OdeCoefficients
from .sampler import FunctionSampler
from .schwarz import schwarzian_jet

__all__ = [
    "EquivariantCandidate",
    "ReconstructionResult",
    "VmfCandidate",
    "equivariance_residual",
    "ratio_of_vmf",
    "reconstruct",
    "resolve_element",
    "schwarzian_coefficient",
    "vmf_residual",
    "weight_shift",
]


@dataclass(frozen=True)
class EquivariantCandidate:
    """Candidate ``h`` with ``h(gamma z) = rho(gamma) h(z)``.

    ``g_singular_points`` declares points of H where ``S(h)`` has poles
    (critical points of h); reconstruction refuses to run when any are given.
    """

    h: FunctionSampler
    group: Rep
    name: str = ""
    g_singular_points: tuple = ()


@dataclass(frozen=True)
class VmfCandidate:
    F: FunctionSampler
    weight: int
    rep: Rep
    name: str = ""

    def __post_init__(self):
        if self.F.dim != 2:
            raise ValueError("a vector-valued candidate needs a 2-dimensional sampler")


def resolve_element(rep: Rep, gamma, weight: int = 0):
    """``(matrix acting on H, rho(gamma))`` for a word, word string or matrix.

    For matrices the sign left over by the Gamma(2) reduction contributes
    ``sign^weight`` to ``rho``.
    """
    if isinstance(gamma, Mat2):
        if rep.group_kind == "gamma2":
            word, sign = gamma2_word(gamma)
            rho = rep_extend(rep, word)
            if sign == -1 and weight % 2:
                rho = -rho
            return gamma, rho
        raise ValueError("matrix input needs a gamma2 representation")
    if isinstance(gamma, str):
        gamma = GroupWord.parse(gamma, rep.generator_names)
    return rep.element(gamma), rep_extend(rep, gamma)


def equivariance_residual(cand: EquivariantCandidate, gamma, z):
    """Chordal distance between ``h(gamma z)`` and ``rho(gamma) h(z)``.

    A scalar ``rho(gamma)`` acts as the identity, as every Moebius action does.
    """
    z = big(z)
    acting, rho = resolve_element(cand.group, gamma)
    lhs = cand.h(mobius_apply(acting, z))
    rhs = mobius_apply(rho, cand.h(z))
    return chordal_distance(lhs, rhs)


def vmf_residual(cand: VmfCandidate, gamma, z):
    """Max-norm of ``(F|_k gamma)(z) - rho(gamma) F(z)``."""
    z = big(z)
    acting, rho = resolve_element(cand.rep, gamma, cand.weight)
    j = big(automorphy_factor(acting, z))
    Fgz = cand.F(mobius_apply(acting, z))
    factor = j ** (-cand.weight)
    lhs = [factor * v for v in Fgz]
    rhs = rho.apply_vec(cand.F(z))
    return max(abs(a - b) for a, b in zip(lhs, rhs))


def ratio_of_vmf(cand: VmfCandidate, probes=(mpc(0, 1),)) -> EquivariantCandidate:
    """``h = f1/f2`` with the same representation (INF where f2 vanishes)."""
    if all(cand.F(p)[1] == 0 for p in probes):
        raise DegenerateVmf("second component vanishes at every probe")
    F = cand.F

    def jet_fn(z, order):
        f1, f2 = F.jet(z, order)
        if f2.value == 0:
            raise ZeroDivisionError("f2 vanishes; the ratio has a pole here")
        return f1 / f2

    def value_fn(z):
        f1, f2 = F(z)
        return INF if f2 == 0 else f1 / f2

    sampler = _PoleAwareSampler(jet_fn, value_fn, name=f"ratio of {cand.name or F.name}")
    return EquivariantCandidate(sampler, cand.rep, sampler.name)


class _PoleAwareSampler(FunctionSampler):
    """Scalar sampler whose plain values are INF at poles instead of failing."""

    def __init__(self, jet_fn, value_fn, name=""):
        super().__init__(jet_fn, name=name)
        self._value_fn = value_fn

    def __call__(self, z):
        return self._value_fn(big(z))


def weight_shift(cand: VmfCandidate, f: FunctionSampler, f_weight: int, probes=(mpc(0, 1),)) -> VmfCandidate:
    """``(f f1, f f2)`` with weight ``cand.weight + f_weight``."""
    if all(f(p) == 0 for p in probes):
        raise DegenerateScalar("the scalar form vanishes at every probe")
    F = cand.F

    def jet_fn(z, order):
        s = f.jet(z, order)
        a, b = F.jet(z, order)
        return s * a, s * b

    shifted = FunctionSampler(jet_fn, dim=2, name=f"{f.name}*{F.name}")
    return VmfCandidate(shifted, cand.weight + f_weight, cand.rep, shifted.name)


# ---------------------------------------------------------------------------
# reconstruction


def schwarzian_coefficient(h: FunctionSampler) -> FunctionSampler:
    """Sampler for ``g = S(h)/2``; near poles of h it differentiates ``1/h`` instead."""

    def g_jet(z, order):
        hj = h.jet(z, order + 3)
        if abs(hj.value) > 1:
            hj = hj.reciprocal()
        return schwarzian_jet(hj) / 2

    return FunctionSampler(g_jet, name=f"S({h.name})/2", domain_hint="upper half-plane")


@dataclass
class ReconstructionResult:
    base: object
    g_at_base: Jet
    system: FundamentalSystem
    alpha: Mat2
    rho_measured: dict  # generator -> rho_1(gamma) in the canonical basis
    rho_recovered: Rep  # alpha^-1 rho_1 alpha
    F: FunctionSampler
    fit_probes: tuple
    checks: list = field(default_factory=list)

    def vmf(self) -> VmfCandidate:
        return VmfCandidate(self.F, -1, self.rho_recovered, "reconstructed")

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _slashed_row(acting: Mat2, base, sys_at_image: FundamentalSystem):
    """Rows ``(phi_i(base), phi_i'(base))`` of ``phi = f|_{-1} gamma`` from the system at gamma base."""
    j = big(automorphy_factor(acting, base))
    c = big(acting.c)
    v = sys_at_image.values
    rows = []
    for f, fp in ((v.a, v.c), (v.b, v.d)):
        rows.append((j * f, c * f + fp / j))
    return Mat2(rows[0][0], rows[0][1], rows[1][0], rows[1][1])


def reconstruct(
    cand: EquivariantCandidate,
    base,
    probes,
    *,
    tolerance=None,
    safety=0.25,
    generators=None,
) -> ReconstructionResult:
    """Weight -1 vector-valued form whose ratio is ``cand.h``.

    Steps: ``g = S(h)/2``; the solutions of ``y'' + g y = 0`` with identity
    data at ``base``; ``alpha`` with ``f1/f2 = alpha h`` fitted on the three
    probes where ``|h'|`` is largest and checked on the others;
    ``F = alpha^-1 (f1, f2)``; ``rho_1(gamma)`` from ``f|_{-1} gamma`` at the
    base and its comparison with ``rho`` after conjugating by ``alpha``.
    """
    base = big(base)
    probes = [big(p) for p in probes]
    if len(probes) < 3:
        raise ValueError("need at least three probes to fit alpha")
    if cand.g_singular_points:
        raise ValueError("reconstruction needs S(h) analytic on H; declared poles are not supported")
    tol = mpfr(2) ** -140 if tolerance is None else mpfr(tolerance)
    h = cand.h
    checks = []

    values = [h(p) for p in probes]
    if all(chordal_distance(v, values[0]) == 0 for v in values):
        raise ConstantCandidate("h takes the same value at every probe")
    if h.jet(base, 1).coeffs[1] == 0:
        raise CriticalPoint(f"h' vanishes at the base point {base}")

    g = schwarzian_coefficient(h)
    coeffs = OdeCoefficients(g, None, (), "upper-half-plane", name="reconstruction")
    system = ContinuedSystem(coeffs, FundamentalSystem.identity(base), safety=safety)

    def ratio_at(z):
        f1, f2 = system.at(z).functions
        return INF if f2 == 0 else f1 / f2

    # fit alpha on the best-conditioned probes
    slopes = []
    for p in probes:
        hj = h.jet(p, 1)
        if hj.coeffs[1] == 0:
            raise CriticalPoint(f"h' vanishes at probe {p}")
        slopes.append(abs(hj.coeffs[1]))
    order = sorted(range(len(probes)), key=lambda i: -slopes[i])
    fit_idx = order[:3]
    try:
        alpha = mobius_fit([(values[i], ratio_at(probes[i])) for i in fit_idx])
    except ValueError as exc:
        raise FitFailure(str(exc)) from exc
    held_out = [i for i in range(len(probes)) if i not in fit_idx]
    fit_res = max(
        (chordal_distance(ratio_at(probes[i]), mobius_apply(alpha, values[i])) for i in held_out),
        default=mpfr(0),
    )
    checks.append(_check("ratio_fit", fit_res, tol, held_out=len(held_out)))
    if not fit_res <= tol:
        raise FitFailure(f"held-out ratio residual {float(fit_res):.3g} exceeds tolerance")

    alpha_inv = alpha.inverse()
    sys_sampler = system.sampler()

    def F_jet(z, order):
        f1, f2 = sys_sampler.jet(z, order)
        return (alpha_inv.a * f1 + alpha_inv.b * f2, alpha_inv.c * f1 + alpha_inv.d * f2)

    F = FunctionSampler(F_jet, dim=2, name="reconstructed F")

    rep = cand.group
    gens = generators or rep.generator_names
    measured, recovered = {}, {}
    worst = mpfr(0)
    for name in gens:
        acting, rho = resolve_element(rep, GroupWord(((name, 1),)))
        image = mobius_apply(acting, base)
        rho1 = _slashed_row(acting, base, system.at(image))
        measured[name] = rho1
        conj = alpha_inv @ rho1 @ alpha
        recovered[name] = conj
        d = projective_distance(rho.to_big(), conj)
        worst = max(worst, d)
        checks.append(_check(f"conjugation[{name}]", d, tol))
    rho_rec = Rep(tuple(gens), recovered, rep.group_kind, dict(rep.domain))
    result = ReconstructionResult(
        base, g.jet(base, 4), system.at(base), alpha, measured, rho_rec, F,
        tuple(probes[i] for i in fit_idx), checks,
    )
    if not worst <= tol:
        raise ConjugationMismatch(
            f"alpha^-1 rho_1 alpha differs from rho by {float(worst):.3g}", measured=measured
        )
    return result


def _check(name, residual, tol, **inputs):
    return {"name": name, "inputs": inputs, "residual": residual, "tolerance": tol,
            "pass": bool(residual <= tol)}
