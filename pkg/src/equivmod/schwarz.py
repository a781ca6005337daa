"""Schwarzian derivative on jets, its Moebius cocycle, weight-4 automorphy
and Bol's identity as numerical residuals."""

from __future__ import annotations

from gmpy2 import mpfr

from .errors import CriticalPoint, InsufficientJetOrder
from .moebius import Mat2, automorphy_factor, mobius_apply
from .numerics import Jet, big, current_precision
from .sampler import FunctionSampler

__all__ = [
    "bol_residual",
    "bol_sides",
    "compose_with_mobius",
    "mobius_jet",
    "schwarz_cocycle_residual",
    "schwarzian",
    "schwarzian_jet",
    "weight4_automorphy_residual",
]


def schwarzian_jet(f: Jet) -> Jet:
    """Jet of ``S(f) = (f''/f')' - (f''/f')^2 / 2``; loses three orders."""
    if f.order < 3:
        raise InsufficientJetOrder(f"Schwarzian needs a jet of order >= 3, got {f.order}")
    d1 = f.differentiate()
    # f' at rounding-noise level relative to the jet means a critical point
    scale = max(abs(c) for c in f.coeffs[:4])
    if d1.value == 0 or abs(d1.value) <= scale * mpfr(2) ** (-(current_precision() // 2)):
        raise CriticalPoint(f"f' vanishes at {f.base}")
    d2 = d1.differentiate()
    r = d2 / d1.truncate(d2.order)
    dr = r.differentiate()
    return dr - (r.truncate(dr.order) * r.truncate(dr.order)) / 2


def schwarzian(f: FunctionSampler, z, order: int = 4):
    """``S(f)(z)`` from a jet of order ``order`` (at least 3)."""
    return schwarzian_jet(f.jet(big(z), max(order, 3))).value


def mobius_jet(gamma: Mat2, z, order: int) -> Jet:
    t = Jet.variable(big(z), order)
    return (gamma.a * t + gamma.b) / (gamma.c * t + gamma.d)


def compose_with_mobius(f: FunctionSampler, gamma: Mat2, z, order: int) -> Jet:
    """Jet at ``z`` of ``f(gamma z)`` by composing f's jet at ``gamma z``."""
    inner = mobius_jet(gamma, z, order)
    outer = f.jet(inner.value, order)
    return outer.compose(inner)


def schwarz_cocycle_residual(f: FunctionSampler, gamma: Mat2, z, order: int = 4):
    """``|S(f o gamma)(z) - (cz+d)^-4 S(f)(gamma z)|``.

    This is the chain rule for the Schwarzian against a Moebius map
    (``gamma' = (cz+d)^-2`` and ``S(gamma) = 0``).
    """
    z = big(z)
    j = big(automorphy_factor(gamma, z))
    lhs = schwarzian_jet(compose_with_mobius(f, gamma, z, order)).value
    rhs = schwarzian(f, mobius_apply(gamma, z), order) / j**4
    return abs(lhs - rhs)


def weight4_automorphy_residual(f: FunctionSampler, gamma: Mat2, z, order: int = 4):
    """``|S(f)(gamma z) - (cz+d)^4 S(f)(z)|``; small when f is equivariant under gamma."""
    z = big(z)
    j = big(automorphy_factor(gamma, z))
    return abs(schwarzian(f, mobius_apply(gamma, z), order) - j**4 * schwarzian(f, z, order))


def bol_sides(F: FunctionSampler, r: int, gamma: Mat2, z, strict: bool = True):
    """Both sides of ``(F|_{-r} gamma)^{(r+1)}(z) = F^{(r+1)}|_{r+2} gamma (z)``."""
    if r < 0:
        raise ValueError("r must be a non-negative integer")
    if strict and gamma.det() != 1:
        raise ValueError("Bol's identity is stated for det-1 matrices; pass strict=False to explore")
    z = big(z)
    n = r + 1
    j = big(automorphy_factor(gamma, z))
    t = Jet.variable(z, n)
    factor = (gamma.c * t + gamma.d).integer_pow(r)
    lhs_jet = (factor * compose_with_mobius(F, gamma, z, n)).differentiate(n)
    lhs = lhs_jet.value
    w = mobius_apply(gamma, z)
    Fw = F.jet(w, n)
    if Fw.order < n:
        raise InsufficientJetOrder(f"sampler returned order {Fw.order}, need {n}")
    rhs = Fw.derivative_at_base(n) / j ** (r + 2)
    return lhs, rhs


def bol_residual(F: FunctionSampler, r: int, gamma: Mat2, z, strict: bool = True):
    lhs, rhs = bol_sides(F, r, gamma, z, strict)
    return abs(lhs - rhs)
