"""Black-box analytic functions queried through jets.

Every function the package quantifies over (h, f, F, P, Q, g, ...) is a
:class:`FunctionSampler`: ``sampler.jet(z, order)`` returns the Taylor jet at
``z`` (a tuple of jets for vector-valued samplers) and ``sampler(z)`` the value.
"""

from __future__ import annotations

from gmpy2 import mpc

from .errors import SamplerFailure
from .moebius import INF, Mat2
from .numerics import Jet, big

__all__ = [
    "FunctionSampler",
    "from_jet_function",
    "constant_sampler",
    "polynomial_sampler",
    "mobius_sampler",
    "RationalSampler",
    "vector_sampler",
]


class FunctionSampler:
    """Analytic function given by ``jet_fn(z, order) -> Jet | tuple[Jet, ...]``."""

    def __init__(self, jet_fn, *, dim: int = 1, domain_hint: str = "", name: str = ""):
        self._jet_fn = jet_fn
        self.dim = dim
        self.domain_hint = domain_hint
        self.name = name or getattr(jet_fn, "__name__", "sampler")

    def jet(self, z, order: int):
        try:
            return self._jet_fn(big(z), order)
        except (ArithmeticError, ValueError) as exc:
            raise SamplerFailure(f"{self.name}: failed at {z}: {exc}") from exc

    def __call__(self, z):
        j = self.jet(z, 0)
        if self.dim == 1:
            return j.value
        return tuple(c.value for c in j)

    def __repr__(self):
        return f"<FunctionSampler {self.name}>"


def from_jet_function(fn, *, name="", domain_hint="", dim=1) -> FunctionSampler:
    """Sampler from a function acting on jets, e.g. ``lambda t: t.exp()``."""

    def jet_fn(z, order):
        return fn(Jet.variable(z, order))

    return FunctionSampler(jet_fn, dim=dim, name=name or getattr(fn, "__name__", ""),
                           domain_hint=domain_hint)


def constant_sampler(c, name="constant") -> FunctionSampler:
    return FunctionSampler(lambda z, order: Jet.constant(big(c), z, order), name=name)


def polynomial_sampler(coeffs, name="polynomial") -> FunctionSampler:
    """``sum coeffs[k] z^k`` (coefficients in increasing degree)."""
    coeffs = list(coeffs)

    def fn(t):
        acc = Jet.constant(coeffs[-1], t.base, t.order) if coeffs else Jet.constant(0, t.base, t.order)
        for c in reversed(coeffs[:-1]):
            acc = acc * t + c
        return acc

    return from_jet_function(fn, name=name)


def mobius_sampler(m: Mat2, name="mobius") -> FunctionSampler:
    def fn(t):
        return (m.a * t + m.b) / (m.c * t + m.d)

    return from_jet_function(fn, name=name, domain_hint="pole at -d/c")


def vector_sampler(*components: FunctionSampler, name="vector") -> FunctionSampler:
    def jet_fn(z, order):
        return tuple(c.jet(z, order) for c in components)

    return FunctionSampler(jet_fn, dim=len(components), name=name)


class RationalSampler(FunctionSampler):
    """Rational function in partial-fraction form.

    ``poles`` maps ``(a, m)`` to the coefficient of ``(z - a)^(-m)``;
    ``poly`` holds polynomial coefficients in increasing degree.  Jets cost
    O(order) per term.
    """

    def __init__(self, poles=None, poly=(), name="rational"):
        self.poles = {(big(a), int(m)): big(c) for (a, m), c in (poles or {}).items()}
        self.poly = [big(c) for c in poly]
        super().__init__(self._jet, name=name,
                         domain_hint=f"poles at {sorted({str(a) for a, _ in self.poles})}")

    @property
    def singular_points(self):
        return tuple(dict.fromkeys(a for a, _ in self.poles))

    def _jet(self, z, order):
        out = [mpc(0)] * (order + 1)
        for (a, m), c in self.poles.items():
            delta = z - a
            if delta == 0:
                raise ZeroDivisionError(f"pole at {a}")
            inv = 1 / delta
            term = c * inv**m
            for k in range(order + 1):
                out[k] += term
                term = term * (-(m + k)) / (k + 1) * inv
        # polynomial part re-expanded at z via Horner on jets
        if self.poly:
            t = Jet.variable(z, order)
            acc = Jet.constant(self.poly[-1], z, order)
            for c in reversed(self.poly[:-1]):
                acc = acc * t + c
            out = [o + p for o, p in zip(out, acc.coeffs)]
        return Jet(z, out)

    def value(self, z):
        if z is INF:
            return INF
        return self._jet(big(z), 0).value
