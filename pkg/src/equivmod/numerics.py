"""Arbitrary-precision complex scalars and truncated Taylor jets.

Scalars are ``gmpy2.mpc`` values (MPC/MPFR underneath).  Working precision is
the thread-local gmpy2 context; :func:`working_precision` scopes it.  Exact
rational jets (``gmpy2.mpq`` coefficients) are supported for low-order tests
where every operation stays inside the rationals.

A :class:`Jet` stores ``c_0, ..., c_N`` for ``sum c_k (z - base)^k`` modulo
``(z - base)^(N+1)``.  Jets are immutable; operations never extend the order.
"""

from __future__ import annotations

import contextlib
import math
from fractions import Fraction
from operator import mul

import gmpy2
from gmpy2 import mpc, mpfr, mpq

from .errors import (
    BaseMismatch,
    BranchCutViolation,
    DivisionByZeroConstantTerm,
    OrderUnderflow,
)

DEFAULT_PRECISION = 256
DEFAULT_JET_ORDER = 8
MIN_PRECISION = 64

__all__ = [
    "DEFAULT_PRECISION",
    "DEFAULT_JET_ORDER",
    "Jet",
    "big",
    "complex_from_json",
    "complex_to_json",
    "current_precision",
    "format_real",
    "jet_arith",
    "jet_elementary",
    "parse_complex",
    "pi",
    "working_precision",
]


def current_precision() -> int:
    return gmpy2.get_context().precision


def working_precision(bits: int):
    """Context manager setting the significand width of new results."""
    bits = int(bits)
    if bits < MIN_PRECISION:
        raise ValueError(f"precision_bits must be >= {MIN_PRECISION}, got {bits}")
    if gmpy2.get_context().precision == bits:
        return contextlib.nullcontext()
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def _at(bits):
    # internal variant: None means exact arithmetic, no context switch
    if bits is None or gmpy2.get_context().precision == bits:
        return contextlib.nullcontext()
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def pi():
    return gmpy2.const_pi()


def parse_complex(text: str):
    """Parse ``"0.3+0.9i"``, ``"2"``, ``"-1.5e-3j"``, ``"i"`` into an mpc."""
    s = text.strip().replace(" ", "")
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    if not s:
        raise ValueError("empty complex literal")
    try:
        if s[-1] not in "ij":
            return mpc(mpfr(s), 0)
        body = s[:-1].rstrip("*")
        split = -1
        for k in range(len(body) - 1, 0, -1):
            if body[k] in "+-" and body[k - 1] not in "eE":
                split = k
                break
        re_txt, im_txt = (body[:split], body[split:]) if split > 0 else ("0", body)
        if im_txt in ("", "+"):
            im_txt = "1"
        elif im_txt == "-":
            im_txt = "-1"
        return mpc(mpfr(re_txt), mpfr(im_txt))
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


def big(x):
    """Coerce ints, rationals, floats, complex, strings and gmpy2 numbers to mpc."""
    if isinstance(x, mpc):
        return x
    if isinstance(x, str):
        return parse_complex(x)
    if isinstance(x, Fraction):
        return mpc(mpq(x.numerator, x.denominator))
    if isinstance(x, complex):
        return mpc(x.real, x.imag)
    return mpc(x)


def format_real(x, digits: int | None = None) -> str:
    """Decimal scientific notation of an mpfr with ``digits`` significant digits."""
    if not isinstance(x, mpfr):
        x = mpfr(x)
    if digits is None:
        digits = int(math.ceil(x.precision * math.log10(2))) + 1
    if gmpy2.is_zero(x):
        return "0"
    if not gmpy2.is_finite(x):
        return str(x)
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    mant = mant.rstrip("0") or "0"
    head, tail = mant[0], mant[1:]
    e = exp - 1
    body = head + ("." + tail if tail else "")
    return f"{sign}{body}e{e:+d}" if e else f"{sign}{body}"


def complex_to_json(z, digits: int | None = None) -> dict:
    z = big(z)
    return {
        "re": format_real(z.real, digits),
        "im": format_real(z.imag, digits),
        "precision_bits": int(z.real.precision),
    }


def complex_from_json(obj: dict):
    bits = int(obj.get("precision_bits", current_precision()))
    with working_precision(max(bits, MIN_PRECISION)):
        return mpc(mpfr(obj["re"]), mpfr(obj["im"]))


# ---------------------------------------------------------------------------
# raw truncated power series on coefficient lists (shared with ode/qforms)


def _coerce(x):
    if isinstance(x, (mpc, mpq)):
        return x
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return big(x)


def _is_exact(x) -> bool:
    return isinstance(x, mpq)


def series_mul(a, b, n):
    """First ``n + 1`` coefficients of the product of two series."""
    out = []
    for k in range(n + 1):
        out.append(sum(map(mul, a[: k + 1], b[k::-1])))
    return out


def series_div(a, b, n):
    b0 = b[0]
    if b0 == 0:
        raise DivisionByZeroConstantTerm("divisor jet has zero constant term")
    q = []
    for k in range(n + 1):
        s = a[k] - sum(map(mul, q[:k], b[k:0:-1])) if k else a[0]
        q.append(s / b0)
    return q


def series_deriv(a):
    return [k * a[k] for k in range(1, len(a))]


def series_exp(a, n):
    c0 = a[0]
    if _is_exact(c0) and c0 == 0:
        e0 = mpq(1)
    else:
        e0 = gmpy2.exp(big(c0))
    out = [e0]
    da = [k * a[k] for k in range(n + 1)]
    for k in range(1, n + 1):
        out.append(sum(map(mul, da[1 : k + 1], out[k - 1 :: -1])) / k)
    return out


def _on_cut(c0) -> bool:
    if isinstance(c0, mpq):
        return c0 <= 0
    return c0.imag == 0 and c0.real <= 0


def series_log(a, n):
    c0 = a[0]
    if _on_cut(c0):
        raise BranchCutViolation(f"log: constant term {c0} on the principal branch cut")
    l0 = mpq(0) if (_is_exact(c0) and c0 == 1) else gmpy2.log(big(c0))
    out = [l0]
    # a * b' = a'  =>  k a0 b_k = k a_k - sum_{j=1}^{k-1} j b_j a_{k-j}
    for k in range(1, n + 1):
        s = k * a[k]
        if k > 1:
            s -= sum(j * out[j] * a[k - j] for j in range(1, k))
        out.append(s / (k * c0))
    return out


def _exact_sqrt(q):
    num, den = q.numerator, q.denominator
    if gmpy2.is_square(num) and gmpy2.is_square(den):
        return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))
    return None


def series_sqrt(a, n):
    c0 = a[0]
    if _on_cut(c0):
        raise BranchCutViolation(f"sqrt: constant term {c0} on the principal branch cut")
    r0 = _exact_sqrt(c0) if _is_exact(c0) else None
    if r0 is None:
        r0 = gmpy2.sqrt(big(c0))
    out = [r0]
    two_r0 = 2 * r0
    for k in range(1, n + 1):
        s = a[k] - sum(map(mul, out[1:k], out[k - 1 : 0 : -1]))
        out.append(s / two_r0)
    return out


# ---------------------------------------------------------------------------


def _min_prec(*precs):
    vals = [p for p in precs if p is not None]
    return min(vals) if vals else None


class Jet:
    """Truncated Taylor expansion ``sum_k coeffs[k] (z - base)^k``."""

    __slots__ = ("base", "coeffs", "prec")

    def __init__(self, base, coeffs, prec: int | None = None):
        cs = tuple(_coerce(c) for c in coeffs)
        if not cs:
            raise ValueError("a jet needs at least one coefficient")
        object.__setattr__(self, "base", _coerce(base))
        object.__setattr__(self, "coeffs", cs)
        if prec is None and not all(_is_exact(c) for c in cs):
            prec = current_precision()
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def variable(cls, z, order: int = DEFAULT_JET_ORDER):
        z = _coerce(z)
        cs = [z] + ([1] if order >= 1 else []) + [0] * max(order - 1, 0)
        return cls(z, cs)

    @classmethod
    def constant(cls, c, base, order: int = DEFAULT_JET_ORDER):
        return cls(base, [c] + [0] * order)

    def _new(self, coeffs, prec):
        j = object.__new__(Jet)
        object.__setattr__(j, "base", self.base)
        object.__setattr__(j, "coeffs", tuple(coeffs))
        object.__setattr__(j, "prec", prec)
        return j

    # queries ------------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    def derivative_at_base(self, k: int):
        """k-th derivative at the base point, ``k! c_k``."""
        if k > self.order:
            raise OrderUnderflow(f"derivative {k} exceeds jet order {self.order}")
        return math.factorial(k) * self.coeffs[k]

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:4])
        more = ", ..." if len(self.coeffs) > 4 else ""
        return f"Jet(base={self.base}, order={self.order}, coeffs=[{head}{more}])"

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "Jet"):
        if self.base != other.base:
            raise BaseMismatch(f"jets expanded at {self.base} and {other.base}")
        return min(self.order, other.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderUnderflow(f"cannot extend a jet of order {self.order} to {order}")
        return self._new(self.coeffs[: order + 1], self.prec)

    def __neg__(self):
        return self._new([-c for c in self.coeffs], self.prec)

    def __add__(self, other):
        if isinstance(other, Jet):
            n = self._check(other)
            p = _min_prec(self.prec, other.prec)
            with _at(p):
                return self._new([a + b for a, b in zip(self.coeffs[: n + 1], other.coeffs)], p)
        c = _coerce(other)
        with _at(self.prec):
            return self._new((self.coeffs[0] + c,) + self.coeffs[1:], self.prec)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self + (-other)
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            n = self._check(other)
            p = _min_prec(self.prec, other.prec)
            with _at(p):
                return self._new(series_mul(self.coeffs, other.coeffs, n), p)
        c = _coerce(other)
        with _at(self.prec):
            return self._new([a * c for a in self.coeffs], self.prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            n = self._check(other)
            p = _min_prec(self.prec, other.prec)
            with _at(p):
                return self._new(series_div(self.coeffs, other.coeffs, n), p)
        c = _coerce(other)
        if c == 0:
            raise DivisionByZeroConstantTerm("division of a jet by zero")
        with _at(self.prec):
            return self._new([a / c for a in self.coeffs], self.prec)

    def __rtruediv__(self, other):
        return Jet.constant(other, self.base, self.order) / self

    def __pow__(self, n: int):
        return self.integer_pow(n)

    # calculus -----------------------------------------------------------
    def differentiate(self, times: int = 1) -> "Jet":
        """Jet of the derivative; each differentiation lowers the order by one."""
        cs = list(self.coeffs)
        for _ in range(times):
            if len(cs) == 1:
                raise OrderUnderflow("cannot differentiate a jet of order 0")
            cs = series_deriv(cs)
        return self._new(cs, self.prec)

    def reciprocal(self) -> "Jet":
        return 1 / self

    def exp(self) -> "Jet":
        with _at(self.prec):
            return self._new(series_exp(self.coeffs, self.order), self.prec)

    def log(self) -> "Jet":
        with _at(self.prec):
            return self._new(series_log(self.coeffs, self.order), self.prec)

    def sqrt(self) -> "Jet":
        with _at(self.prec):
            return self._new(series_sqrt(self.coeffs, self.order), self.prec)

    def integer_pow(self, n: int) -> "Jet":
        n = int(n)
        if n < 0:
            return self.reciprocal().integer_pow(-n)
        result = Jet.constant(1, self.base, self.order)
        result = result._new(result.coeffs, self.prec)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def compose(self, inner: "Jet") -> "Jet":
        """Jet of ``self(inner(z))``; requires ``inner.value == self.base``."""
        if inner.value != self.base:
            raise BaseMismatch("inner jet value differs from the outer expansion point")
        n = min(self.order, inner.order)
        delta = inner.truncate(n) - inner.value
        acc = Jet.constant(self.coeffs[n], inner.base, n)
        for k in range(n - 1, -1, -1):
            acc = acc * delta + self.coeffs[k]
        p = _min_prec(self.prec, inner.prec)
        return acc._new(acc.coeffs, p)

    def evaluate(self, z):
        """Sum the truncated series at ``z`` (Horner)."""
        t = _coerce(z) - self.base
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * t + c
        return acc


def jet_arith(kind: str, a: Jet, b: Jet | None = None) -> Jet:
    """Dispatch ``add``, ``mul``, ``div`` (binary) or ``differentiate`` (unary)."""
    if kind == "differentiate":
        return a.differentiate()
    if b is None:
        raise ValueError(f"jet_arith({kind!r}) needs two jets")
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown jet operation {kind!r}")


def jet_elementary(fn: str, a: Jet, n: int | None = None) -> Jet:
    if fn == "exp":
        return a.exp()
    if fn == "log":
        return a.log()
    if fn == "sqrt":
        return a.sqrt()
    if fn == "reciprocal":
        return a.reciprocal()
    if fn == "integer_pow":
        if n is None:
            raise ValueError("integer_pow needs an exponent")
        return a.integer_pow(n)
    raise ValueError(f"unknown elementary function {fn!r}")
