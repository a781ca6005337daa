"""q-expansions of E2, E4, E6, Delta, j and the modular lambda function.

Coefficients are generated once in exact integer arithmetic and cached;
evaluation sums the truncated series at the working precision.  ``lambda``
is expanded in the nome ``e^{i pi z}`` (theta quotient theta_2^4/theta_3^4),
the other forms in ``q = e^{2 pi i z}``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import NotInUpperHalfPlane
from .numerics import Jet, big, current_precision
from .sampler import FunctionSampler

__all__ = [
    "FORMS",
    "QSeries",
    "eval_form",
    "form_jet",
    "form_sampler",
    "qseries",
    "terms_needed",
]

DEFAULT_TRUNCATION = 200

# name -> (weight, leading exponent, nome multiplier s with q = e^{s pi i z})
FORMS = {
    "E2": (2, 0, 2),
    "E4": (4, 0, 2),
    "E6": (6, 0, 2),
    "Delta": (12, 1, 2),
    "j": (0, -1, 2),
    "lambda": (0, 1, 1),
}


# ---------------------------------------------------------------------------
# exact integer power series (lists of ints, index = power)


def _imul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


def _iinv(a, n):
    # a[0] == 1
    out = [0] * n
    out[0] = 1
    for k in range(1, n):
        s = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            s += a[j] * out[k - j]
        out[k] = -s
    return out


def _ipow(a, e, n):
    result = [1] + [0] * (n - 1)
    base = list(a[:n]) + [0] * max(0, n - len(a))
    while e:
        if e & 1:
            result = _imul(result, base, n)
        e >>= 1
        if e:
            base = _imul(base, base, n)
    return result


def _sigma(k, n):
    s = [0] * (n + 1)
    for d in range(1, n + 1):
        dk = d**k
        for m in range(d, n + 1, d):
            s[m] += dk
    return s


def _euler_product(n):
    """Coefficients of prod_{m>=1} (1 - q^m) up to q^(n-1) (pentagonal numbers)."""
    out = [0] * n
    out[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 < n:
        sign = -1 if k % 2 else 1
        for p in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if p < n:
                out[p] += sign
        k += 1
    return out


def _block(n):
    return max(128, -(-n // 128) * 128)


_lock = threading.Lock()


@lru_cache(maxsize=None)
def _raw(name, n):
    """First ``n`` integer coefficients starting at the leading exponent."""
    if name in ("E2", "E4", "E6"):
        k, c = {"E2": (1, -24), "E4": (3, 240), "E6": (5, -504)}[name]
        sig = _sigma(k, n)
        return tuple([1] + [c * sig[m] for m in range(1, n)])
    if name == "Delta":
        return tuple(_ipow(_euler_product(n), 24, n))
    if name == "j":
        e4 = list(_raw("E4", _block(n)))[:n]
        return tuple(_imul(_ipow(e4, 3, n), _iinv(list(_raw("Delta", _block(n)))[:n], n), n))
    if name == "lambda":
        # theta_2^4 / (16 q) = A^4 with A = sum_{m>=0} q^{m(m+1)}; theta_3 = 1 + 2 sum q^{m^2}
        a = [0] * n
        m = 0
        while m * (m + 1) < n:
            a[m * (m + 1)] = 1
            m += 1
        t3 = [0] * n
        t3[0] = 1
        m = 1
        while m * m < n:
            t3[m * m] = 2
            m += 1
        num = _ipow(a, 4, n)
        den = _ipow(t3, 4, n)
        return tuple(16 * x for x in _imul(num, _iinv(den, n), n))
    raise KeyError(f"unknown form {name!r}")


def coefficients(name: str, n: int) -> tuple:
    if name not in FORMS:
        raise KeyError(f"unknown form {name!r}; expected one of {sorted(FORMS)}")
    with _lock:
        return _raw(name, _block(n))[:n]


@dataclass(frozen=True)
class QSeries:
    """Truncated q-expansion: ``sum_i coeffs[i] q^(offset + i)``."""

    name: str
    weight: int
    truncation: int
    offset: int
    nome: int  # q = e^{nome * pi * i * z}
    coeffs: tuple

    def nome_value(self, z):
        return gmpy2.exp(mpc(0, self.nome) * gmpy2.const_pi() * z)


def qseries(name: str, truncation: int = DEFAULT_TRUNCATION) -> QSeries:
    weight, offset, nome = FORMS[name]
    return QSeries(name, weight, truncation, offset, nome, coefficients(name, truncation))


def _check_upper(z):
    if not z.imag > 0:
        raise NotInUpperHalfPlane(f"Im z must be positive, got {z}")


def terms_needed(name: str, z, prec: int | None = None, order: int = 0, minimum: int = 16) -> int:
    """Smallest truncation whose first omitted term (and a few after it) lie
    below ``2^-(prec+16)`` for jets up to ``order``."""
    prec = prec or current_precision()
    z = big(z)
    _check_upper(z)
    _, offset, s = FORMS[name]
    log2q = -s * math.pi * float(z.imag) / math.log(2)
    target = -(prec + 16)
    log_fact = math.lgamma(order + 1) / math.log(2)

    def deriv_bits(e):
        # log2 of (s pi e)^order / order!
        return order * math.log2(s * math.pi * max(e, 1)) - log_fact

    n = minimum
    while True:
        cs = coefficients(name, n + 8)
        ok = True
        for i in range(n, n + 8):
            a = cs[i]
            if not a:
                continue
            e = offset + i
            bits = math.log2(abs(a)) + e * log2q + deriv_bits(abs(e))
            if bits > target:
                ok = False
                break
        if ok:
            return n
        n = int(n * 1.25) + 8
        if n > 200_000:
            raise ValueError(f"{name}: q-series does not converge fast enough at {z}")


def _tail_bound(series: QSeries, z):
    # crude geometric majorant, only claimed for Im z >= 0.5
    if z.imag < 0.5:
        return None
    T = series.truncation
    cs = coefficients(series.name, 2 * T + 1)
    with gmpy2.context(gmpy2.get_context(), precision=64):
        absq = abs(series.nome_value(mpc(z)))
        total = mpfr(0)
        for i in range(T, 2 * T):
            total += abs(cs[i]) * absq ** (series.offset + i)
        last, prev = abs(cs[2 * T]), abs(cs[2 * T - 1]) or 1
        ratio = absq * max(mpfr(1), mpfr(last) / prev)
        if ratio >= 1:
            return None
        total += last * absq ** (series.offset + 2 * T) / (1 - ratio)
        return total


def _power_terms(series: QSeries, z):
    q = series.nome_value(z)
    qn = q**series.offset if series.offset else mpc(1)
    terms, exps = [], []
    for i, a in enumerate(series.coeffs):
        if a:
            terms.append(a * qn)
            exps.append(series.offset + i)
        qn *= q
    return terms, exps


def eval_form(name: str, z, truncation: int = DEFAULT_TRUNCATION):
    """Value of the truncated q-expansion and a tail bound (``None`` when Im z < 0.5)."""
    z = big(z)
    _check_upper(z)
    if truncation < 1:
        raise ValueError("truncation must be positive")
    series = qseries(name, truncation)
    terms, _ = _power_terms(series, z)
    return sum(terms, mpc(0)), _tail_bound(series, z)


def form_jet(name: str, z, order: int, truncation: int | None = None) -> Jet:
    """Taylor jet at ``z`` obtained by termwise differentiation of the series."""
    z = big(z)
    _check_upper(z)
    if truncation is None:
        truncation = terms_needed(name, z, order=order)
    series = qseries(name, truncation)
    terms, exps = _power_terms(series, z)
    step = mpc(0, series.nome) * gmpy2.const_pi()
    factors = [step * e for e in exps]
    out = [sum(terms, mpc(0))]
    fact = 1
    for k in range(1, order + 1):
        terms = [t * f for t, f in zip(terms, factors)]
        fact *= k
        out.append(sum(terms, mpc(0)) / fact)
    return Jet(z, out)


def form_sampler(name: str, truncation: int | None = None) -> FunctionSampler:
    """Sampler for a named form; ``truncation=None`` sizes the series per query."""
    if name not in FORMS:
        raise KeyError(f"unknown form {name!r}")

    def jet_fn(z, order):
        return form_jet(name, z, order, truncation)

    return FunctionSampler(jet_fn, name=name, domain_hint="upper half-plane")
