"""2x2 matrices, Moebius action, slash operators, Moebius fitting and
representations of free groups (including the free group Gamma(2)/{+-1})."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpq

from .errors import (
    AutomorphyFactorZero,
    DegeneratePoints,
    NotInGamma2,
    SamplerFailure,
    SingularMatrix,
    UnknownGenerator,
)
from .numerics import big

__all__ = [
    "INF",
    "Infinity",
    "Mat2",
    "GroupWord",
    "Rep",
    "GAMMA2_A",
    "GAMMA2_B",
    "chordal_distance",
    "gamma2_word",
    "is_infinite",
    "mobius_apply",
    "mobius_fit",
    "projective_distance",
    "rep_extend",
    "slash",
]


class Infinity:
    """The point at infinity of the extended complex plane (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


def is_infinite(z) -> bool:
    return z is INF


@dataclass(frozen=True)
class Mat2:
    """Row-major 2x2 matrix ``[[a, b], [c, d]]``.

    Entries may be Python ints (exact integer matrices), ``mpq`` or ``mpc``.
    """

    a: object
    b: object
    c: object
    d: object

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def from_rows(cls, rows):
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    def rows(self):
        return [[self.a, self.b], [self.c, self.d]]

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def det(self):
        return self.a * self.d - self.b * self.c

    def trace(self):
        return self.a + self.d

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def scale(self, s) -> "Mat2":
        return Mat2(s * self.a, s * self.b, s * self.c, s * self.d)

    def __neg__(self):
        return self.scale(-1)

    def apply_vec(self, v):
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def transpose(self) -> "Mat2":
        return Mat2(self.a, self.c, self.b, self.d)

    def inverse(self) -> "Mat2":
        det = self.det()
        if det == 0:
            raise SingularMatrix("matrix is not invertible")
        if det == 1:
            return Mat2(self.d, -self.b, -self.c, self.a)
        if all(isinstance(x, (int, mpq)) for x in self.entries()):
            inv = mpq(1) / det
        else:
            inv = 1 / big(det)
        return Mat2(self.d * inv, -self.b * inv, -self.c * inv, self.a * inv)

    def __pow__(self, n: int) -> "Mat2":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        out = Mat2.identity()
        while n:
            if n & 1:
                out = out @ base
            n >>= 1
            if n:
                base = base @ base
        return out

    def is_integral(self) -> bool:
        for x in self.entries():
            if isinstance(x, int):
                continue
            if isinstance(x, mpq) and x.denominator == 1:
                continue
            return False
        return True

    def as_int(self) -> "Mat2":
        return Mat2(*(int(x) for x in self.entries()))

    def to_big(self) -> "Mat2":
        return Mat2(*(big(x) for x in self.entries()))

    def normalized(self, index: int | None = None) -> "Mat2":
        """Divide by the largest-modulus entry (or by the entry at ``index``)."""
        ents = [big(x) for x in self.entries()]
        if index is None:
            index = max(range(4), key=lambda k: abs(ents[k]))
        pivot = ents[index]
        if pivot == 0:
            raise SingularMatrix("cannot normalize the zero matrix")
        return Mat2(*(x / pivot for x in ents))

    def is_scalar(self, tol=0) -> bool:
        ents = [big(x) for x in self.entries()]
        scale = max(abs(x) for x in ents)
        return abs(ents[1]) <= tol * scale and abs(ents[2]) <= tol * scale and abs(
            ents[0] - ents[3]
        ) <= tol * scale

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


GAMMA2_A = Mat2(1, 2, 0, 1)
GAMMA2_B = Mat2(1, 0, 2, 1)


def mobius_apply(m: Mat2, z):
    """Linear fractional action on the extended plane (``INF`` is a point)."""
    if m.det() == 0:
        raise SingularMatrix("Moebius action of a singular matrix")
    if z is INF:
        if m.c == 0:
            return INF
        return big(m.a) / big(m.c)
    num = m.a * z + m.b
    den = m.c * z + m.d
    if den == 0:
        return INF
    return big(num) / big(den)


def automorphy_factor(gamma: Mat2, z):
    j = gamma.c * z + gamma.d
    if j == 0:
        raise AutomorphyFactorZero(f"c z + d vanishes at z = {z}")
    return j


def slash(F, k: int, gamma: Mat2, z):
    """``(F|_k gamma)(z) = (cz + d)^(-k) F(gamma z)``; vectors componentwise.

    ``F`` is any callable returning a scalar or a tuple of scalars.
    """
    j = big(automorphy_factor(gamma, z))
    w = mobius_apply(gamma, z)
    try:
        val = F(w)
    except (ArithmeticError, ValueError) as exc:
        raise SamplerFailure(f"sampler failed at {w}: {exc}") from exc
    factor = j ** (-int(k))
    if isinstance(val, (tuple, list)):
        return tuple(factor * v for v in val)
    return factor * val


def chordal_distance(p, q):
    """Chordal distance on the Riemann sphere (diameter one)."""
    if p is INF and q is INF:
        return gmpy2.mpfr(0)
    if p is INF:
        p, q = q, p
    p = big(p)
    if q is INF:
        return 1 / gmpy2.sqrt(1 + gmpy2.norm(p))
    q = big(q)
    return abs(p - q) / gmpy2.sqrt((1 + gmpy2.norm(p)) * (1 + gmpy2.norm(q)))


def projective_distance(m1: Mat2, m2: Mat2):
    """Max entrywise difference after normalizing both by m1's largest entry."""
    e1 = [big(x) for x in m1.entries()]
    idx = max(range(4), key=lambda k: abs(e1[k]))
    n1 = m1.normalized(idx)
    n2 = m2.normalized(idx)
    return max(abs(x - y) for x, y in zip(n1.entries(), n2.entries()))


def _to_standard(p0, p1, p2) -> Mat2:
    """Matrix sending p0 -> 0, p1 -> 1, p2 -> INF."""
    pts = (p0, p1, p2)
    if p0 is INF:
        return Mat2(0, big(p1) - big(p2), 1, -big(p2))
    if p1 is INF:
        return Mat2(1, -big(p0), 1, -big(p2))
    if p2 is INF:
        return Mat2(1, -big(p0), 0, big(p1) - big(p0))
    p0, p1, p2 = (big(p) for p in pts)
    return Mat2(p1 - p2, -p0 * (p1 - p2), p1 - p0, -p2 * (p1 - p0))


def _distinct(points):
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = points[i], points[j]
            if a is INF or b is INF:
                if a is b:
                    return False
            elif big(a) == big(b):
                return False
    return True


def mobius_fit(pairs) -> Mat2:
    """Moebius map sending ``source_i -> target_i`` for three pairs, det 1."""
    pairs = list(pairs)
    if len(pairs) != 3:
        raise ValueError("mobius_fit needs exactly three (source, target) pairs")
    sources = [p[0] for p in pairs]
    targets = [p[1] for p in pairs]
    if not _distinct(sources) or not _distinct(targets):
        raise DegeneratePoints("sources and targets must be pairwise distinct")
    s = _to_standard(*sources).to_big()
    t = _to_standard(*targets).to_big()
    m = t.inverse() @ s
    det = big(m.det())
    if det == 0:
        raise DegeneratePoints("fitted matrix is singular")
    return m.scale(1 / gmpy2.sqrt(det))


# ---------------------------------------------------------------------------
# words and representations


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word, a tuple of ``(symbol, nonzero exponent)`` letters."""

    letters: tuple = ()

    def __post_init__(self):
        reduced: list[list] = []
        for sym, e in self.letters:
            e = int(e)
            if e == 0:
                continue
            if reduced and reduced[-1][0] == sym:
                reduced[-1][1] += e
                if reduced[-1][1] == 0:
                    reduced.pop()
            else:
                reduced.append([sym, e])
        object.__setattr__(self, "letters", tuple((s, e) for s, e in reduced))

    @classmethod
    def parse(cls, text: str, symbols=None) -> "GroupWord":
        """Parse ``"A^2 B^-1 A"``; with known ``symbols`` juxtaposition works
        (``"AB"``, ``"l0 l1^-1"``)."""
        s = text.strip()
        if s in ("", "1", "e", "id"):
            return cls(())
        letters = []
        if symbols:
            syms = sorted(symbols, key=len, reverse=True)
            pos = 0
            while pos < len(s):
                if s[pos] in " *.":
                    pos += 1
                    continue
                for sym in syms:
                    if s.startswith(sym, pos):
                        pos += len(sym)
                        m = re.match(r"\^\(?(-?\d+)\)?", s[pos:])
                        e = 1
                        if m:
                            e = int(m.group(1))
                            pos += m.end()
                        letters.append((sym, e))
                        break
                else:
                    raise UnknownGenerator(f"cannot parse {s[pos:]!r} in word {text!r}")
            return cls(tuple(letters))
        for tok in re.split(r"[\s*]+", s):
            m = re.fullmatch(r"([A-Za-z][A-Za-z0-9_]*)(?:\^\(?(-?\d+)\)?)?", tok)
            if not m:
                raise UnknownGenerator(f"cannot parse token {tok!r} in word {text!r}")
            letters.append((m.group(1), int(m.group(2) or 1)))
        return cls(tuple(letters))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((s, -e) for s, e in reversed(self.letters)))

    def __len__(self):
        return sum(abs(e) for _, e in self.letters)

    def symbols(self):
        return {s for s, _ in self.letters}

    def expanded(self):
        """Letters with exponents +-1, in order."""
        out = []
        for s, e in self.letters:
            out.extend([(s, 1 if e > 0 else -1)] * abs(e))
        return out

    def __str__(self):
        if not self.letters:
            return "1"
        return " ".join(s if e == 1 else f"{s}^{e}" for s, e in self.letters)


@dataclass(frozen=True)
class Rep:
    """A 2-dimensional representation given by generator images.

    For ``group_kind == "gamma2"`` the generators are ``A`` and ``B`` of
    Gamma(2) (modulo +-1) and matrices in Gamma(2) can be evaluated directly.
    ``domain`` optionally records the matrices acting on the upper half-plane
    for each generator (defaults to A, B for gamma2).
    """

    generator_names: tuple
    images: dict
    group_kind: str = "free"
    domain: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "generator_names", tuple(self.generator_names))
        if self.group_kind not in ("free", "gamma2"):
            raise ValueError(f"unknown group kind {self.group_kind!r}")
        for g in self.generator_names:
            if g not in self.images:
                raise UnknownGenerator(f"no image for generator {g!r}")
            if self.images[g].det() == 0:
                raise SingularMatrix(f"image of {g!r} is not invertible")
        if self.group_kind == "gamma2" and not self.domain:
            object.__setattr__(self, "domain", {"A": GAMMA2_A, "B": GAMMA2_B})

    def image(self, g) -> Mat2:
        return rep_extend(self, g)

    def element(self, word: GroupWord) -> Mat2:
        """The group element (acting on H) named by ``word``."""
        out = Mat2.identity()
        for s, e in word.letters:
            if s not in self.domain:
                raise UnknownGenerator(f"no domain matrix for {s!r}")
            out = out @ (self.domain[s] ** e)
        return out

    def with_images(self, images: dict) -> "Rep":
        return Rep(self.generator_names, dict(images), self.group_kind, dict(self.domain))


def gamma2_word(m: Mat2):
    """Write an element of Gamma(2) as ``sign * word(A, B)``.

    Euclidean reduction of the first column: left multiplication by powers of
    A or B strictly decreases ``max(|a|, |c|)`` until ``c = 0``.
    Returns ``(GroupWord, sign)``.
    """
    if not m.is_integral():
        raise NotInGamma2("matrix is not integral")
    a, b, c, d = (int(x) for x in m.entries())
    if a * d - b * c != 1:
        raise NotInGamma2("determinant is not 1")
    if a % 2 != 1 or d % 2 != 1 or b % 2 or c % 2:
        raise NotInGamma2("matrix is not congruent to the identity mod 2")
    moves = []  # left factors applied, in order
    steps = 0
    while c != 0:
        steps += 1
        if steps > 10_000:
            raise NotInGamma2("reduction did not terminate")
        if abs(a) > abs(c):
            n = round(Fraction(-a, 2 * c))
            a, b = a + 2 * n * c, b + 2 * n * d
            moves.append(("A", n))
        else:
            n = round(Fraction(-c, 2 * a))
            c, d = c + 2 * n * a, d + 2 * n * b
            moves.append(("B", n))
    if abs(a) != 1 or a != d:
        raise NotInGamma2("reduction did not end at +-identity")
    sign = a
    k = (b * a) // 2
    # L m = sign * A^k  =>  m = L^{-1} sign A^k
    letters = [(s, -n) for s, n in moves] + [("A", k)]
    return GroupWord(tuple(letters)), sign


def rep_extend(rep: Rep, g, return_word: bool = False):
    """Image of a word (or, for gamma2, of a matrix in Gamma(2))."""
    if isinstance(g, str):
        g = GroupWord.parse(g, rep.generator_names)
    if isinstance(g, Mat2):
        if rep.group_kind != "gamma2":
            raise UnknownGenerator("matrix input requires a gamma2 representation")
        word, _ = gamma2_word(g)
    else:
        word = g
    out = None
    for s, e in word.letters:
        if s not in rep.images:
            raise UnknownGenerator(f"generator {s!r} not in representation")
        factor = rep.images[s] ** e
        out = factor if out is None else out @ factor
    if out is None:
        first = rep.images[rep.generator_names[0]]
        one = 1 if first.is_integral() else big(1)
        out = Mat2(one, 0 * one, 0 * one, one)
    return (out, word) if return_word else out


def mat_to_json(m: Mat2, digits=None):
    from .numerics import complex_to_json

    return [[complex_to_json(x, digits) for x in row] for row in m.rows()]


def mat_from_json(obj) -> Mat2:
    from .numerics import complex_from_json

    return Mat2.from_rows([[complex_from_json(x) for x in row] for row in obj])


def mpc_entries(m: Mat2):
    return tuple(x if isinstance(x, mpc) else big(x) for x in m.entries())
