"""Second-order linear ODEs: normal form, Taylor-method continuation,
fundamental systems, Wronskians and monodromy.

The equation is ``y'' + P y' + Q y = 0`` (``P`` may be absent, which is the
normal form ``y'' + g y = 0``).  A solution pair is carried as the value matrix
``[[f1, f2], [f1', f2']]``; continuation along a segment is a product of local
2x2 transfer matrices obtained from the Taylor recurrence at each step.

Monodromy convention: for a closed loop the continued column vector
``F = (f1, f2)^t`` satisfies ``F_continued = M F``.  With this choice
``M(l1 then l2) = M(l1) @ M(l2)``.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from operator import mul

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import (
    NotClosed,
    NotInUpperHalfPlane,
    PathTooCloseToSingularity,
    SamplerFailure,
    SingularPoint,
    StepUnderflow,
)
from .moebius import Mat2
from .numerics import Jet, big, current_precision
from .sampler import FunctionSampler

__all__ = [
    "ContinuedSystem",
    "FundamentalSystem",
    "MonodromyData",
    "OdeCoefficients",
    "PathPolyline",
    "TransportStats",
    "monodromy",
    "monodromy_data",
    "normal_form",
    "normalize",
    "solution_jets",
    "step_transfer",
    "transfer_matrix",
    "transport",
    "wronskian",
]

DEFAULT_SAFETY = 0.25
DEFAULT_MAX_STEP = 0.5
PLANE = "plane"
UPPER_HALF_PLANE = "upper-half-plane"


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class OdeCoefficients:
    """Coefficients of ``y'' + P y' + Q y = 0`` with their declared singular set.

    ``domain`` is ``"plane"`` (analytic off ``singular_points``) or
    ``"upper-half-plane"`` (additionally bounded by the real axis).
    """

    Q: FunctionSampler
    P: FunctionSampler | None = None
    singular_points: tuple = ()
    domain: str = PLANE
    name: str = ""

    def __post_init__(self):
        if self.domain not in (PLANE, UPPER_HALF_PLANE):
            raise ValueError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "singular_points", tuple(big(s) for s in self.singular_points))

    @property
    def is_normal_form(self) -> bool:
        return self.P is None

    def radius(self, z):
        """Distance from ``z`` to the nearest declared singularity (or boundary)."""
        r = mpfr("inf")
        for s in self.singular_points:
            r = min(r, abs(z - s))
        if self.domain == UPPER_HALF_PLANE:
            r = min(r, big(z).imag)
        return r

    def check_point(self, z):
        if self.domain == UPPER_HALF_PLANE and not big(z).imag > 0:
            raise NotInUpperHalfPlane(f"{z} is not in the upper half-plane")
        for s in self.singular_points:
            if z == s:
                raise SingularPoint(f"{z} is a declared singular point")

    def jets(self, z, order: int):
        """Coefficient lists ``(p, q)`` of the jets at ``z``; ``p`` is None in normal form."""
        self.check_point(z)
        q = self.Q.jet(z, order).coeffs
        p = self.P.jet(z, order).coeffs if self.P is not None else None
        return p, q


def normalize(P, Q: FunctionSampler, z, order: int = 8, singular_points=()) -> Jet:
    """Jet of ``g = Q - P'/2 - P^2/4`` at ``z``; ``P`` may be None or 0."""
    z = big(z)
    for s in singular_points:
        if z == big(s):
            raise SingularPoint(f"{z} is a declared singular point")
    try:
        q = Q.jet(z, order)
        if P is None or P == 0:
            return q
        p1 = P.jet(z, order + 1)
    except SamplerFailure as exc:
        raise SingularPoint(str(exc)) from exc
    p = p1.truncate(order)
    return q - p1.differentiate() / 2 - p * p / 4


def normal_form(coeffs: OdeCoefficients, name: str = "") -> OdeCoefficients:
    """The normal-form equation ``y'' + g y = 0`` sharing the singular set."""
    if coeffs.is_normal_form:
        return coeffs
    P, Q = coeffs.P, coeffs.Q

    def g_jet(z, order):
        return normalize(P, Q, z, order)

    g = FunctionSampler(g_jet, name=name or f"normal form of {coeffs.name}")
    return OdeCoefficients(g, None, coeffs.singular_points, coeffs.domain, g.name)


# ---------------------------------------------------------------------------
# paths and systems


def _segment_distance(a, b, p):
    d = b - a
    n = gmpy2.norm(d)
    if n == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / n
    t = min(max(t, mpfr(0)), mpfr(1))
    return abs(a + t * d - p)


@dataclass(frozen=True)
class PathPolyline:
    vertices: tuple
    closed: bool = False

    def __post_init__(self):
        verts = tuple(big(v) for v in self.vertices)
        if len(verts) < 2:
            raise ValueError("a path needs at least two vertices")
        if self.closed and verts[0] != verts[-1]:
            raise NotClosed("closed path must end at its first vertex")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def segment(cls, a, b):
        return cls((a, b))

    @classmethod
    def circle(cls, center, radius, sides: int = 32, start_angle=None, clockwise=False):
        """Closed regular polygon inscribed in a circle, starting at ``start_angle``."""
        if sides < 3:
            raise ValueError("need at least three sides")
        center = big(center)
        start_angle = mpfr(0) if start_angle is None else mpfr(start_angle)
        sign = -1 if clockwise else 1
        two_pi = 2 * gmpy2.const_pi()
        pts = []
        for k in range(sides):
            t = start_angle + sign * two_pi * k / sides
            pts.append(center + radius * mpc(gmpy2.cos(t), gmpy2.sin(t)))
        pts.append(pts[0])
        return cls(tuple(pts), closed=True)

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def then(self, other: "PathPolyline") -> "PathPolyline":
        if self.end != other.start:
            raise ValueError("paths do not join")
        verts = self.vertices + other.vertices[1:]
        return PathPolyline(verts, closed=verts[0] == verts[-1])

    def reversed(self) -> "PathPolyline":
        return PathPolyline(self.vertices[::-1], self.closed)

    def length(self):
        return sum((abs(b - a) for a, b in zip(self.vertices, self.vertices[1:])), mpfr(0))

    def margin(self, points):
        """Smallest distance from the polyline to any of ``points``."""
        m = mpfr("inf")
        for p in points:
            p = big(p)
            for a, b in zip(self.vertices, self.vertices[1:]):
                m = min(m, _segment_distance(a, b, p))
        return m

    def to_json(self):
        return {
            "vertices": [[str(v.real), str(v.imag)] for v in self.vertices],
            "closed": self.closed,
        }

    @classmethod
    def from_json(cls, obj):
        verts = [mpc(mpfr(re), mpfr(im)) for re, im in obj["vertices"]]
        return cls(tuple(verts), bool(obj.get("closed", False)))


@dataclass(frozen=True)
class FundamentalSystem:
    """Value matrix ``[[f1, f2], [f1', f2']]`` at ``at`` (columns are solutions)."""

    at: object
    values: Mat2

    @classmethod
    def identity(cls, at):
        return cls(big(at), Mat2(mpc(1), mpc(0), mpc(0), mpc(1)))

    @property
    def functions(self):
        return (self.values.a, self.values.b)

    @property
    def derivatives(self):
        return (self.values.c, self.values.d)

    def wronskian(self):
        return wronskian(self)


def wronskian(sys: FundamentalSystem):
    v = sys.values
    return v.a * v.d - v.b * v.c


# ---------------------------------------------------------------------------
# local Taylor step


def _recurrence(p_scaled, q_scaled, inits, order):
    """Scaled Taylor coefficients ``a_n = c_n h^n`` for each ``(a0, a1)`` in inits."""
    out = []
    for a0, a1 in inits:
        a = [a0, a1]
        da = [0, a1]  # da[m] = m a_m
        for n in range(order - 1):
            s = sum(map(mul, q_scaled[: n + 1], a[n::-1]))
            if p_scaled is not None:
                s += sum(map(mul, p_scaled[: n + 1], da[n + 1 : 0 : -1]))
            nxt = -s / ((n + 2) * (n + 1))
            a.append(nxt)
            da.append((n + 2) * nxt)
        out.append((a, da))
    return out


def _scaled(coeffs, h, shift):
    out = []
    hp = h**shift
    for c in coeffs:
        out.append(c * hp)
        hp *= h
    return out


def _order_estimate(h_abs, radius, prec):
    if radius == mpfr("inf"):
        return max(24, prec // 4)
    ratio = float(h_abs / radius)
    ratio = min(max(ratio, 1e-30), 0.9)
    return int(math.ceil((prec + 24) / -math.log2(ratio))) + 6


def step_transfer(coeffs: OdeCoefficients, z, h, order: int | None = None, max_order: int = 4000):
    """Transfer matrix taking ``(y, y')`` at ``z`` to ``(y, y')`` at ``z + h``.

    Returns ``(T, order_used)``.  The Taylor order doubles until the last few
    scaled coefficients fall below the working precision.
    """
    prec = current_precision()
    z, h = big(z), big(h)
    if order is None:
        order = _order_estimate(abs(h), coeffs.radius(z), prec)
    threshold = mpfr(2) ** (-(prec + 8))
    while True:
        p, q = coeffs.jets(z, order)
        q_s = _scaled(q, h, 2)
        p_s = _scaled(p, h, 1) if p is not None else None
        sols = _recurrence(p_s, q_s, ((mpc(1), mpc(0)), (mpc(0), mpc(1))), order)
        scale = max(max(abs(x) for x in a) for a, _ in sols)
        scale = max(scale, mpfr(1))
        tail = max(max(abs(x) for x in a[-4:]) for a, _ in sols)
        if tail <= threshold * scale:
            break
        if order >= max_order:
            raise StepUnderflow(f"Taylor series did not converge by order {order} at {z}")
        order = min(2 * order, max_order)
    (a1, d1), (a2, d2) = sols
    # scaled system: columns are the solutions started from (1, 0) and (0, 1) in scaled form
    ts = Mat2(sum(a1), sum(a2), sum(d1), sum(d2))
    inv_h = 1 / h
    return Mat2(ts.a, ts.b * h, ts.c * inv_h, ts.d), order


@dataclass
class TransportStats:
    steps: int = 0
    max_order: int = 0
    min_margin: object = field(default_factory=lambda: mpfr("inf"))
    seconds: float = 0.0

    def merge(self, other: "TransportStats"):
        self.steps += other.steps
        self.max_order = max(self.max_order, other.max_order)
        self.min_margin = min(self.min_margin, other.min_margin)
        self.seconds += other.seconds

    def to_json(self):
        return {
            "steps": self.steps,
            "max_order": self.max_order,
            "min_margin": float(self.min_margin) if self.min_margin != mpfr("inf") else None,
        }


def _check_path(coeffs: OdeCoefficients, path: PathPolyline, min_margin):
    margin = path.margin(coeffs.singular_points) if coeffs.singular_points else mpfr("inf")
    if coeffs.domain == UPPER_HALF_PLANE:
        margin = min(margin, min(v.imag for v in path.vertices))
    if margin < min_margin:
        raise PathTooCloseToSingularity(
            f"path passes within {float(margin):.3g} of the singular set (threshold {float(min_margin):.3g})"
        )
    return margin


def transfer_matrix(
    coeffs: OdeCoefficients,
    path: PathPolyline,
    safety: float = DEFAULT_SAFETY,
    max_step: float = DEFAULT_MAX_STEP,
    min_margin=None,
):
    """Product of step transfer matrices along ``path``; returns ``(T, stats)``."""
    prec = current_precision()
    if min_margin is None:
        min_margin = mpfr(2) ** (-(prec // 4))
    underflow = mpfr(2) ** (-(prec // 2))
    started = time.perf_counter()
    stats = TransportStats()
    stats.min_margin = _check_path(coeffs, path, min_margin)
    total = Mat2(mpc(1), mpc(0), mpc(0), mpc(1))
    safety = mpfr(safety)
    max_step = mpfr(max_step)
    for a, b in zip(path.vertices, path.vertices[1:]):
        if a == b:
            continue
        z = a
        direction = (b - a) / abs(b - a)
        while z != b:
            remaining = abs(b - z)
            limit = min(safety * coeffs.radius(z), max_step)
            if remaining <= limit:
                h = b - z
            else:
                if limit < underflow:
                    raise StepUnderflow(f"step {float(limit):.3g} below 2^-{prec // 2} at {z}")
                h = direction * limit
            T, order = step_transfer(coeffs, z, h)
            total = T @ total
            stats.steps += 1
            stats.max_order = max(stats.max_order, order)
            z = b if remaining <= limit else z + h
    stats.seconds = time.perf_counter() - started
    return total, stats


def transport(coeffs: OdeCoefficients, path: PathPolyline, init: FundamentalSystem, **kw):
    """Continue both solution columns of ``init`` along ``path``."""
    if init.at != path.start:
        raise ValueError("initial system is not based at the path start")
    T, _ = transfer_matrix(coeffs, path, **kw)
    return FundamentalSystem(path.end, T @ init.values)


def monodromy_from_transfer(T: Mat2, reference: FundamentalSystem) -> Mat2:
    """``M`` with ``F_continued = M F`` given the loop transfer matrix ``T``."""
    C = reference.values.inverse() @ T @ reference.values
    return C.transpose()


def monodromy(coeffs: OdeCoefficients, loop: PathPolyline, reference: FundamentalSystem, **kw) -> Mat2:
    """Monodromy matrix of ``reference`` around a closed loop (see module docs)."""
    if not loop.closed:
        raise NotClosed("monodromy needs a closed loop")
    if reference.at != loop.start:
        raise ValueError("reference system is not based at the loop start")
    T, _ = transfer_matrix(coeffs, loop, **kw)
    return monodromy_from_transfer(T, reference)


@dataclass
class MonodromyData:
    base: object
    loops: dict
    matrices: dict
    stats: dict = field(default_factory=dict)

    def summary(self):
        out = {}
        for name, m in self.matrices.items():
            out[name] = {"trace": m.trace(), "det": m.det()}
        return out


def monodromy_data(coeffs, loops: dict, reference: FundamentalSystem, **kw) -> MonodromyData:
    matrices, stats = {}, {}
    for name, loop in loops.items():
        if not loop.closed:
            raise NotClosed(f"loop {name!r} is not closed")
        T, st = transfer_matrix(coeffs, loop, **kw)
        matrices[name] = monodromy_from_transfer(T, reference)
        stats[name] = st
    return MonodromyData(reference.at, dict(loops), matrices, stats)


# ---------------------------------------------------------------------------
# solution jets


def solution_jets(coeffs: OdeCoefficients, z, value, derivative, order: int) -> Jet:
    """Taylor jet at ``z`` of the solution with ``y(z) = value``, ``y'(z) = derivative``."""
    z = big(z)
    p, q = coeffs.jets(z, order)
    if order < 1:
        return Jet(z, [big(value)])
    ((a, _),) = _recurrence(p, q, ((big(value), big(derivative)),), order)
    return Jet(z, a)


def _hyperbolic_key(z, w):
    # monotone in hyperbolic distance on the upper half-plane
    return gmpy2.norm(z - w) / (z.imag * w.imag)


class ContinuedSystem:
    """A fundamental system continued on demand over a simply connected domain.

    Each query continues from the nearest already-computed point along a
    straight segment, so answers do not depend on query order (up to
    rounding).  Safe for concurrent use.
    """

    def __init__(self, coeffs: OdeCoefficients, init: FundamentalSystem, *, safety=DEFAULT_SAFETY,
                 max_step=DEFAULT_MAX_STEP):
        if coeffs.singular_points:
            raise ValueError("continuation by segments needs a domain without declared singularities")
        self.coeffs = coeffs
        self.safety = safety
        self.max_step = max_step
        self._cache = {init.at: init}
        self._lock = threading.Lock()
        self.stats = TransportStats()

    def _distance(self, a, b):
        if self.coeffs.domain == UPPER_HALF_PLANE:
            return _hyperbolic_key(a, b)
        return gmpy2.norm(a - b)

    def at(self, z) -> FundamentalSystem:
        z = big(z)
        self.coeffs.check_point(z)
        with self._lock:
            hit = self._cache.get(z)
            if hit is not None:
                return hit
            start = min(self._cache, key=lambda w: self._distance(w, z))
            src = self._cache[start]
        T, st = transfer_matrix(self.coeffs, PathPolyline.segment(start, z), self.safety, self.max_step)
        sys = FundamentalSystem(z, T @ src.values)
        with self._lock:
            self.stats.merge(st)
            self._cache.setdefault(z, sys)
        return sys

    def jets(self, z, order: int):
        sys = self.at(z)
        v = sys.values
        return (
            solution_jets(self.coeffs, z, v.a, v.c, order),
            solution_jets(self.coeffs, z, v.b, v.d, order),
        )

    def sampler(self, name="continued system") -> FunctionSampler:
        return FunctionSampler(lambda z, order: self.jets(z, order), dim=2, name=name)
