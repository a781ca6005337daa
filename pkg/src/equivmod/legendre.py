"""The Legendre equation on the twice-punctured plane and its pullback to H.

The equation is the hypergeometric equation with a = b = 1/2, c = 1::

    x'' + (1/w + 1/(w-1)) x' + (1/4) (1/(w-1) - 1/w) x = 0

with regular singular points 0, 1 and infinity.  Its normal form is
``y'' + g y = 0`` with ``g = 1/4 (1/w^2 + 1/(w-1)^2 + 1/w - 1/(w-1))``; the
two are related by ``y = 2 sqrt(w (1 - w)) x`` (the factor ``exp(1/2 int P)``
normalized to 1 at w = 1/2).

Loop monodromy, homotopy words of loops based at 1/2, the images under the
modular lambda function of segments in H, and the deck-transformation check
``F(gamma z) = rho(gamma) F(z)`` for gamma in Gamma(2) all live here.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr, mpq

from .errors import CorrespondenceUnresolved, SeriesDivergence, SingularPoint
from .moebius import (
    GAMMA2_A,
    GAMMA2_B,
    INF,
    GroupWord,
    Mat2,
    Rep,
    chordal_distance,
    gamma2_word,
    mobius_apply,
    rep_extend,
)
from .numerics import Jet, big, current_precision, working_precision
from .ode import (
    FundamentalSystem,
    OdeCoefficients,
    PathPolyline,
    TransportStats,
    monodromy_from_transfer,
    solution_jets,
    transfer_matrix,
)
from .qforms import form_jet
from .sampler import FunctionSampler, RationalSampler

__all__ = [
    "CoveringData",
    "DeckReport",
    "LOOP_NAMES",
    "PullbackSampler",
    "PuncturedPlaneSpec",
    "covering_data",
    "deck_check",
    "homotopy_word",
    "hypergeometric_half",
    "lambda_image_path",
    "legendre_equation",
    "legendre_fundamental",
    "legendre_g",
    "legendre_normal_form",
    "loop_monodromy",
    "loop_monodromy_rep",
]

LOOP_NAMES = ("l0", "l1")
SERIES_REACH = mpq(7, 10)


def legendre_p():
    return RationalSampler({(0, 1): 1, (1, 1): 1}, name="legendre P")


def legendre_q():
    return RationalSampler({(0, 1): mpq(-1, 4), (1, 1): mpq(1, 4)}, name="legendre Q")


def legendre_g():
    return RationalSampler(
        {(0, 2): mpq(1, 4), (1, 2): mpq(1, 4), (0, 1): mpq(1, 4), (1, 1): mpq(-1, 4)},
        name="legendre g",
    )


def legendre_equation() -> OdeCoefficients:
    return OdeCoefficients(legendre_q(), legendre_p(), (0, 1), name="legendre")


def legendre_normal_form() -> OdeCoefficients:
    return OdeCoefficients(legendre_g(), None, (0, 1), name="legendre normal form")


# ---------------------------------------------------------------------------
# series solutions near the base point


def hypergeometric_half(w, max_terms: int = 20000):
    """``(F(w), F'(w))`` for ``F = 2F1(1/2, 1/2; 1; w)`` by direct summation, |w| <= 0.7."""
    w = big(w)
    if abs(w) > SERIES_REACH:
        raise SeriesDivergence(f"|{w}| exceeds the series reach {float(SERIES_REACH)}")
    eps = mpfr(2) ** (-(current_precision() + 12))
    total = mpc(0)
    deriv = mpc(0)
    coef = mpfr(1)  # t_n without the power of w
    wn1 = mpc(1)  # w^(n-1)
    n = 0
    while True:
        term_d = n * coef * wn1 if n else mpc(0)
        wn = wn1 * w if n else mpc(1)
        term = coef * wn
        total += term
        deriv += term_d
        if n > 8 and abs(term) < eps and abs(term_d) < eps:
            return total, deriv
        if n >= max_terms:
            raise SeriesDivergence("hypergeometric series did not converge")
        coef = coef * (2 * n + 1) ** 2 / (4 * (n + 1) ** 2)
        wn1 = wn
        n += 1


def _normal_factor(w):
    """``E = 2 sqrt(w(1-w))`` (principal branch, E(1/2) = 1) and ``E'/E = P/2``."""
    e = 2 * gmpy2.sqrt(w * (1 - w))
    half_p = (1 / w + 1 / (w - 1)) / 2
    return e, half_p


def _to_normal(w, values: Mat2) -> Mat2:
    e, half_p = _normal_factor(w)
    x1, x2, d1, d2 = values.entries()
    return Mat2(e * x1, e * x2, e * (d1 + half_p * x1), e * (d2 + half_p * x2))


_KCACHE: dict = {}


def _companion_scale():
    prec = current_precision()
    k = _KCACHE.get(prec)
    if k is None:
        f, fp = hypergeometric_half(mpq(1, 2))
        k = -1 / (2 * f * fp)
        _KCACHE[prec] = k
    return k


def legendre_fundamental(base=mpq(1, 2), gauge: str = "equation") -> FundamentalSystem:
    """Fundamental system at ``base`` with Wronskian 1 at w = 1/2.

    Columns: ``x1 = 2F1(1/2,1/2;1;w)`` and ``x2 = k 2F1(1/2,1/2;1;1-w)`` with
    ``k`` chosen so the Wronskian equals 1 at w = 1/2.  ``gauge="normal"``
    multiplies by ``2 sqrt(w(1-w))`` (the normal-form solutions, whose
    Wronskian is 1 everywhere).  Bases outside the series discs are reached by
    continuation along the segment from 1/2.
    """
    if gauge not in ("equation", "normal"):
        raise ValueError("gauge must be 'equation' or 'normal'")
    w = big(base)
    if w == 0 or w == 1:
        raise SingularPoint(f"{base} is a singular point of the Legendre equation")
    k = _companion_scale()
    if abs(w) <= SERIES_REACH and abs(1 - w) <= SERIES_REACH:
        f, fp = hypergeometric_half(w)
        g, gp = hypergeometric_half(1 - w)
        values = Mat2(f, k * g, fp, -k * gp)
    else:
        if w.imag == 0:
            raise SeriesDivergence(f"{base} is on a branch cut; no continuation path from 1/2")
        start = legendre_fundamental(mpq(1, 2))
        T, _ = transfer_matrix(legendre_equation(), PathPolyline.segment(start.at, w))
        values = T @ start.values
    if gauge == "normal":
        values = _to_normal(w, values)
    return FundamentalSystem(w, values)


# ---------------------------------------------------------------------------
# loops and homotopy classes


def _loop_around(center, radius, base, sides):
    """Counterclockwise polygon loop around ``center`` based at ``base``.

    When ``base`` is not on the circle a radial connector is added.
    """
    center, base = big(center), big(base)
    offset = base - center
    start_angle = gmpy2.atan2(offset.imag, offset.real)
    circle = PathPolyline.circle(center, radius, sides, start_angle)
    ring = list(circle.vertices)
    foot = center + radius * offset / abs(offset)
    ring[0] = ring[-1] = foot
    if foot == base:
        return PathPolyline(tuple(ring), closed=True)
    return PathPolyline((base, *ring, base), closed=True)


@dataclass(frozen=True)
class PuncturedPlaneSpec:
    """Base point and generator loops for the plane punctured at 0 and 1."""

    basepoint: object = mpq(1, 2)
    radius0: object = mpq(1, 2)
    radius1: object = mpq(1, 2)
    sides: int = 32
    margin: object = mpq(1, 10)

    def __post_init__(self):
        if self.sides < 16:
            raise ValueError("loops are approximated by polygons with at least 16 sides")

    @property
    def loop_ell0(self) -> PathPolyline:
        return _loop_around(0, big(self.radius0), self.basepoint, self.sides)

    @property
    def loop_ell1(self) -> PathPolyline:
        return _loop_around(1, big(self.radius1), self.basepoint, self.sides)

    def loops(self):
        return {"l0": self.loop_ell0, "l1": self.loop_ell1}

    def validate(self):
        for name, loop in self.loops().items():
            m = loop.margin((0, 1))
            if m < self.margin:
                raise ValueError(f"loop {name} comes within {float(m):.3g} of a puncture")


_REP_CACHE: dict = {}
_REP_LOCK = threading.Lock()


@dataclass
class LoopMonodromy:
    spec: PuncturedPlaneSpec
    gauge: str
    reference: FundamentalSystem
    matrices: dict
    stats: dict = field(default_factory=dict)

    @property
    def rep(self) -> Rep:
        return Rep(LOOP_NAMES, dict(self.matrices), "free")


def loop_monodromy(spec: PuncturedPlaneSpec | None = None, gauge: str = "equation",
                   safety=0.25) -> LoopMonodromy:
    """Monodromy of the Legendre fundamental system around the loops of ``spec``."""
    spec = spec or PuncturedPlaneSpec()
    spec.validate()
    key = (spec, gauge, current_precision(), float(safety))
    with _REP_LOCK:
        hit = _REP_CACHE.get(key)
    if hit is not None:
        return hit
    coeffs = legendre_equation() if gauge == "equation" else legendre_normal_form()
    ref = legendre_fundamental(spec.basepoint, gauge)
    matrices, stats = {}, {}
    for name, loop in spec.loops().items():
        T, st = transfer_matrix(coeffs, loop, safety=safety)
        matrices[name] = monodromy_from_transfer(T, ref)
        stats[name] = st
    out = LoopMonodromy(spec, gauge, ref, matrices, stats)
    with _REP_LOCK:
        _REP_CACHE[key] = out
    return out


def loop_monodromy_rep(spec: PuncturedPlaneSpec | None = None, gauge: str = "equation") -> Rep:
    """Representation on the free generators ``l0``, ``l1`` (counterclockwise loops)."""
    return loop_monodromy(spec, gauge).rep


def homotopy_word(path: PathPolyline) -> GroupWord:
    """Class in the free group on l0, l1 of a loop based in (0, 1).

    Reads off crossings of the cuts (-inf, 0) and (1, inf): going from the
    closed upper half-plane into the lower one across (-inf, 0) is ``l0``,
    going from the lower into the closed upper half-plane across (1, inf) is
    ``l1``; the opposite crossings give the inverses.
    """
    if not path.closed:
        raise CorrespondenceUnresolved("homotopy words need a closed path")
    start = path.start
    if start.imag != 0 or not 0 < start.real < 1:
        raise CorrespondenceUnresolved("loops must be based on the real segment (0, 1)")
    letters = []
    for a, b in zip(path.vertices, path.vertices[1:]):
        up_a, up_b = a.imag >= 0, b.imag >= 0
        if up_a == up_b:
            continue
        t = a.imag / (a.imag - b.imag)
        x = a.real + t * (b.real - a.real)
        if x == 0 or x == 1:
            raise CorrespondenceUnresolved(f"path crosses the real axis at the puncture {x}")
        if x < 0:
            letters.append(("l0", 1 if up_a else -1))
        elif x > 1:
            letters.append(("l1", -1 if up_a else 1))
    return GroupWord(tuple(letters))


# ---------------------------------------------------------------------------
# the covering map


def _lambda_value(z):
    return form_jet("lambda", z, 0).value


def lambda_image_path(za, zb, sample_bits: int = 64, max_points: int = 20000) -> PathPolyline:
    """Polyline in C minus {0, 1} homotopic to the lambda-image of the segment ``za -> zb``.

    The segment is sampled at low precision and subdivided until every chord
    is short compared with its distance to {0, 1} and the curve stays close to
    the chord at the midpoint.  The endpoints are the working-precision values.
    """
    za, zb = big(za), big(zb)
    end_a, end_b = _lambda_value(za), _lambda_value(zb)
    with working_precision(sample_bits):
        za_lo, zb_lo = mpc(za), mpc(zb)
        d = zb_lo - za_lo

        def at(s):
            return _lambda_value(za_lo + d * s)

        def dist(w):
            return min(abs(w), abs(w - 1))

        pts = [(mpfr(0), at(mpfr(0))), (mpfr(1), at(mpfr(1)))]
        out = [pts[0]]
        stack = [pts[1]]
        cur = pts[0]
        while stack:
            nxt = stack[-1]
            s0, w0 = cur
            s1, w1 = nxt
            sm = (s0 + s1) / 2
            wm = at(sm)
            dd = min(dist(w0), dist(w1), dist(wm))
            ok = abs(w1 - w0) < dd * mpfr("0.3") and abs(wm - (w0 + w1) / 2) < dd * mpfr("0.1")
            if ok:
                out.append(nxt)
                cur = stack.pop()
            else:
                if len(out) + len(stack) > max_points:
                    raise CorrespondenceUnresolved("lambda image path needs too many samples")
                stack.append((sm, wm))
        verts = [w for _, w in out]
    verts = [big(v) for v in verts]
    verts[0], verts[-1] = end_a, end_b
    closed = False
    if abs(end_a - end_b) < mpfr(2) ** (-(current_precision() - 24)):
        verts[-1] = verts[0]
        closed = True
    return PathPolyline(tuple(verts), closed=closed)


# ---------------------------------------------------------------------------
# pullback through lambda


def _lifted_coefficients(z, order):
    """Jets of the Legendre equation rewritten in the variable z on H."""
    lam = form_jet("lambda", z, order + 2)
    d1 = lam.differentiate()
    d2 = d1.differentiate()
    lam_n = lam.truncate(order)
    d1_n = d1.truncate(order)
    p_w = lam_n.reciprocal() + (lam_n - 1).reciprocal()
    q_w = ((lam_n - 1).reciprocal() - lam_n.reciprocal()) / 4
    p = p_w * d1_n - d2 / d1_n
    q = q_w * d1_n * d1_n
    return p, q


def lifted_equation() -> OdeCoefficients:
    """The Legendre equation pulled back along lambda (analytic on all of H)."""
    cache = {}

    def pair(z, order):
        key = (z, order)
        if key not in cache:
            cache.clear()
            cache[key] = _lifted_coefficients(z, order)
        return cache[key]

    P = FunctionSampler(lambda z, order: pair(z, order)[0], name="lifted P")
    Q = FunctionSampler(lambda z, order: pair(z, order)[1], name="lifted Q")
    return OdeCoefficients(Q, P, (), "upper-half-plane", name="lifted legendre")


def _hyperbolic_key(z, w):
    return gmpy2.norm(z - w) / (z.imag * w.imag)


class PullbackSampler:
    """``F(z) = (x1(lambda z), x2(lambda z))`` on H, continued from ``base_z``.

    Values at a new point are obtained by continuing the Legendre system in
    the w-plane along the lambda-image of the segment from the nearest point
    already computed; jets come from the lifted equation on H.
    """

    def __init__(self, base_z=mpc(0, 1), safety=0.25):
        base_z = big(base_z)
        w0 = _lambda_value(base_z)
        if abs(w0 - mpq(1, 2)) > mpfr(2) ** (-(current_precision() - 24)):
            ref = legendre_fundamental(w0)
        else:
            ref = legendre_fundamental(mpq(1, 2))
        self.safety = safety
        self.base_z = base_z
        self.equation = legendre_equation()
        self._lifted = lifted_equation()
        self._cache = {base_z: ref}
        self._lock = threading.Lock()
        self.stats = TransportStats()

    def system_at(self, z) -> FundamentalSystem:
        """Equation-gauge system at ``lambda(z)`` (derivatives in w)."""
        z = big(z)
        if not z.imag > 0:
            raise SingularPoint(f"{z} is not in the upper half-plane")
        with self._lock:
            hit = self._cache.get(z)
            if hit is not None:
                return hit
            start = min(self._cache, key=lambda u: _hyperbolic_key(u, z))
            src = self._cache[start]
        path = lambda_image_path(start, z)
        if path.start != src.at:
            path = PathPolyline((src.at,) + path.vertices[1:])
        T, st = transfer_matrix(self.equation, path, safety=self.safety)
        sys = FundamentalSystem(path.end, T @ src.values)
        with self._lock:
            self.stats.merge(st)
            self._cache.setdefault(z, sys)
        return sys

    def values(self, z):
        return self.system_at(z).functions

    def jets(self, z, order: int):
        z = big(z)
        sys = self.system_at(z)
        if order == 0:
            f1, f2 = self.values(z)
            return Jet(z, [f1]), Jet(z, [f2])
        lam1 = form_jet("lambda", z, 1).coeffs[1]
        v = sys.values
        u1 = solution_jets(self._lifted, z, v.a, v.c * lam1, order)
        u2 = solution_jets(self._lifted, z, v.b, v.d * lam1, order)
        return u1, u2

    def vector_sampler(self) -> FunctionSampler:
        return FunctionSampler(self.jets, dim=2, name="legendre pullback")

    def ratio_sampler(self) -> FunctionSampler:
        def jet_fn(z, order):
            u1, u2 = self.jets(z, order)
            return u1 / u2

        return FunctionSampler(jet_fn, name="legendre ratio", domain_hint="upper half-plane")


# ---------------------------------------------------------------------------
# deck transformations


@dataclass
class CoveringData:
    base_z: object
    base_system: FundamentalSystem
    generators: dict  # name -> Mat2 acting on H
    correspondence: dict  # name -> GroupWord in l0, l1
    transfers: dict  # name -> transfer matrix of the lambda-image of base_z -> g base_z
    loop_monodromy: LoopMonodromy
    _probe_transfers: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def lambda_sampler(self) -> FunctionSampler:
        return FunctionSampler(lambda z, order: form_jet("lambda", z, order), name="lambda")

    @property
    def rep(self) -> Rep:
        """Gamma(2) representation read through the correspondence."""
        loops = self.loop_monodromy.rep
        images = {g: rep_extend(loops, w) for g, w in self.correspondence.items()}
        return Rep(("A", "B"), images, "gamma2", dict(self.generators))

    def probe_transfer(self, z):
        """Transfer matrix along the lambda-image of ``base_z -> z``."""
        z = big(z)
        with self._lock:
            hit = self._probe_transfers.get(z)
        if hit is not None:
            return hit
        path = lambda_image_path(self.base_z, z)
        path = PathPolyline((self.base_system.at,) + path.vertices[1:])
        T, _ = transfer_matrix(legendre_equation(), path)
        with self._lock:
            self._probe_transfers[z] = T
        return T

    def word_transfer(self, word: GroupWord):
        """Transfer matrix of the w-loop traced by ``base_z -> word(base_z)``."""
        out = Mat2(mpc(1), mpc(0), mpc(0), mpc(1))
        for sym, e in word.letters:
            step = self.transfers[sym] if e > 0 else self.transfers[sym].inverse()
            for _ in range(abs(e)):
                out = step @ out
        return out


_COVER_CACHE: dict = {}


def covering_data(spec: PuncturedPlaneSpec | None = None, base_z=mpc(0, 1)) -> CoveringData:
    """Match the deck generators A, B with words in l0, l1 by tracing lambda-images."""
    spec = spec or PuncturedPlaneSpec()
    base_z = big(base_z)
    key = (spec, current_precision(), base_z)
    with _REP_LOCK:
        hit = _COVER_CACHE.get(key)
    if hit is not None:
        return hit
    base_w = _lambda_value(base_z)
    if abs(base_w - big(spec.basepoint)) > mpfr(2) ** (-(current_precision() - 24)):
        raise CorrespondenceUnresolved("lambda(base_z) does not match the loop base point")
    base_system = legendre_fundamental(spec.basepoint)
    gens = {"A": GAMMA2_A, "B": GAMMA2_B}
    correspondence, transfers = {}, {}
    for name, g in gens.items():
        path = lambda_image_path(base_z, mobius_apply(g, base_z))
        if not path.closed:
            raise CorrespondenceUnresolved(f"image of the {name} path does not close up")
        path = PathPolyline((base_system.at,) + path.vertices[1:-1] + (base_system.at,), closed=True)
        word = homotopy_word(path)
        if len(word) == 0:
            raise CorrespondenceUnresolved(f"deck generator {name} traced a contractible loop")
        correspondence[name] = word
        transfers[name], _ = transfer_matrix(legendre_equation(), path)
    out = CoveringData(base_z, base_system, gens, correspondence, transfers, loop_monodromy(spec))
    with _REP_LOCK:
        _COVER_CACHE[key] = out
    return out


@dataclass
class DeckReport:
    gamma: Mat2
    word: GroupWord
    z: object
    vector_residual: object
    ratio_residual: object
    F_gamma_z: tuple
    rho_F_z: tuple


def deck_check(cover: CoveringData, gamma: Mat2, z, rep: Rep | None = None) -> DeckReport:
    """Compare ``F(gamma z)`` with ``rho(gamma) F(z)`` for the pulled-back Legendre pair.

    ``F(gamma z)`` is continued along the concatenation of the generator
    loops spelled by gamma followed by the image of ``base_z -> z``;
    ``rho(gamma)`` comes from the independent polygon-loop monodromy.
    """
    z = big(z)
    rep = rep or cover.rep
    word, _sign = gamma2_word(gamma)
    rho, _ = rep_extend(rep, word, return_word=True)
    Tz = cover.probe_transfer(z)
    base = cover.base_system.values
    Fz = (Tz @ base).rows()[0]
    Fgz = (Tz @ cover.word_transfer(word) @ base).rows()[0]
    rho = rho.to_big()
    pred = rho.apply_vec(Fz)
    vec_res = max(abs(a - b) for a, b in zip(Fgz, pred))
    h_gz = INF if Fgz[1] == 0 else Fgz[0] / Fgz[1]
    h_z = INF if Fz[1] == 0 else Fz[0] / Fz[1]
    ratio_res = chordal_distance(h_gz, mobius_apply(rho, h_z))
    return DeckReport(gamma, word, z, vec_res, ratio_res, tuple(Fgz), tuple(pred))
