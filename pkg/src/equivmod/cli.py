"""Command-line entry point: ``equivmod <subcommand> [flags]``.

Every subcommand writes one report (JSON by default) and exits with 0 when
every check passes, 1 when a check fails and 2 on bad usage.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

from gmpy2 import mpc, mpfr, mpq

from . import __version__
from .config import TOLERANCE_OFFSETS, RunConfig, UsageError, env_overrides
from .equivariant import (
    EquivariantCandidate,
    VmfCandidate,
    equivariance_residual,
    reconstruct,
    vmf_residual,
    weight_shift,
)
from .errors import EquivmodError
from .legendre import (
    PullbackSampler,
    PuncturedPlaneSpec,
    covering_data,
    deck_check,
    legendre_fundamental,
    loop_monodromy,
)
from .moebius import GAMMA2_A, GAMMA2_B, GroupWord, Mat2, Rep, automorphy_factor, mobius_apply
from .numerics import parse_complex, working_precision
from .qforms import FORMS, eval_form, form_sampler, terms_needed
from .report import Report
from .sampler import from_jet_function, mobius_sampler, polynomial_sampler
from .schwarz import bol_sides, schwarzian
from .suite import CRITERIA, run_suite, sample_points

SUBCOMMANDS = (
    "schwarzian", "bol", "slash", "modform", "monodromy",
    "equivariance", "vmf", "reconstruct", "deckcheck", "suite",
)
DEFINING = Rep(("A", "B"), {"A": GAMMA2_A, "B": GAMMA2_B}, "gamma2")
TWIST = Mat2(2, 1, 1, 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _complex(text):
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _matrix(text):
    parts = [p for p in text.replace(";", ",").replace(" ", ",").split(",") if p]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("matrix needs four entries a,b,c,d")
    try:
        return Mat2(*(int(p) for p in parts))
    except ValueError:
        return Mat2(*(parse_complex(p) for p in parts))


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    g.add_argument("--precision", type=int, default=s, help="working precision in bits (default 256)")
    g.add_argument("--jet-order", type=int, default=s, help="jet order for pointwise derivatives")
    g.add_argument("--terms", type=int, default=s, help="q-series truncation (default: sized per query)")
    g.add_argument("--safety", type=float, default=s, help="ODE step as a fraction of the convergence radius")
    g.add_argument("--seed", type=int, default=s, help="seed for random probe points")
    g.add_argument("--format", choices=("json", "csv", "pretty"), default=s)
    g.add_argument("--out", default=s, help="write the report to this file instead of stdout")
    for cls in TOLERANCE_OFFSETS:
        g.add_argument(f"--tol-{cls}", type=float, default=s, dest=f"tol_{cls}",
                       help=f"override the {cls} tolerance")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="equivmod", parents=[common],
                     description="Verify equivariant functions and vector-valued modular forms numerically.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("schwarzian", parents=[common], help="Schwarzian derivative of a named function")
    p.add_argument("--fn", required=True, choices=("exp", "mobius", "identity", "j", "lambda", "legendre-ratio"))
    p.add_argument("--matrix", type=_matrix, default=TWIST, help="Moebius matrix for --fn mobius")
    p.add_argument("--at", type=_complex, required=True)
    p.add_argument("--expect", type=_complex, help="expected value (known for exp, mobius, identity)")

    p = sub.add_parser("bol", parents=[common], help="residual of Bol's identity for a polynomial")
    p.add_argument("--poly", required=True, help="coefficients c0,c1,... in increasing degree")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--matrix", type=_matrix, required=True)
    p.add_argument("--at", type=_complex, required=True)
    p.add_argument("--explore", action="store_true", help="allow det != 1 (reported, never checked)")

    p = sub.add_parser("slash", parents=[common], help="slash a modular form and test automorphy")
    p.add_argument("--form", required=True, choices=sorted(FORMS))
    p.add_argument("--weight", type=int, help="slash weight (default: the form's weight)")
    p.add_argument("--matrix", type=_matrix, required=True)
    p.add_argument("--at", type=_complex, required=True)

    p = sub.add_parser("modform", parents=[common], help="evaluate a q-expansion")
    p.add_argument("--name", required=True, choices=sorted(FORMS))
    p.add_argument("--at", type=_complex, required=True)

    p = sub.add_parser("monodromy", parents=[common], help="monodromy of the Legendre equation")
    p.add_argument("--equation", choices=("legendre", "legendre-normal"), default="legendre")
    p.add_argument("--loop", choices=("around0", "around1", "both"), default="both")
    p.add_argument("--base", type=_complex, default=mpc(mpq(1, 2)))
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--sides", type=int, default=32)

    p = sub.add_parser("equivariance", parents=[common], help="equivariance residuals of a candidate")
    p.add_argument("--candidate", choices=("trivial", "twisted", "legendre"), default="trivial")
    p.add_argument("--group", choices=("gamma2", "free"), default="gamma2")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--corrupt", action="store_true", help="replace rho(A) by the identity (negative control)")

    p = sub.add_parser("vmf", parents=[common], help="vector-valued modular form residuals")
    p.add_argument("--candidate", choices=("legendre", "legendre-delta", "trivial"), default="legendre")
    p.add_argument("--samples", type=int, default=5)

    p = sub.add_parser("reconstruct", parents=[common], help="weight -1 form from an equivariant function")
    p.add_argument("--candidate", choices=("trivial", "twisted", "legendre"), default="trivial")
    p.add_argument("--base", type=_complex, default=mpc(0, 1))
    p.add_argument("--probes", type=int, default=23)

    p = sub.add_parser("deckcheck", parents=[common], help="F(gamma z) = rho(gamma) F(z) for gamma in Gamma(2)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--word", help="word in A, B such as 'A B^-1'")
    grp.add_argument("--matrix", type=_matrix)
    p.add_argument("--at", type=_complex, action="append", help="point in H (repeatable)")
    p.add_argument("--samples", type=int, default=5, help="random points when --at is absent")

    p = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    p.add_argument("--criteria", default="", help="comma-separated subset of 1-10 (default: all)")
    return parser


def make_config(args, environ=None) -> RunConfig:
    kw = env_overrides(environ)
    flags = {
        "precision": "precision_bits", "jet_order": "jet_order", "terms": "truncation",
        "safety": "safety_factor", "seed": "seed", "format": "output_format",
    }
    for flag, attr in flags.items():
        if hasattr(args, flag):
            kw[attr] = getattr(args, flag)
    tols = dict(kw.get("tolerances", {}))
    for cls in TOLERANCE_OFFSETS:
        if hasattr(args, f"tol_{cls}"):
            tols[cls] = getattr(args, f"tol_{cls}")
    if tols:
        kw["tolerances"] = tols
    return RunConfig(**kw)


def _random_points(config, n, tag):
    """Reproducible probe points in the box [-1, 1] x [0.8, 2] of H."""
    return sample_points(random.Random(f"equivmod:{config.seed}:{tag}"), n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_schwarzian(args, config, report):
    expected = {"exp": mpc(mpq(-1, 2)), "mobius": mpc(0), "identity": mpc(0)}
    if args.fn == "exp":
        f = from_jet_function(lambda t: t.exp(), name="exp")
    elif args.fn == "mobius":
        f = mobius_sampler(args.matrix)
    elif args.fn == "identity":
        f = from_jet_function(lambda t: t, name="z")
    elif args.fn == "legendre-ratio":
        f = PullbackSampler(safety=config.safety_factor).ratio_sampler()
    else:
        f = form_sampler(args.fn, config.truncation)
    value = schwarzian(f, args.at, config.jet_order)
    report.values["value"] = value
    target = args.expect if args.expect is not None else expected.get(args.fn)
    if target is not None:
        report.check("schwarzian", abs(value - target), config.tolerance("single"),
                     {"fn": args.fn, "z": args.at, "expected": target})


def cmd_bol(args, config, report):
    coeffs = [parse_complex(c) for c in args.poly.split(",") if c.strip()]
    F = polynomial_sampler(coeffs)
    lhs, rhs = bol_sides(F, args.r, args.matrix, args.at, strict=not args.explore)
    report.values.update({"lhs": lhs, "rhs": rhs, "det": args.matrix.det()})
    inputs = {"r": args.r, "matrix": args.matrix, "z": args.at}
    if args.matrix.det() == 1:
        report.check("bol", abs(lhs - rhs), config.tolerance("bol"), inputs)
    else:
        report.values["residual"] = abs(lhs - rhs)
        report.note("det != 1: exploratory evaluation, not checked")


def cmd_slash(args, config, report):
    weight = FORMS[args.form][0] if args.weight is None else args.weight
    f = form_sampler(args.form, config.truncation)
    z = args.at
    j = automorphy_factor(args.matrix, z)
    slashed = j ** (-weight) * f(mobius_apply(args.matrix, z))
    report.values.update({"slashed": slashed, "value": f(z), "weight": weight})
    report.check("automorphy", abs(slashed - f(z)), config.tolerance("cocycle"),
                 {"form": args.form, "weight": weight, "matrix": args.matrix, "z": z})
    if args.form == "E2":
        report.note("E2 is quasi-modular; the automorphy check is expected to fail")


def cmd_modform(args, config, report):
    truncation = config.truncation or terms_needed(args.name, args.at)
    value, bound = eval_form(args.name, args.at, truncation)
    report.values.update({"value": value, "tail_bound": bound, "truncation": truncation})
    if bound is None:
        report.note("tail bound unavailable for Im z < 0.5")


def cmd_monodromy(args, config, report):
    base = args.base
    if base.imag != 0 or not 0 < base.real < 1:
        raise UsageError("--base must be real and strictly between 0 and 1")
    r = mpq(args.radius).limit_denominator(10**6)
    spec = PuncturedPlaneSpec(mpq(base.real), r, r, args.sides)
    gauge = "equation" if args.equation == "legendre" else "normal"
    started = time.perf_counter()
    lm = loop_monodromy(spec, gauge, config.safety_factor)
    report.timing["transport_seconds"] = time.perf_counter() - started
    names = {"around0": ["l0"], "around1": ["l1"], "both": ["l0", "l1"]}[args.loop]
    ref = legendre_fundamental(spec.basepoint, gauge)
    report.values["reference"] = ref.values
    for name in names:
        m = lm.matrices[name]
        report.values[name] = {
            "matrix": m, "trace": m.trace(), "det": m.det(),
            "steps": lm.stats[name].steps, "orientation": "counterclockwise",
        }
        report.check(f"det[{name}]", abs(m.det() - 1), config.tolerance("drift"), {"loop": name})
    report.note("F_continued = M F; M(l1 then l2) = M(l1) M(l2)")


def _candidate(name, group, corrupt, config):
    rep = DEFINING if group == "gamma2" else Rep(("A", "B"), DEFINING.images, "free", DEFINING.domain)
    if name == "trivial":
        cand = EquivariantCandidate(from_jet_function(lambda t: t, name="z"), rep, "trivial")
        tol_cls = "single"
    elif name == "twisted":
        images = {k: TWIST @ v @ TWIST.inverse() for k, v in rep.images.items()}
        cand = EquivariantCandidate(mobius_sampler(TWIST), rep.with_images(images), "twisted")
        tol_cls = "single"
    else:
        cover = covering_data()
        rep = cover.rep if group == "gamma2" else Rep(("A", "B"), cover.rep.images, "free", DEFINING.domain)
        sampler = PullbackSampler(safety=config.safety_factor).ratio_sampler()
        cand = EquivariantCandidate(sampler, rep, "legendre ratio")
        tol_cls = "deck"
    if corrupt:
        one = Mat2(1, 0, 0, 1)
        cand = EquivariantCandidate(cand.h, cand.group.with_images({"A": one, "B": cand.group.images["B"]}),
                                    cand.name + " (rho(A) = 1)")
    return cand, tol_cls


def cmd_equivariance(args, config, report):
    cand, tol_cls = _candidate(args.candidate, args.group, args.corrupt, config)
    tol = config.tolerance(tol_cls)
    for z in _random_points(config, args.samples, args.command):
        for g in ("A", "B"):
            res = equivariance_residual(cand, GroupWord(((g, 1),)), z)
            report.check(f"equivariance[{g}]", res, tol, {"z": z})
    if args.corrupt:
        report.note("negative control: rho(A) replaced by the identity, failures are expected for A")


def cmd_vmf(args, config, report):
    if args.candidate == "trivial":
        tol = config.tolerance("roundtrip")
        trivial, _ = _candidate("trivial", "gamma2", False, config)
        cand = reconstruct(trivial, mpc(0, 1), _random_points(config, 6, "vmf-fit"), tolerance=tol).vmf()
    else:
        cover = covering_data()
        sampler = PullbackSampler(safety=config.safety_factor).vector_sampler()
        cand = VmfCandidate(sampler, 0, cover.rep, "legendre pair")
        if args.candidate == "legendre-delta":
            cand = weight_shift(cand, form_sampler("Delta", config.truncation), 12)
        tol = config.tolerance("deck")
    report.values["weight"] = cand.weight
    for z in _random_points(config, args.samples, args.command):
        for g in ("A", "B"):
            report.check(f"vmf[{g}]", vmf_residual(cand, g, z), tol, {"z": z, "weight": cand.weight})


def cmd_reconstruct(args, config, report):
    if args.probes < 4:
        raise UsageError("--probes must be at least 4 (three to fit, the rest to verify)")
    cand, _ = _candidate(args.candidate, "gamma2", False, config)
    tol = config.tolerance("roundtrip")
    probes = _random_points(config, args.probes, args.command)
    res = reconstruct(cand, args.base, probes, tolerance=tol, safety=config.safety_factor)
    report.extend(res.checks)
    held = [p for p in probes if p not in res.fit_probes]
    vmf = res.vmf()
    for g in ("A", "B"):
        worst = max(vmf_residual(vmf, g, z) for z in held)
        report.check(f"vmf_weight-1[{g}]", worst, tol, {"points": len(held)})
    report.values.update({
        "alpha": res.alpha,
        "rho_recovered": dict(res.rho_recovered.images),
        "g_at_base": res.g_at_base.value,
        "fit_probes": list(res.fit_probes),
    })


def cmd_deckcheck(args, config, report):
    cover = covering_data()
    rep = cover.rep
    if args.matrix is not None:
        gamma = args.matrix
    else:
        word = GroupWord.parse(args.word or "A", ("A", "B"))
        gamma = rep.element(word)
    points = args.at or _random_points(config, args.samples, args.command)
    tol = config.tolerance("deck")
    report.values["correspondence"] = {k: str(v) for k, v in cover.correspondence.items()}
    report.values["gamma"] = gamma
    for z in points:
        r = deck_check(cover, gamma, z, rep)
        report.check("deck_vector", r.vector_residual, tol, {"z": z, "word": str(r.word)})
        report.check("deck_ratio", r.ratio_residual, tol, {"z": z, "word": str(r.word)})


def cmd_suite(args, config, report):
    crit = None
    if args.criteria:
        try:
            crit = sorted({int(c) for c in args.criteria.split(",") if c.strip()})
        except ValueError as exc:
            raise UsageError(f"--criteria: {exc}") from exc
        bad = [c for c in crit if c not in CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    inner = run_suite(config, crit)
    report.checks = inner.checks
    report.values = inner.values
    report.notes = inner.notes
    report.timing.update(inner.timing)


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = make_config(args, environ)
    except UsageError as exc:
        print(f"equivmod: usage error: {exc}", file=sys.stderr)
        return 2
    report = Report(args.command, config)
    started = time.perf_counter()
    try:
        with working_precision(config.precision_bits):
            COMMANDS[args.command](args, config, report)
    except UsageError as exc:
        print(f"equivmod: usage error: {exc}", file=sys.stderr)
        return 2
    except EquivmodError as exc:
        report.check("evaluation", mpfr("inf"), mpfr(0), {"error": type(exc).__name__})
        report.note(f"{type(exc).__name__}: {exc}")
    report.timing["wall_seconds"] = time.perf_counter() - started
    text = report.render(config.output_format)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
