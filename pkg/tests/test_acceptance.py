"""Acceptance battery at seed 42, one PASS/FAIL line per criterion.

Criteria 1-10 run in-process through the same code path as ``equivmod suite``;
criterion 11 runs ``equivmod suite --seed 42`` in a fresh interpreter and
compares its report with the in-process one once timing is removed.
Wall-clock budgets are printed next to the measured time but never decide
pass or fail.
"""

import json
import subprocess
import sys

import pytest
from gmpy2 import mpfr

from equivmod.config import RunConfig
from equivmod.report import Report, strip_timing
from equivmod.suite import BUDGETS, CRITERIA, criterion_passed, run_suite

SEED = 42

TITLES = {
    1: "Schwarzian of Moebius maps and exp",
    2: "S(y1/y2) = 2g for five equations",
    3: "Schwarzian cocycle for j and the Legendre ratio",
    4: "Bol's identity, r = 0..2, degree <= 5",
    5: "ODE engine: drift, closed form, step halving",
    6: "Legendre monodromy traces and homotopy invariance",
    7: "deck transformations and equivariance",
    8: "reconstruction round trip for three candidates",
    9: "weight shift by Delta",
    10: "negative controls (E2, corrupted rho)",
    11: "determinism of suite --seed 42",
}


def _emit(capsys, line):
    with capsys.disabled():
        print(line)


def _worst_ratio(report: Report, k: int):
    """Largest residual/tolerance over the upper-bound checks of criterion k."""
    worst = mpfr(0)
    for c in report.checks:
        if c["name"].startswith(f"c{k}.") and c["comparator"] == "<=" and c["tolerance"] > 0:
            worst = max(worst, c["residual"] / c["tolerance"])
    return worst


@pytest.fixture(scope="module")
def suite_report():
    return run_suite(RunConfig(seed=SEED))


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, suite_report, capsys):
    ok = criterion_passed(suite_report, k)
    elapsed = suite_report.timing[f"criterion_{k}"]
    n = sum(1 for c in suite_report.checks if c["name"].startswith(f"c{k}."))
    _emit(capsys, f"\n[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {TITLES[k]} "
                  f"({n} checks, worst residual/tolerance {float(_worst_ratio(suite_report, k)):.2e}, "
                  f"{elapsed:.1f}s of {BUDGETS[k]}s budget)")
    failed = [c["name"] for c in suite_report.checks if c["name"].startswith(f"c{k}.") and not c["pass"]]
    assert ok, f"criterion {k} failed checks: {failed}"


def test_criterion_11_determinism(suite_report, capsys):
    proc = subprocess.run(
        [sys.executable, "-m", "equivmod.cli", "suite", "--seed", str(SEED)],
        capture_output=True, text=True, check=False,
    )
    fresh = json.loads(proc.stdout)
    here = json.dumps(strip_timing(suite_report.to_dict()), indent=2)
    there = json.dumps(strip_timing(fresh), indent=2)
    ok = here == there and proc.returncode == 0
    _emit(capsys, f"\n[{'PASS' if ok else 'FAIL'}] criterion 11: {TITLES[11]} "
                  f"(in-process vs fresh process, {len(here)} bytes compared)")
    assert proc.returncode == 0, proc.stderr
    assert here == there
