"""Machine-readable verification reports (schema ``equivmod-report/1``).

Numbers are written as decimal strings; complex numbers as
``{"re", "im", "precision_bits"}``.  Wall-clock data lives only under the
top-level ``"timing"`` key so reports can be compared byte for byte once it is
removed.
"""

from __future__ import annotations

import csv
import io
import json

from gmpy2 import mpc, mpfr, mpq

from .moebius import INF, Mat2
from .numerics import complex_to_json, format_real

SCHEMA = "equivmod-report/1"
RESIDUAL_DIGITS = 30


def to_jsonable(x, digits=None):
    """Recursively convert gmpy2 numbers, matrices and containers."""
    if x is INF:
        return "inf"
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        return format_real(mpfr(x), 17)
    if isinstance(x, mpq):
        return str(x)
    if isinstance(x, mpfr):
        return format_real(x, digits)
    if isinstance(x, (mpc, complex)):
        return complex_to_json(x, digits)
    if isinstance(x, Mat2):
        return [[to_jsonable(v, digits) for v in row] for row in x.rows()]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v, digits) for v in x]
    if hasattr(x, "to_json"):
        return to_jsonable(x.to_json(), digits)
    return str(x)


class Report:
    def __init__(self, command: str, config):
        self.command = command
        self.config = config
        self.checks: list[dict] = []
        self.values: dict = {}
        self.notes: list[str] = []
        self.timing: dict = {}

    def check(self, name, residual, tolerance, inputs=None, comparator="<="):
        """Record a check; ``comparator=">="`` marks a lower bound (negative controls)."""
        residual = mpfr(residual)
        tolerance = mpfr(tolerance)
        ok = residual <= tolerance if comparator == "<=" else residual >= tolerance
        self.checks.append({
            "name": name,
            "inputs": inputs or {},
            "residual": residual,
            "tolerance": tolerance,
            "comparator": comparator,
            "pass": bool(ok),
        })
        return ok

    def extend(self, checks):
        for c in checks:
            self.check(c["name"], c["residual"], c["tolerance"], c.get("inputs"), c.get("comparator", "<="))

    def note(self, text: str):
        if text not in self.notes:
            self.notes.append(text)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self, with_timing=True):
        out = {
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config.to_json(),
            "checks": [
                {
                    "name": c["name"],
                    "inputs": to_jsonable(c["inputs"]),
                    "residual": format_real(c["residual"], RESIDUAL_DIGITS),
                    "tolerance": format_real(c["tolerance"], RESIDUAL_DIGITS),
                    "comparator": c["comparator"],
                    "pass": c["pass"],
                }
                for c in self.checks
            ],
            "values": to_jsonable(self.values),
            "notes": list(self.notes),
            "pass": self.passed,
        }
        if with_timing:
            out["timing"] = {k: round(v, 3) if isinstance(v, float) else v for k, v in self.timing.items()}
        return out

    def render(self, fmt="json") -> str:
        data = self.to_dict()
        if fmt == "json":
            return json.dumps(data, indent=2) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["name", "residual", "comparator", "tolerance", "pass"])
            for c in data["checks"]:
                w.writerow([c["name"], c["residual"], c["comparator"], c["tolerance"], c["pass"]])
            return buf.getvalue()
        lines = [f"{data['command']}: {'PASS' if data['pass'] else 'FAIL'}"]
        for c in data["checks"]:
            mark = "ok  " if c["pass"] else "FAIL"
            lines.append(f"  [{mark}] {c['name']}: {c['residual']} {c['comparator']} {c['tolerance']}")
        for k, v in data["values"].items():
            lines.append(f"  {k} = {json.dumps(v)}")
        for n in data["notes"]:
            lines.append(f"  note: {n}")
        return "\n".join(lines) + "\n"


def strip_timing(data: dict) -> dict:
    return {k: v for k, v in data.items() if k != "timing"}
