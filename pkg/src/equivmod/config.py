"""Run configuration shared by the CLI and the acceptance suite."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

from gmpy2 import mpfr

from .numerics import DEFAULT_JET_ORDER, DEFAULT_PRECISION, MIN_PRECISION

ENV_PREFIX = "EQUIVMOD_"
FORMATS = ("json", "csv", "pretty")

# Tolerance classes: tolerance = 2^-(precision_bits - offset).  The offsets are
# cancellation budgets measured at 256 bits with some margin on top.
TOLERANCE_OFFSETS = {
    "single": 16,  # one formula evaluated from a jet
    "bol": 36,  # both sides of Bol's identity on polynomials
    "drift": 40,  # Wronskian drift and det(M) - 1 after transport
    "series": 56,  # ODE endpoints, series-solution identities, ratios
    "cocycle": 76,  # q-series pipelines composed with Moebius jets
    "monodromy": 106,  # loop traces, homotopy invariance, two precisions
    "deck": 106,  # deck transformations and weight-shifted residuals
    "roundtrip": 116,  # reconstruction fit, conjugation and recovered VMF
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    precision_bits: int = DEFAULT_PRECISION
    jet_order: int = DEFAULT_JET_ORDER
    truncation: int | None = None  # q-series terms; None sizes them per query
    safety_factor: float = 0.25
    tolerances: dict = field(default_factory=dict)  # class -> override (float)
    seed: int = 0
    output_format: str = "json"

    def __post_init__(self):
        if self.precision_bits < MIN_PRECISION:
            raise UsageError(f"precision must be at least {MIN_PRECISION} bits")
        if self.jet_order < 4:
            raise UsageError("jet order must be at least 4 (the Schwarzian needs order 3 plus one)")
        if self.truncation is not None and self.truncation < 1:
            raise UsageError("truncation must be positive")
        if not 0 < self.safety_factor <= 0.5:
            raise UsageError("safety factor must lie in (0, 0.5]")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")
        if self.output_format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}")
        for name, value in self.tolerances.items():
            if name not in TOLERANCE_OFFSETS:
                raise UsageError(f"unknown tolerance class {name!r}")
            if not value > 0:
                raise UsageError(f"tolerance for {name!r} must be positive")

    def tolerance(self, cls: str):
        if cls in self.tolerances:
            return mpfr(self.tolerances[cls])
        return mpfr(2) ** -(self.precision_bits - TOLERANCE_OFFSETS[cls])

    def to_json(self):
        out = asdict(self)
        out["tolerances"] = {k: self.tolerances[k] for k in sorted(self.tolerances)}
        return out


def env_overrides(environ=None) -> dict:
    """Keyword overrides for RunConfig read from EQUIVMOD_* variables."""
    env = os.environ if environ is None else environ
    out: dict = {}
    casts = {
        "PRECISION": ("precision_bits", int),
        "JET_ORDER": ("jet_order", int),
        "TERMS": ("truncation", int),
        "SAFETY": ("safety_factor", float),
        "SEED": ("seed", int),
        "FORMAT": ("output_format", str),
    }
    for key, (attr, cast) in casts.items():
        raw = env.get(ENV_PREFIX + key)
        if raw is None or raw == "":
            continue
        try:
            out[attr] = cast(raw)
        except ValueError as exc:
            raise UsageError(f"{ENV_PREFIX}{key}: {exc}") from exc
    tols = {}
    for cls in TOLERANCE_OFFSETS:
        raw = env.get(f"{ENV_PREFIX}TOL_{cls.upper()}")
        if raw:
            try:
                tols[cls] = float(raw)
            except ValueError as exc:
                raise UsageError(f"{ENV_PREFIX}TOL_{cls.upper()}: {exc}") from exc
    if tols:
        out["tolerances"] = tols
    return out
