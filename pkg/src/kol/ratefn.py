"""State-dependent jump-rate families.

The termination clock fires at rate Lambda(x) where x is the internal state.
Four families are supported:

* PiecewiseConstant -- c_plus on x >= 0, zero on x < 0 (the half-line
  indicator rate; the value at exactly x = 0 is the x >= 0 branch).
* Arctan            -- arctan(stiffness * x) + offset, a smooth sigmoid
  ramp between offset - pi/2 and offset + pi/2.
* Exponential       -- prefactor * exp(-alpha0 * (x - y0) / y0), capped at
  max_rate so the clock integrator cannot blow up.
* Tabulated         -- piecewise-linear interpolation through sorted
  (x, rate) knots, clamped to the end values outside the knot range.

All specs are immutable; evaluation is pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidSpecError
from . import _kernels

__all__ = [
    "PiecewiseConstant", "Arctan", "Exponential", "Tabulated",
    "AdmissibilityReport", "eval_rate", "eval_rate_array", "validate_rate",
    "rate_from_dict", "rate_to_dict", "kernel_args",
]

HALF_PI = math.pi / 2.0


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidSpecError(msg)


@dataclass(frozen=True)
class PiecewiseConstant:
    """Rate c_plus for x >= 0, zero for x < 0."""
    c_plus: float = 1.0

    def __post_init__(self):
        _require(math.isfinite(self.c_plus) and self.c_plus >= 0.0,
                 f"c_plus must be finite and >= 0, got {self.c_plus}")

    @property
    def bound(self) -> float:
        return self.c_plus


@dataclass(frozen=True)
class Arctan:
    """arctan(stiffness * x) + offset; monotone nondecreasing in x."""
    stiffness: float
    offset: float = HALF_PI

    def __post_init__(self):
        _require(math.isfinite(self.stiffness) and self.stiffness >= 0.0,
                 f"stiffness must be finite and >= 0, got {self.stiffness}")
        _require(math.isfinite(self.offset) and self.offset >= HALF_PI,
                 f"offset must be >= pi/2 so the rate stays nonnegative, got {self.offset}")

    @property
    def bound(self) -> float:
        return self.offset + HALF_PI


@dataclass(frozen=True)
class Exponential:
    """prefactor * exp(-alpha0 * (x - y0) / y0), capped at max_rate.

    The uncapped form is unbounded on one side, which would let a single
    step add an astronomically large clock increment; the cap (default 1e6)
    keeps the integrator meaningful and is recorded in the spec.
    """
    prefactor: float
    alpha0: float
    y0: float
    max_rate: float = 1.0e6

    def __post_init__(self):
        _require(math.isfinite(self.prefactor) and self.prefactor >= 0.0,
                 f"prefactor must be finite and >= 0, got {self.prefactor}")
        _require(math.isfinite(self.alpha0), "alpha0 must be finite")
        _require(math.isfinite(self.y0) and self.y0 != 0.0,
                 "y0 must be finite and nonzero (it divides the exponent)")
        _require(math.isfinite(self.max_rate) and self.max_rate > 0.0,
                 "max_rate must be finite and positive")

    @property
    def bound(self) -> float:
        return self.max_rate


@dataclass(frozen=True)
class Tabulated:
    """Clamped piecewise-linear interpolation through (x, rate) knots."""
    knots: tuple = field(default=())

    def __post_init__(self):
        knots = tuple((float(x), float(r)) for x, r in self.knots)
        object.__setattr__(self, "knots", knots)
        _require(len(knots) >= 1, "tabulated rate needs at least one knot")
        xs = [x for x, _ in knots]
        _require(all(math.isfinite(x) for x in xs), "knot positions must be finite")
        _require(all(xs[i] < xs[i + 1] for i in range(len(xs) - 1)),
                 "knot positions must be strictly increasing")
        for x, r in knots:
            _require(math.isfinite(r) and r >= 0.0,
                     f"knot rate at x={x} must be finite and >= 0, got {r}")

    @property
    def bound(self) -> float:
        return max(r for _, r in self.knots)


RateSpec = (PiecewiseConstant, Arctan, Exponential, Tabulated)


@dataclass(frozen=True)
class AdmissibilityReport:
    nonnegative: bool
    bounded: bool
    bound: float
    strictly_admissible: bool
    c_plus: float | None
    notes: str = ""


def kernel_args(spec):
    """Encode a rate spec for the compiled kernel: (kind, p0..p3, xs, rs)."""
    empty = np.zeros(1)
    if isinstance(spec, PiecewiseConstant):
        return _kernels.KIND_PIECEWISE, spec.c_plus, 0.0, 0.0, 0.0, empty, empty
    if isinstance(spec, Arctan):
        return _kernels.KIND_ARCTAN, spec.stiffness, spec.offset, 0.0, 0.0, empty, empty
    if isinstance(spec, Exponential):
        return (_kernels.KIND_EXPONENTIAL, spec.prefactor, spec.alpha0,
                spec.y0, spec.max_rate, empty, empty)
    if isinstance(spec, Tabulated):
        xs = np.array([x for x, _ in spec.knots], dtype=np.float64)
        rs = np.array([r for _, r in spec.knots], dtype=np.float64)
        return _kernels.KIND_TABULATED, 0.0, 0.0, 0.0, 0.0, xs, rs
    raise InvalidSpecError(f"unknown rate spec type {type(spec).__name__}")


def eval_rate(spec, x: float) -> float:
    """Lambda(x) for a validated spec.  Non-finite x is a domain error."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"rate evaluation needs finite x, got {x}")
    if isinstance(spec, PiecewiseConstant):
        return spec.c_plus if x >= 0.0 else 0.0
    if isinstance(spec, Arctan):
        return math.atan(spec.stiffness * x) + spec.offset
    if isinstance(spec, Exponential):
        arg = -spec.alpha0 * (x - spec.y0) / spec.y0
        if arg > 700.0:
            return spec.max_rate
        r = spec.prefactor * math.exp(arg)
        return spec.max_rate if r > spec.max_rate else r
    if isinstance(spec, Tabulated):
        xs = np.array([k[0] for k in spec.knots])
        rs = np.array([k[1] for k in spec.knots])
        n = xs.shape[0]
        if x <= xs[0]:
            return float(rs[0])
        if x >= xs[n - 1]:
            return float(rs[n - 1])
        j = int(np.searchsorted(xs, x))
        w = (x - xs[j - 1]) / (xs[j] - xs[j - 1])
        return float(rs[j - 1] + w * (rs[j] - rs[j - 1]))
    raise InvalidSpecError(f"unknown rate spec type {type(spec).__name__}")


def eval_rate_array(spec, x: np.ndarray) -> np.ndarray:
    """Vectorized eval_rate over a float array (used by the PDE grid)."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("rate evaluation needs finite x")
    if isinstance(spec, PiecewiseConstant):
        return np.where(x >= 0.0, spec.c_plus, 0.0)
    if isinstance(spec, Arctan):
        return np.arctan(spec.stiffness * x) + spec.offset
    if isinstance(spec, Exponential):
        arg = -spec.alpha0 * (x - spec.y0) / spec.y0
        out = np.where(arg > 700.0, spec.max_rate,
                       spec.prefactor * np.exp(np.minimum(arg, 700.0)))
        return np.minimum(out, spec.max_rate)
    if isinstance(spec, Tabulated):
        xs = np.array([k[0] for k in spec.knots])
        rs = np.array([k[1] for k in spec.knots])
        return np.interp(x, xs, rs)
    raise InvalidSpecError(f"unknown rate spec type {type(spec).__name__}")


def validate_rate(spec) -> AdmissibilityReport:
    """Nonnegativity / boundedness / strict-admissibility report.

    Strict admissibility means: Lambda(x) >= C+ > 0 for every x >= 0 and
    Lambda(x) = 0 for every x < 0.  The report carries the largest valid C+
    when admissible.  Smooth families (Arctan, Exponential) are never
    strictly admissible (they are positive on x < 0) but remain accepted
    for simulation.
    """
    if isinstance(spec, PiecewiseConstant):
        adm = spec.c_plus > 0.0
        return AdmissibilityReport(
            nonnegative=True, bounded=True, bound=spec.bound,
            strictly_admissible=adm, c_plus=spec.c_plus if adm else None,
            notes="" if adm else "c_plus = 0 leaves no positive lower bound on x >= 0")
    if isinstance(spec, Arctan):
        return AdmissibilityReport(
            nonnegative=True, bounded=True, bound=spec.bound,
            strictly_admissible=False, c_plus=None,
            notes="positive for x < 0 (sigmoid never reaches zero); accepted for simulation")
    if isinstance(spec, Exponential):
        return AdmissibilityReport(
            nonnegative=True, bounded=True, bound=spec.bound,
            strictly_admissible=False, c_plus=None,
            notes="positive everywhere; accepted for simulation")
    if isinstance(spec, Tabulated):
        return _validate_tabulated(spec)
    raise InvalidSpecError(f"unknown rate spec type {type(spec).__name__}")


def _validate_tabulated(spec: Tabulated) -> AdmissibilityReport:
    xs = [k[0] for k in spec.knots]
    rs = [k[1] for k in spec.knots]
    # Zero on the negative axis?  Linear pieces make this a knot condition:
    # the left clamp region always reaches x < 0, so rs[0] must vanish;
    # every knot with x < 0 must vanish; and a segment straddling zero must
    # not rise before x = 0.
    zero_neg = rs[0] == 0.0
    for x, r in zip(xs, rs):
        if x < 0.0 and r > 0.0:
            zero_neg = False
    for i in range(len(xs) - 1):
        if xs[i] < 0.0 < xs[i + 1] and rs[i + 1] > 0.0:
            zero_neg = False  # interpolation is positive on (x_i, 0)
    # infimum over x >= 0: attained at a knot in [0, inf), at x = 0 itself,
    # or at the right clamp.
    cands = [r for x, r in zip(xs, rs) if x >= 0.0]
    cands.append(eval_rate(spec, 0.0))
    cands.append(rs[-1])
    c_plus = min(cands)
    adm = zero_neg and c_plus > 0.0
    return AdmissibilityReport(
        nonnegative=True, bounded=True, bound=spec.bound,
        strictly_admissible=adm, c_plus=c_plus if adm else None,
        notes="" if adm else "tabulated rate is not an exact half-line indicator")


_KINDS = {
    "piecewise": PiecewiseConstant,
    "arctan": Arctan,
    "exponential": Exponential,
    "tabulated": Tabulated,
}


def rate_to_dict(spec) -> dict:
    if isinstance(spec, PiecewiseConstant):
        return {"kind": "piecewise", "c_plus": spec.c_plus}
    if isinstance(spec, Arctan):
        return {"kind": "arctan", "stiffness": spec.stiffness, "offset": spec.offset}
    if isinstance(spec, Exponential):
        return {"kind": "exponential", "prefactor": spec.prefactor,
                "alpha0": spec.alpha0, "y0": spec.y0, "max_rate": spec.max_rate}
    if isinstance(spec, Tabulated):
        return {"kind": "tabulated", "knots": [[x, r] for x, r in spec.knots]}
    raise InvalidSpecError(f"unknown rate spec type {type(spec).__name__}")


def rate_from_dict(d: dict):
    if not isinstance(d, dict) or "kind" not in d:
        raise InvalidSpecError("rate spec dict needs a 'kind' field")
    kind = d["kind"]
    if kind not in _KINDS:
        raise InvalidSpecError(f"unknown rate kind {kind!r}")
    body = {k: v for k, v in d.items() if k != "kind"}
    if kind == "tabulated":
        body["knots"] = tuple((x, r) for x, r in body.get("knots", ()))
    try:
        return _KINDS[kind](**body)
    except TypeError as e:
        raise InvalidSpecError(f"bad fields for rate kind {kind!r}: {e}") from None
