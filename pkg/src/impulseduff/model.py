"""Equation data: coefficient polynomials, impulse schedule, validated config."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

#: schedules with |t2 - t1 - 1/2| below this are flagged degenerate
DEGENERACY_TOL = 1e-12


class ConfigError(ValueError):
    """Raised when a configuration violates a structural invariant."""


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial with period 1.

    f(t) = mean + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t),
    harmonics stored as ((a_1, b_1), (a_2, b_2), ...).
    """

    mean: float = 0.0
    harmonics: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "harmonics",
                           tuple((float(a), float(b)) for a, b in self.harmonics))
        object.__setattr__(self, "mean", float(self.mean))

    def __call__(self, t):
        v = self.mean
        for k, (a, b) in enumerate(self.harmonics, start=1):
            w = TWO_PI * k * t
            v += a * math.cos(w) + b * math.sin(w)
        return v

    def derivative(self, t):
        v = 0.0
        for k, (a, b) in enumerate(self.harmonics, start=1):
            w = TWO_PI * k * t
            v += TWO_PI * k * (-a * math.sin(w) + b * math.cos(w))
        return v

    @property
    def is_zero(self):
        return self.mean == 0.0 and all(a == 0.0 and b == 0.0
                                        for a, b in self.harmonics)


@dataclass(frozen=True)
class ImpulseSchedule:
    """Two velocity-reversal times per unit period, 0 < t1 < t2 < 1.

    The j-th impulse time (j >= 0) is t_{j mod 2} + floor(j / 2); the
    schedule repeats with period 1.
    """

    t1: float
    t2: float

    def __post_init__(self):
        if not (0.0 < self.t1 < 1.0):
            raise ConfigError("t1 in (0,1) violated: t1=%r" % (self.t1,))
        if not (0.0 < self.t2 < 1.0):
            raise ConfigError("t2 in (0,1) violated: t2=%r" % (self.t2,))
        if not self.t1 < self.t2:
            raise ConfigError("t1 < t2 violated: t1=%r t2=%r" % (self.t1, self.t2))

    @property
    def degenerate(self):
        """True when t2 - t1 is (numerically) 1/2, where the leading twist vanishes."""
        return abs(self.t2 - self.t1 - 0.5) < DEGENERACY_TOL

    @property
    def bracket(self):
        """The twist-sign factor 1 - 2 (t2 - t1)."""
        return 1.0 - 2.0 * (self.t2 - self.t1)

    def times_between(self, a, b):
        """Impulse times s with a < s <= b, in increasing order."""
        out = []
        j = math.floor(a)
        while j <= math.ceil(b):
            for base in (self.t1, self.t2):
                s = base + j
                if a < s <= b:
                    out.append(s)
            j += 1
        return out


@dataclass(frozen=True)
class SystemConfig:
    """Validated description of one impulsive oscillator run.

    x'' + x^(2n+1) + sum_{i=0}^{2n} x^i p_i(t) = 0 between impulses,
    velocity reversal x' -> -x' at the scheduled times.
    """

    n: int
    coefficients: tuple  # 2n+1 TrigPoly, index i = 0..2n
    schedule: ImpulseSchedule
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = 0.1
    escape_guard: float = field(default=1e12)

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError("n must be a positive integer, got %r" % (self.n,))
        coeffs = tuple(self.coefficients)
        if len(coeffs) != 2 * self.n + 1:
            raise ConfigError("coefficients must have exactly 2n+1=%d entries, got %d"
                              % (2 * self.n + 1, len(coeffs)))
        for c in coeffs:
            if not isinstance(c, TrigPoly):
                raise ConfigError("coefficients entries must be TrigPoly")
        object.__setattr__(self, "coefficients", coeffs)
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ConfigError("tolerances must be strictly positive")
        s = self.schedule
        cap = min(s.t1, s.t2 - s.t1, 1.0 - s.t2)
        if not (0.0 < self.max_step <= cap):
            raise ConfigError("max_step must lie in (0, %r] so no segment straddles "
                              "an impulse, got %r" % (cap, self.max_step))
        if not self.escape_guard > 0.0:
            raise ConfigError("escape_guard must be positive")

    @property
    def degenerate(self):
        return self.schedule.degenerate

    @property
    def unforced(self):
        return all(c.is_zero for c in self.coefficients)


def eval_coefficient(config, i, t):
    """Value of p_i(t); 1-periodic in t."""
    if not 0 <= i <= 2 * config.n:
        raise IndexError("coefficient index %d out of range 0..%d" % (i, 2 * config.n))
    return config.coefficients[i](t)


# --- config file format -----------------------------------------------------
#
# Single JSON document:
#   {"n": int,
#    "coefficients": [{"mean": float, "harmonics": [[a_k, b_k], ...]}, ...],
#    "impulses": {"t1": float, "t2": float},
#    "integrator": {"abs_tol": float, "rel_tol": float, "max_step": float}}
# Unknown keys rejected at every level.

_TOP_KEYS = {"n", "coefficients", "impulses", "integrator"}
_COEF_KEYS = {"mean", "harmonics"}
_IMP_KEYS = {"t1", "t2"}
_INT_KEYS = {"abs_tol", "rel_tol", "max_step"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError("%s must be a JSON object" % where)
    extra = set(obj) - allowed
    if extra:
        raise ConfigError("unknown keys %s in %s" % (sorted(extra), where))
    missing = allowed - set(obj)
    if missing:
        raise ConfigError("missing keys %s in %s" % (sorted(missing), where))


def config_from_dict(doc):
    _check_keys(doc, _TOP_KEYS, "config")
    coeffs = []
    if not isinstance(doc["coefficients"], list):
        raise ConfigError("coefficients must be an array")
    for j, c in enumerate(doc["coefficients"]):
        _check_keys(c, _COEF_KEYS, "coefficients[%d]" % j)
        harms = c["harmonics"]
        if not all(isinstance(h, list) and len(h) == 2 for h in harms):
            raise ConfigError("harmonics must be an array of [a_k, b_k] pairs")
        coeffs.append(TrigPoly(float(c["mean"]), tuple((float(a), float(b))
                                                       for a, b in harms)))
    imp = doc["impulses"]
    _check_keys(imp, _IMP_KEYS, "impulses")
    integ = doc["integrator"]
    _check_keys(integ, _INT_KEYS, "integrator")
    n = doc["n"]
    if not isinstance(n, int):
        raise ConfigError("n must be an integer")
    return SystemConfig(
        n=n,
        coefficients=tuple(coeffs),
        schedule=ImpulseSchedule(float(imp["t1"]), float(imp["t2"])),
        abs_tol=float(integ["abs_tol"]),
        rel_tol=float(integ["rel_tol"]),
        max_step=float(integ["max_step"]),
    )


def config_to_dict(config):
    return {
        "n": config.n,
        "coefficients": [{"mean": c.mean,
                          "harmonics": [[a, b] for a, b in c.harmonics]}
                         for c in config.coefficients],
        "impulses": {"t1": config.schedule.t1, "t2": config.schedule.t2},
        "integrator": {"abs_tol": config.abs_tol, "rel_tol": config.rel_tol,
                       "max_step": config.max_step},
    }


def load_config(path):
    """Load and validate a config file (see module docstring for the format)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("malformed config file %s: %s" % (path, exc)) from exc
    return config_from_dict(doc)


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def config_hash(config):
    """Stable digest of the canonicalized config (sorted keys, repr floats)."""
    doc = config_to_dict(config)
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
