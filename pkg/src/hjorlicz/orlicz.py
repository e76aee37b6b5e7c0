"""Orlicz functions Psi = e^psi - 1 with stable log-domain evaluation.

Supported families: PowerLaw, ExpPower, HeavyTailLog, ExpSquare and
PiecewiseAffineLog (breakpoints with ln-values and ln-slopes, used for
tower-growth constructions).  Every family exposes

  psi(x)       = ln(1 + Psi(x))
  log_value(x) = ln Psi(x)
  log_deriv(x) = ln of the right derivative of Psi

all vectorized and safe far beyond linear-domain range.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .numutil import (
    LINEAR_LOG_CAP,
    first_true_point,
    log_expm1,
    softplus,
    solve_increasing,
)

OVERFLOW = math.inf  # linear-domain marker when Psi(x) is not representable


class OrliczError(ValueError):
    pass


class DomainError(OrliczError):
    pass


class RangeError(OrliczError):
    pass


def _as_array(x):
    a = np.asarray(x, dtype=float)
    if np.any(a < 0):
        raise DomainError("Orlicz functions are defined on x >= 0")
    return a


def _scalar(x, a):
    return float(a) if np.isscalar(x) or np.ndim(x) == 0 else a


class OrliczFunction:
    """Base class; subclasses implement _psi/_log_value/_log_deriv on arrays."""

    family = "base"

    def psi(self, x):
        a = _as_array(x)
        return _scalar(x, self._psi(a))

    def log_value(self, x):
        a = _as_array(x)
        return _scalar(x, self._log_value(a))

    def log_deriv(self, x):
        a = _as_array(x)
        return _scalar(x, self._log_deriv(a))

    def value(self, x):
        """Psi(x) in linear domain, OVERFLOW marker past exp range."""
        p = self.psi(x)
        a = np.asarray(p)
        out = np.where(a <= LINEAR_LOG_CAP, np.expm1(np.minimum(a, LINEAR_LOG_CAP)), OVERFLOW)
        return _scalar(x, out)

    # -- defaults derived from psi; families override the natural one --

    def _log_value(self, a):
        return log_expm1(self._psi(a))

    def _psi(self, a):
        return softplus(self._log_value(a))

    def _log_deriv(self, a):  # pragma: no cover - every family overrides
        raise NotImplementedError

    def params(self):
        return {}

    def to_record(self):
        rec = {"family": self.family}
        rec.update(self.params())
        return rec

    def label(self):
        ps = ",".join(f"{k}={v:g}" for k, v in self.params().items() if not isinstance(v, list))
        return f"{self.family}({ps})"

    def spec_hash(self):
        blob = json.dumps(self.to_record(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def __repr__(self):
        return f"<{type(self).__name__} {self.label()}>"


@dataclass(frozen=True, repr=False)
class PowerLaw(OrliczFunction):
    """Psi(x) = x^p, p >= 1 for convexity (smaller p is rejected by validate)."""

    p: float

    family = "power_law"

    def __post_init__(self):
        if self.p <= 0:
            raise DomainError("power_law requires p > 0")

    def _log_value(self, a):
        with np.errstate(divide="ignore"):
            return self.p * np.log(a)

    def _log_deriv(self, a):
        with np.errstate(divide="ignore"):
            return math.log(self.p) + (self.p - 1.0) * np.log(a)

    def params(self):
        return {"p": self.p}


@dataclass(frozen=True, repr=False)
class ExpPower(OrliczFunction):
    """Psi(x) = e^{x^alpha} - 1 for alpha in (0, 1].

    For alpha < 1 the raw function is concave near zero; it is replaced below
    the tangency point x_hat (where x Psi'(x) = Psi(x)) by the chord through
    the origin, which keeps the function convex and preserves all values
    above x_hat.
    """

    alpha: float
    threshold: float = field(default=0.0, compare=False)
    _log_chord_slope: float = field(default=-math.inf, compare=False)

    family = "exp_power"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError("exp_power requires alpha in (0, 1]")
        if self.alpha < 1.0:
            x_hat = self._tangency_point()
            object.__setattr__(self, "threshold", x_hat)
            object.__setattr__(
                self, "_log_chord_slope", self._raw_log_value(np.asarray(x_hat)) - math.log(x_hat)
            )

    def _raw_log_value(self, a):
        return log_expm1(a**self.alpha)

    def _raw_log_deriv(self, a):
        with np.errstate(divide="ignore"):
            return math.log(self.alpha) + (self.alpha - 1.0) * np.log(a) + a**self.alpha

    def _tangency_point(self):
        al = self.alpha
        x_star = ((1.0 - al) / al) ** (1.0 / al)  # inflection point of the raw Psi

        def gap(x):
            xa = np.asarray(x, dtype=float)
            return float(math.log(x) + self._raw_log_deriv(xa) - self._raw_log_value(xa))

        return solve_increasing(gap, 0.0, x0=max(x_star, 1e-6), rtol=1e-14)

    def _psi(self, a):
        below = a < self.threshold
        if not np.any(below):
            return a**self.alpha
        chord = np.log1p(np.exp(self._log_chord_slope) * a)
        return np.where(below, chord, a**self.alpha)

    def _log_value(self, a):
        raw = self._raw_log_value(a)
        below = a < self.threshold
        if not np.any(below):
            return raw
        with np.errstate(divide="ignore"):
            chord = self._log_chord_slope + np.log(a)
        return np.where(below, chord, raw)

    def _log_deriv(self, a):
        raw = self._raw_log_deriv(a)
        below = a < self.threshold
        if not np.any(below):
            return raw
        return np.where(below, self._log_chord_slope, raw)

    def params(self):
        return {"alpha": self.alpha, "threshold": self.threshold}


@dataclass(frozen=True, repr=False)
class HeavyTailLog(OrliczFunction):
    """Psi(x) = e^{ln^beta(1+x)} - 1, beta >= 1; identity when beta = 1."""

    beta: float

    family = "heavy_tail_log"

    def __post_init__(self):
        if self.beta < 1.0:
            raise DomainError("heavy_tail_log requires beta >= 1")

    def _psi(self, a):
        return np.log1p(a) ** self.beta

    def _log_deriv(self, a):
        # Psi'(x) = e^{ln^b(1+x)} * b ln^{b-1}(1+x) / (1+x)
        b = self.beta
        l = np.log1p(a)
        with np.errstate(divide="ignore"):
            return l**b + math.log(b) + (b - 1.0) * np.log(l) - l

    def params(self):
        return {"beta": self.beta}


@dataclass(frozen=True, repr=False)
class ExpSquare(OrliczFunction):
    """psi(x) = x^2, i.e. Psi(x) = e^{x^2} - 1; the stock (HJ)-violating case."""

    family = "exp_square"

    def _psi(self, a):
        with np.errstate(over="ignore"):
            return a * a

    def _log_deriv(self, a):
        with np.errstate(divide="ignore", over="ignore"):
            return a * a + np.log(2.0 * a)

    def params(self):
        return {}


@dataclass(frozen=True, repr=False)
class PiecewiseAffineLog(OrliczFunction):
    """Psi affine on [b_i, b_{i+1}) with ln-values/ln-slopes stored.

    breakpoints start at 0 with Psi(0) = 0; the last slope extends to
    infinity.  Linear-domain slopes must be non-decreasing (convexity).
    """

    breakpoints: tuple
    log_values: tuple
    log_slopes: tuple

    family = "piecewise_affine_log"

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.log_values, dtype=float)
        s = np.asarray(self.log_slopes, dtype=float)
        if b.size < 2 or b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be ascending and start at 0")
        if v.size != b.size or s.size != b.size:
            raise DomainError("log_values and log_slopes must match breakpoints in length")
        if not np.isneginf(v[0]):
            raise DomainError("ln Psi(0) must be -inf")
        object.__setattr__(self, "breakpoints", tuple(b))
        object.__setattr__(self, "log_values", tuple(v))
        object.__setattr__(self, "log_slopes", tuple(s))

    @classmethod
    def from_slopes(cls, breakpoints, log_slopes):
        """Derive ln Psi at breakpoints from segment ln-slopes, in log domain."""
        b = np.asarray(breakpoints, dtype=float)
        s = np.asarray(log_slopes, dtype=float)
        v = np.full(b.size, -math.inf)
        for i in range(1, b.size):
            v[i] = np.logaddexp(v[i - 1], s[i - 1] + math.log(b[i] - b[i - 1]))
        return cls(tuple(b), tuple(v), tuple(s))

    def _segment(self, a):
        b = np.asarray(self.breakpoints)
        return np.clip(np.searchsorted(b, a, side="right") - 1, 0, b.size - 1)

    def _log_value(self, a):
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.log_values)
        s = np.asarray(self.log_slopes)
        i = self._segment(a)
        dx = a - b[i]
        with np.errstate(divide="ignore"):
            inc = s[i] + np.log(np.where(dx > 0, dx, 1.0))
        return np.where(dx > 0, np.logaddexp(v[i], inc), v[i])

    def _log_deriv(self, a):
        return np.asarray(self.log_slopes)[self._segment(a)]

    def params(self):
        return {
            "breakpoints": list(self.breakpoints),
            "log_values": list(self.log_values),
            "log_slopes": list(self.log_slopes),
        }

    def label(self):
        return f"piecewise_affine_log(n={len(self.breakpoints)})"


@dataclass(frozen=True, repr=False)
class SquareComposition(OrliczFunction):
    """Phi(x) = Psi(x^2); convex increasing whenever the base is."""

    base: OrliczFunction

    family = "square_composition"

    def _log_value(self, a):
        return self.base._log_value(a * a)

    def _psi(self, a):
        return self.base._psi(a * a)

    def _log_deriv(self, a):
        with np.errstate(divide="ignore"):
            return math.log(2.0) + np.log(a) + self.base._log_deriv(a * a)

    def params(self):
        return {"base": self.base.to_record()}

    def label(self):
        return f"square_composition({self.base.label()})"


_FAMILIES = {
    "power_law": lambda r: PowerLaw(p=float(r["p"])),
    "exp_power": lambda r: ExpPower(alpha=float(r["alpha"])),
    "heavy_tail_log": lambda r: HeavyTailLog(beta=float(r["beta"])),
    "exp_square": lambda r: ExpSquare(),
    "piecewise_affine_log": lambda r: PiecewiseAffineLog(
        tuple(float(x) for x in r["breakpoints"]),
        tuple(float(x) for x in r["log_values"]),
        tuple(float(x) for x in r["log_slopes"]),
    ),
    "square_composition": lambda r: SquareComposition(from_record(r["base"])),
}

_ALLOWED_KEYS = {
    "power_law": {"family", "p"},
    "exp_power": {"family", "alpha", "threshold"},
    "heavy_tail_log": {"family", "beta"},
    "exp_square": {"family"},
    "piecewise_affine_log": {"family", "breakpoints", "log_values", "log_slopes"},
    "square_composition": {"family", "base"},
}


def from_record(rec):
    """Deserialize an Orlicz function from its structured record."""
    try:
        fam = rec["family"]
        build = _FAMILIES[fam]
    except KeyError as exc:
        raise DomainError(f"unknown Orlicz family: {rec.get('family')!r}") from exc
    extra = set(rec) - _ALLOWED_KEYS[fam]
    if extra:
        raise DomainError(f"unknown keys for family {fam}: {sorted(extra)}")
    return build(rec)


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class EvalResult:
    value: float  # Psi(x); OVERFLOW marker past linear range
    psi: float  # ln(1 + Psi(x))
    log_value: float  # ln Psi(x)


def evaluate(fn, x):
    x = float(x)
    if x < 0:
        raise DomainError("x must be nonnegative")
    return EvalResult(value=fn.value(x), psi=fn.psi(x), log_value=fn.log_value(x))


def invert(fn, y, scale="linear"):
    """x with Psi(x) = y (scale='linear') or psi(x) = y (scale='psi')."""
    y = float(y)
    if y < 0:
        raise DomainError("y must be nonnegative")
    if y == 0.0:
        return 0.0
    if scale == "linear":
        target = math.log1p(y)
    elif scale == "psi":
        target = y
    else:
        raise DomainError(f"unknown scale {scale!r}")
    return solve_increasing(lambda x: fn.psi(x), target, x0=1.0, rtol=1e-12)


def invert_log(fn, log_y):
    """x with ln Psi(x) = log_y; works for arguments far past linear range."""
    return solve_increasing(lambda x: fn.log_value(x), float(log_y), x0=1.0, rtol=1e-12)


def default_grid(fn, lo=1e-3, hi=1e3, n=64):
    """64 log-spaced validation points plus family-specific breakpoints."""
    pts = list(np.geomspace(lo, hi, n))
    if isinstance(fn, ExpPower) and fn.threshold > 0:
        pts += [fn.threshold, 0.5 * fn.threshold, 1.5 * fn.threshold]
    if isinstance(fn, PiecewiseAffineLog):
        pts += [b for b in fn.breakpoints if b > 0]
        pts += [0.5 * (a + b) for a, b in zip(fn.breakpoints, fn.breakpoints[1:])]
    return np.array(sorted(set(p for p in pts if p > 0)))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    zero_at_zero: bool
    strictly_increasing: bool
    midpoint_convex: bool
    first_violation: tuple | None  # (check, x-triple-or-pair)

    def __bool__(self):
        return self.passed


def validate(fn, grid=None, tol=1e-9):
    """Check the Orlicz axioms (Psi(0)=0, monotone, midpoint convex) on a grid."""
    if grid is None:
        grid = default_grid(fn)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("validation grid must be nonempty")

    zero_ok = fn.psi(0.0) == 0.0
    lv = fn.log_value(grid)

    mono_ok, convex_ok = True, True
    violation = None
    inc = np.diff(lv) > 0
    if not np.all(inc):
        mono_ok = False
        i = int(np.argmin(inc))
        violation = ("strictly_increasing", (grid[i], grid[i + 1]))

    # midpoint convexity on consecutive triples, compared in log domain
    mids = 0.5 * (grid[:-2] + grid[2:])
    lv_mid = fn.log_value(mids)
    lv_avg = np.logaddexp(lv[:-2], lv[2:]) - math.log(2.0)
    bad = lv_mid > lv_avg + math.log1p(tol) + 1e-12
    if np.any(bad):
        convex_ok = False
        i = int(np.argmax(bad))
        if violation is None:
            violation = ("midpoint_convex", (grid[i], mids[i], grid[i + 2]))

    passed = zero_ok and mono_ok and convex_ok
    return ValidationReport(passed, zero_ok, mono_ok, convex_ok, violation)


def affine_minorant(fn, grid=None):
    """(a, b) with Psi(x) >= a*x - b for all x >= 0, picked from chord lines.

    For any anchor x1, the line with slope Psi(x1)/x1 and offset Psi(x1) is a
    global minorant (chord slopes from the origin are non-decreasing); the
    anchor minimizing (1 + b)/a over the grid is returned.
    """
    if grid is None:
        grid = default_grid(fn)
    best = None
    for x1 in np.asarray(grid, dtype=float):
        lv = fn.log_value(x1)
        if not (math.isfinite(lv) and lv <= LINEAR_LOG_CAP):
            continue
        val = math.exp(lv)
        a = val / x1
        b = val
        cost = (1.0 + b) / a
        if best is None or cost < best[2]:
            best = (a, b, cost)
    if best is None:
        raise RangeError("no representable grid point for affine minorant")
    return best[0], best[1]
