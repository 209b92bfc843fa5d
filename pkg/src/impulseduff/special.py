"""Reference-orbit functions C, S and the action-angle chart.

C, S solve C' = S, S' = -C^(2n+1) with (C, S)(0) = (1, 0); T* is the
minimal period.  The chart is

    x = (c lam)^alpha C(theta T*),   y = (c lam)^beta S(theta T*),

with alpha = 1/(n+2), beta = 1 - alpha, c = 1/(alpha T*) and
d = c^(2 beta)/(2n+2), so the unforced energy is h0 = d lam^(2 beta).
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernel


class SpecialFunctionError(RuntimeError):
    """Period refinement or chart inversion failed to converge."""


class OriginError(ValueError):
    """The action-angle chart is undefined at the origin."""


def _integrate_unforced(n, t, x, y, t_end, tol, max_step=0.05, record=False):
    m = 2 * n + 1
    means = [0.0] * m
    empty = [[] for _ in range(m)]
    r = _kernel.integrate_segment_py(
        t, x, y, 0.0, t_end, n, means, empty, empty,
        0.0, 1.0, 1.0, tol, tol, max_step, 1e12, 0.0, False, record)
    t, x, y, _, status, _, _, _, samples = r
    if status != _kernel.OK:
        raise SpecialFunctionError("reference-orbit integration failed, status %d"
                                   % status)
    return t, x, y, samples


def _quintic_coeffs(h, f0, f1, g0, g1, a0, a1):
    """Per-interval quintic Hermite coefficients in the local variable s in [0,1]."""
    g0 = g0 * h
    g1 = g1 * h
    a0 = a0 * h * h
    a1 = a1 * h * h
    df = f1 - f0
    c0 = f0
    c1 = g0
    c2 = 0.5 * a0
    c3 = 10.0 * df - 6.0 * g0 - 4.0 * g1 - 1.5 * a0 + 0.5 * a1
    c4 = -15.0 * df + 8.0 * g0 + 7.0 * g1 + 1.5 * a0 - a1
    c5 = 6.0 * df - 3.0 * (g0 + g1) - 0.5 * a0 + 0.5 * a1
    return np.stack([c0, c1, c2, c3, c4, c5], axis=-1)


@dataclass(frozen=True)
class SpecialFunctions:
    """Dense sampling of (C, S) on [0, T*] plus the derived chart constants."""

    n: int
    period: float
    tol: float
    tau: np.ndarray      # uniform grid, grid_size+1 points incl. both ends
    C: np.ndarray
    S: np.ndarray
    _pc: np.ndarray      # quintic coefficients per interval, C
    _ps: np.ndarray      # quintic coefficients per interval, S

    @property
    def alpha(self):
        return 1.0 / (self.n + 2)

    @property
    def beta(self):
        return 1.0 - self.alpha

    @property
    def c(self):
        return 1.0 / (self.alpha * self.period)

    @property
    def d(self):
        return self.c ** (2.0 * self.beta) / (2.0 * self.n + 2.0)

    def angular_rate(self, lam):
        """Unforced angle speed d(theta)/dt = 2 beta d lam^(2 beta - 1)."""
        return 2.0 * self.beta * self.d * lam ** (2.0 * self.beta - 1.0)

    def energy(self, x, y):
        """h0(x, y) = y^2/2 + x^(2n+2)/(2n+2)."""
        return 0.5 * y * y + x ** (2 * self.n + 2) / (2.0 * self.n + 2.0)

    def eval_cs(self, tau):
        """Interpolated (C(tau), S(tau)); tau wrapped into [0, T*)."""
        tau = np.asarray(tau, dtype=float)
        scalar = tau.ndim == 0
        tau = np.atleast_1d(tau) % self.period
        h = self.period / (len(self.tau) - 1)
        idx = np.minimum((tau / h).astype(int), len(self.tau) - 2)
        s = tau / h - idx
        cv = np.zeros_like(tau)
        sv = np.zeros_like(tau)
        for poly, out in ((self._pc, cv), (self._ps, sv)):
            p = poly[idx]
            acc = p[:, 5]
            for j in (4, 3, 2, 1, 0):
                acc = acc * s + p[:, j]
            out[:] = acc
        if scalar:
            return float(cv[0]), float(sv[0])
        return cv, sv

    # residual diagnostics used by the verification suite
    def identity_residual(self):
        """sup over grid of |(n+1) S^2 + C^(2n+2) - 1|."""
        r = (self.n + 1) * self.S ** 2 + self.C ** (2 * self.n + 2) - 1.0
        return float(np.max(np.abs(r)))

    def symmetry_residual(self):
        """sup over grid of |C(T*-tau) - C(tau)| and |S(T*-tau) + S(tau)|."""
        rc = np.abs(self.C[::-1] - self.C)
        rs = np.abs(self.S[::-1] + self.S)
        return float(max(np.max(rc), np.max(rs)))


def compute_special_functions(n, tol=1e-12, grid_size=8192, cache_dir=None):
    """Integrate the reference orbit, detect and refine T*, build the tables.

    The optional cache_dir stores the result keyed by (n, tol, grid_size);
    loading reproduces the arrays bit-identically.
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if tol > 1e-8:
        raise ValueError("tol must be <= 1e-8")
    n = int(n)
    if cache_dir is not None:
        path = _cache_path(cache_dir, n, tol, grid_size)
        if os.path.exists(path):
            return load_cache(path)

    period = _find_period(n, tol)

    h = period / grid_size
    tau = np.linspace(0.0, period, grid_size + 1)
    C = np.empty(grid_size + 1)
    S = np.empty(grid_size + 1)
    C[0], S[0] = 1.0, 0.0
    t, x, y = 0.0, 1.0, 0.0
    for i in range(1, grid_size + 1):
        t, x, y, _ = _integrate_unforced(n, t, x, y, i * h, tol, max_step=h)
        C[i], S[i] = x, y

    sf = _build(n, period, tol, tau, C, S)
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        save_cache(sf, path)
    return sf


def _build(n, period, tol, tau, C, S):
    h = period / (len(tau) - 1)
    dC = S
    dS = -C ** (2 * n + 1)
    d2C = dS
    d2S = -(2 * n + 1) * C ** (2 * n) * S
    pc = _quintic_coeffs(h, C[:-1], C[1:], dC[:-1], dC[1:], d2C[:-1], d2C[1:])
    ps = _quintic_coeffs(h, S[:-1], S[1:], dS[:-1], dS[1:], d2S[:-1], d2S[1:])
    return SpecialFunctions(n=n, period=period, tol=tol, tau=tau, C=C, S=S,
                            _pc=pc, _ps=ps)


def _find_period(n, tol):
    """First return of (C,S) to (1,0): scan for the S sign change with C > 0,
    then Newton on S(tau) = 0 using S' = -C^(2n+1)."""
    _, _, _, samples = _integrate_unforced(n, 0.0, 1.0, 0.0, 40.0, tol,
                                           max_step=0.05, record=True)
    samples = np.asarray(samples)
    ts, xs, ys = samples[:, 0], samples[:, 1], samples[:, 2]
    k = None
    for i in range(1, len(ts) - 1):
        if ys[i] > 0.0 and ys[i + 1] <= 0.0 and xs[i] > 0.0:
            k = i
            break
    if k is None:
        raise SpecialFunctionError("no return to (1,0) found within tau <= 40")

    t0, x0, y0 = ts[k], xs[k], ys[k]
    guess = t0 + y0 / (xs[k] ** (2 * n + 1))  # S' ~ -C^(2n+1) ~ -1 near return
    tau_c = guess
    for _ in range(60):
        _, x, y, _ = _integrate_unforced(n, t0, x0, y0, tau_c, tol, max_step=0.05)
        if abs(y) <= 1e-13:
            break
        tau_c -= y / (-(x ** (2 * n + 1)))
    else:
        raise SpecialFunctionError("period refinement did not converge, "
                                   "residual %.3e" % abs(y))
    if abs(x - 1.0) > 1e6 * tol:
        raise SpecialFunctionError("return point drifted off (1,0): C=%r" % x)
    return tau_c


# --- chart ------------------------------------------------------------------

@dataclass(frozen=True)
class ActionAngle:
    """Action lam > 0 and lifted angle Theta (circle angle is Theta mod 1)."""

    lam: float
    Theta: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError("action must be positive, got %r" % (self.lam,))


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)
                and math.isfinite(self.y)):
            raise ValueError("phase state must be finite")


def to_phase(sf, aa):
    """(x, y) of the chart point; energy is d lam^(2 beta) by construction."""
    theta = aa.Theta % 1.0
    cv, sv = sf.eval_cs(theta * sf.period)
    clam = sf.c * aa.lam
    return clam ** sf.alpha * cv, clam ** sf.beta * sv


def to_action_angle(sf, x, y, max_iter=50):
    """Invert the chart: action from the energy level, angle by table lookup
    plus Newton on the reference orbit.  Theta is returned in [0, 1)."""
    h0 = sf.energy(x, y)
    if h0 <= 0.0:
        raise OriginError("action-angle chart undefined at the origin")
    lam = (h0 / sf.d) ** (1.0 / (2.0 * sf.beta))
    clam = sf.c * lam
    cx = x / clam ** sf.alpha
    sy = y / clam ** sf.beta

    i0 = int(np.argmin((sf.C - cx) ** 2 + (sf.S - sy) ** 2))
    tau = sf.tau[i0]
    for _ in range(max_iter):
        cv, sv = sf.eval_cs(tau)
        rc, rs = cv - cx, sv - sy
        if abs(rc) + abs(rs) < 1e-13:
            break
        c_pow = cv ** (2 * sf.n + 1)
        # pick the better-conditioned equation; ties at turning points
        # (S ~ 0) go to the S-equation whose slope is -C^(2n+1)
        if abs(sv) >= abs(c_pow):
            tau -= rc / sv
        else:
            tau += rs / c_pow
        tau %= sf.period
    else:
        raise SpecialFunctionError(
            "angle inversion did not converge, residual %.3e" % (abs(rc) + abs(rs)))
    theta = (tau / sf.period) % 1.0
    return ActionAngle(lam, theta)


def curve_amplitude(sf, lam, grid=2048):
    """max over the energy curve of |x| + |y| at action lam.

    Grid scan over the reference orbit plus one parabolic refinement; exact
    functional of the action, so it is conserved whenever the action is.
    """
    tau = np.linspace(0.0, sf.period, grid, endpoint=False)
    cv, sv = sf.eval_cs(tau)
    clam = sf.c * lam
    amp = clam ** sf.alpha * np.abs(cv) + clam ** sf.beta * np.abs(sv)
    i = int(np.argmax(amp))
    h = sf.period / grid
    f = lambda tt: (clam ** sf.alpha * abs(sf.eval_cs(tt)[0])
                    + clam ** sf.beta * abs(sf.eval_cs(tt)[1]))
    fm, f0, fp = f(tau[i] - h), float(amp[i]), f(tau[i] + h)
    denom = fm - 2.0 * f0 + fp
    if denom < 0.0:
        dt = 0.5 * h * (fm - fp) / denom
        return max(f0, f(tau[i] + dt))
    return f0


def jacobian_check(sf, aa, h=1e-5):
    """|det D(chart)| by central finite differences; contract: 1 within 1e-6."""
    hl = h * max(1.0, abs(aa.lam))
    ht = h
    xp, yp = to_phase(sf, ActionAngle(aa.lam + hl, aa.Theta))
    xm, ym = to_phase(sf, ActionAngle(aa.lam - hl, aa.Theta))
    dxl, dyl = (xp - xm) / (2 * hl), (yp - ym) / (2 * hl)
    xp, yp = to_phase(sf, ActionAngle(aa.lam, aa.Theta + ht))
    xm, ym = to_phase(sf, ActionAngle(aa.lam, aa.Theta - ht))
    dxt, dyt = (xp - xm) / (2 * ht), (yp - ym) / (2 * ht)
    return abs(dxl * dyt - dxt * dyl)


# --- binary cache -----------------------------------------------------------
#
# Little-endian layout: magic "IDCS", version u16, n u32, grid_size u64,
# tol f64, period f64, then C then S as f64 arrays (grid_size+1 each).

_MAGIC = b"IDCS"
_VERSION = 1


def _cache_path(cache_dir, n, tol, grid_size):
    return os.path.join(cache_dir, "cs_n%d_tol%.3e_m%d.bin" % (n, tol, grid_size))


def save_cache(sf, path):
    m = len(sf.tau) - 1
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HIQdd", _VERSION, sf.n, m, sf.tol, sf.period))
        fh.write(sf.C.astype("<f8").tobytes())
        fh.write(sf.S.astype("<f8").tobytes())


def load_cache(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise SpecialFunctionError("not a special-function cache: %s" % path)
        version, n, m, tol, period = struct.unpack("<HIQdd", fh.read(30))
        if version != _VERSION:
            raise SpecialFunctionError("unsupported cache version %d" % version)
        C = np.frombuffer(fh.read(8 * (m + 1)), dtype="<f8").astype(float)
        S = np.frombuffer(fh.read(8 * (m + 1)), dtype="<f8").astype(float)
    tau = np.linspace(0.0, period, m + 1)
    return _build(int(n), period, tol, tau, C, S)
