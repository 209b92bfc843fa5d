"""Time-1 section map of the impulsive flow, in action-angle coordinates.

The map is evaluated in phase space (three smooth segments per period,
velocity reversal between them) while the lifted angle rides along as a
slaved ODE component; at each impulse the lift is reflected Theta -> -Theta.
With this convention the lift is a degree-1 circle map lift, integer parts
add under composition, and the recorded per-impulse adjustment integer is
identically zero.  At the section time the fractional angle is re-anchored
by the Newton chart inversion, so lift errors never accumulate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .flow import EscapeError, StepUnderflowError, coefficient_arrays
from .special import ActionAngle, PhaseState, to_action_angle, to_phase

#: minimum action along a section orbit before the chart degenerates
LAMBDA_GUARD = 1e-6


class OriginGuardError(RuntimeError):
    """Trajectory approached the origin where the chart is ill-conditioned."""


@dataclass(frozen=True)
class PoincarePoint:
    lam: float
    Theta: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError("action must be positive, got %r" % (self.lam,))


def _kernel_args(config):
    means, cosc, sinc = coefficient_arrays(config)
    return (config.n, means.tolist(), cosc.tolist(), sinc.tolist())


class _Advancer:
    """Reusable driver: keeps phase state between periods so long orbits pay
    one chart conversion per section crossing, not two."""

    def __init__(self, config, sf):
        self.config = config
        self.sf = sf
        self._ka = _kernel_args(config)

    def _segment(self, t, x, y, th, t_end):
        cfg, sf = self.config, self.sf
        t, x, y, th, status, _, amp, mlam, _ = _kernel.integrate_segment(
            t, x, y, th, t_end, *self._ka,
            sf.alpha, sf.beta, sf.d,
            cfg.rel_tol, cfg.abs_tol, cfg.max_step,
            cfg.escape_guard, LAMBDA_GUARD, True, False)
        if status == _kernel.ESCAPED:
            raise EscapeError(PhaseState(t, x, y))
        if status == _kernel.UNDERFLOW:
            raise StepUnderflowError(PhaseState(t, x, y))
        if status == _kernel.ORIGIN:
            raise OriginGuardError("min action fell below %r at t=%r"
                                   % (LAMBDA_GUARD, t))
        return t, x, y, th, amp, mlam

    def one_period(self, t0, x, y, th):
        """Advance [t0, t0+1] (t0 integer); returns (x, y, th, max_amp, max_lam)."""
        s = self.config.schedule
        max_amp = abs(x) + abs(y)
        max_lam = 0.0
        t = t0
        for cut in (t0 + s.t1, t0 + s.t2, t0 + 1.0):
            t, x, y, th, amp, mlam = self._segment(t, x, y, th, cut)
            max_amp = max(max_amp, amp)
            max_lam = max(max_lam, mlam)
            if cut != t0 + 1.0:
                y = -y
                th = -th
        return x, y, th, max_amp, max_lam

    def snap(self, x, y, th):
        """Re-anchor the fractional angle via the chart inversion."""
        aa = to_action_angle(self.sf, x, y)
        return aa.lam, round(th - aa.Theta) + aa.Theta


def poincare_map(config, sf, pt):
    """One application of the section map; returns the lifted image point."""
    adv = _Advancer(config, sf)
    x, y = to_phase(sf, ActionAngle(pt.lam, pt.Theta))
    x, y, th, _, _ = adv.one_period(0.0, x, y, pt.Theta)
    lam, th = adv.snap(x, y, th)
    return PoincarePoint(lam, th)


def iterate_map(config, sf, pt, count, with_amp=False):
    """Orbit of the section map: arrays (lam, Theta) of length count+1.

    with_amp additionally returns max(|x|+|y|) over each period's full
    trajectory (accepted-step sampling) and the per-period max action.
    Raises on escape / origin guard with the partial orbit attached as
    exc.partial = (lams, Thetas[, amps, lam_maxes]).
    """
    adv = _Advancer(config, sf)
    lams = np.empty(count + 1)
    ths = np.empty(count + 1)
    amps = np.empty(count) if with_amp else None
    lmaxes = np.empty(count) if with_amp else None
    lams[0], ths[0] = pt.lam, pt.Theta
    x, y = to_phase(sf, ActionAngle(pt.lam, pt.Theta))
    th = pt.Theta
    try:
        for k in range(count):
            x, y, th, amp, mlam = adv.one_period(0.0, x, y, th)
            lams[k + 1], ths[k + 1] = adv.snap(x, y, th)
            th = ths[k + 1]
            if with_amp:
                amps[k] = amp
                lmaxes[k] = mlam
    except (EscapeError, OriginGuardError, StepUnderflowError) as exc:
        exc.partial = ((lams[:k + 1], ths[:k + 1], amps[:k], lmaxes[:k])
                       if with_amp else (lams[:k + 1], ths[:k + 1]))
        raise
    if with_amp:
        return lams, ths, amps, lmaxes
    return lams, ths


def unforced_delta_theta(sf, schedule, lam):
    """Closed-form net angle advance of the unforced impulsive system:
    Omega(lam) * (1 - 2 (t2 - t1)) with Omega = 2 beta d lam^(2 beta - 1)."""
    return sf.angular_rate(lam) * schedule.bracket


def map_jacobian(config, sf, pt, h=1e-6):
    """DP(pt) by central finite differences, step scaled per coordinate."""
    if not 1e-8 < h < 1e-3:
        raise ValueError("finite-difference step must lie in (1e-8, 1e-3)")
    hl = h * max(1.0, abs(pt.lam))
    ht = h
    fpl = poincare_map(config, sf, PoincarePoint(pt.lam + hl, pt.Theta))
    fml = poincare_map(config, sf, PoincarePoint(pt.lam - hl, pt.Theta))
    fpt = poincare_map(config, sf, PoincarePoint(pt.lam, pt.Theta + ht))
    fmt = poincare_map(config, sf, PoincarePoint(pt.lam, pt.Theta - ht))
    return np.array([
        [(fpl.lam - fml.lam) / (2 * hl), (fpt.lam - fmt.lam) / (2 * ht)],
        [(fpl.Theta - fml.Theta) / (2 * hl), (fpt.Theta - fmt.Theta) / (2 * ht)],
    ])


# --- twist profile ----------------------------------------------------------

@dataclass
class TwistProfile:
    lam: np.ndarray
    I: np.ndarray
    delta_theta: np.ndarray
    d_dlam: np.ndarray
    d_dI: np.ndarray
    sign_ok: np.ndarray
    gamma: float
    bracket: float
    degenerate: bool
    twist_bound: float              # d/2 * |1 - 2(t2-t1)|
    bound_ok_top_decade: bool
    monotone: bool
    nonmonotone_interval: tuple = None

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "I", "delta_theta", "d_delta_theta_d_I",
                        "sign_ok"])
            for row in zip(self.lam, self.I, self.delta_theta, self.d_dI,
                           self.sign_ok):
                w.writerow([repr(float(row[0])), repr(float(row[1])),
                            repr(float(row[2])), repr(float(row[3])),
                            str(bool(row[4])).lower()])


def _log_grid_derivative(lam, f):
    """df/dlam from a sliding 5-point quadratic fit in ln(lam)."""
    u = np.log(lam)
    out = np.empty_like(f)
    m = len(lam)
    half = 2
    for i in range(m):
        lo = max(0, min(i - half, m - 5))
        sl = slice(lo, lo + 5)
        coeff = np.polyfit(u[sl] - u[i], f[sl], 2)
        out[i] = coeff[-2]  # d f / d u at u_i
    return out / lam


def twist_profile(config, sf, lambda_grid, theta0=0.0):
    """Net angle advance per period over a grid of actions, with derivative
    estimates in raw and scaled coordinates and the sign verdict."""
    lam = np.asarray(lambda_grid, dtype=float)
    if len(lam) < 5 or np.any(np.diff(lam) <= 0):
        raise ValueError("lambda grid must be ascending with >= 5 points")
    dth = np.array([poincare_map(config, sf, PoincarePoint(l, theta0)).Theta
                    - theta0 for l in lam])
    d_dlam = _log_grid_derivative(lam, dth)

    n = config.n
    rho = lam ** (1.0 / (n + 2))
    gamma = 1.5 / float(np.median(rho))
    I = gamma * rho
    # dlam/dI = (n+2) rho^(n+1) / gamma
    d_dI = d_dlam * (n + 2) * rho ** (n + 1) / gamma

    bracket = config.schedule.bracket
    sign_pred = np.sign(bracket)
    sign_ok = np.sign(d_dlam) == sign_pred
    bound = 0.5 * sf.d * abs(bracket)
    top = lam >= lam[-1] / 10.0
    bound_ok = bool(np.all(np.abs(d_dI[top]) >= bound)) if not config.degenerate \
        else False

    monotone = bool(np.all(np.sign(np.diff(dth)) == sign_pred)) \
        if bracket != 0.0 else True
    bad = None
    if not monotone:
        j = int(np.argmax(np.sign(np.diff(dth)) != sign_pred))
        bad = (float(lam[j]), float(lam[j + 1]))

    return TwistProfile(lam=lam, I=I, delta_theta=dth, d_dlam=d_dlam, d_dI=d_dI,
                        sign_ok=sign_ok, gamma=gamma, bracket=bracket,
                        degenerate=config.degenerate, twist_bound=bound,
                        bound_ok_top_decade=bound_ok, monotone=monotone,
                        nonmonotone_interval=bad)


# --- intersection property --------------------------------------------------

@dataclass
class IntersectionResult:
    intersects: bool
    witness: tuple = None        # (theta_a, theta_b) bracketing a sign change
    star_shaped: bool = True
    note: str = ""


def _periodic_interp(theta_pts, lam_pts, theta_eval):
    order = np.argsort(theta_pts)
    th = theta_pts[order]
    lm = lam_pts[order]
    th_ext = np.concatenate([th, th[:1] + 1.0])
    lm_ext = np.concatenate([lm, lm[:1]])
    return np.interp(theta_eval % 1.0, th_ext, lm_ext, period=1.0)


def intersection_check(map_fn, theta_samples, lam_samples, test_points=512,
                       zero_tol=1e-10):
    """Does the image of the sampled closed curve meet the curve itself?

    map_fn: (lam, theta) -> (lam', Theta').  The curve must be a graph
    lam(theta) over >= 64 angles; the image is re-parameterized by angle and
    the signed radial difference scanned for a zero or sign change.
    """
    theta_samples = np.asarray(theta_samples, dtype=float) % 1.0
    lam_samples = np.asarray(lam_samples, dtype=float)
    if len(theta_samples) < 64:
        raise ValueError("need at least 64 curve samples")
    img = np.array([map_fn(l, t) for l, t in zip(lam_samples, theta_samples)])
    img_lam, img_th = img[:, 0], img[:, 1] % 1.0

    order = np.argsort(img_th)
    if np.any(np.diff(img_th[order]) <= 0.0):
        return IntersectionResult(False, None, star_shaped=False,
                                  note="image not star-shaped; check inconclusive")

    grid = np.linspace(0.0, 1.0, test_points, endpoint=False)
    delta = (_periodic_interp(img_th, img_lam, grid)
             - _periodic_interp(theta_samples, lam_samples, grid))
    if np.all(np.abs(delta) <= zero_tol):
        return IntersectionResult(True, (float(grid[0]), float(grid[-1])),
                                  note="radial difference vanishes identically")
    sign = np.sign(delta)
    sign[np.abs(delta) <= zero_tol] = 0.0
    for i in range(test_points):
        a, b = sign[i], sign[(i + 1) % test_points]
        if a == 0.0 or a * b < 0.0:
            w = (float(grid[i]), float(grid[(i + 1) % test_points]))
            return IntersectionResult(True, w)
    return IntersectionResult(False, None,
                              note="image strictly one-sided: area preservation "
                                   "violated for the supplied map")


def poincare_intersection_check(config, sf, theta_samples, lam_samples, **kw):
    def fn(lam, theta):
        p = poincare_map(config, sf, PoincarePoint(lam, theta))
        return p.lam, p.Theta
    return intersection_check(fn, theta_samples, lam_samples, **kw)
