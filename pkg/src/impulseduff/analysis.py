"""Orbit-level analyses of the section map: rotation numbers, Diophantine
filtering, invariant-curve fits (boundedness evidence), periodic orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flow import EscapeError, StepUnderflowError
from .poincare import OriginGuardError, PoincarePoint, iterate_map

TWO_PI = 2.0 * math.pi


class AnalysisError(RuntimeError):
    pass


class ResonanceError(AnalysisError):
    """Orbit trapped in a resonance island: angle coverage has gaps."""


class DiophantineError(AnalysisError):
    """Rotation number failed the configured Diophantine condition."""


# --- rotation numbers -------------------------------------------------------

@dataclass
class RotationEstimate:
    value: float
    error_bound: float
    iterates_used: int
    method: str = "weighted_birkhoff"
    usable: bool = True


def _bump_weights(count):
    """w(k/N) = exp(-1/(s(1-s))) for s = k/N, zero at the ends."""
    s = np.arange(1, count + 1) / count
    w = np.zeros(count)
    inner = (s > 0.0) & (s < 1.0)
    w[inner] = np.exp(-1.0 / (s[inner] * (1.0 - s[inner])))
    return w


def weighted_birkhoff(increments):
    """Weighted average of lifted-angle increments; superpolynomially
    convergent on Diophantine rotations."""
    increments = np.asarray(increments, dtype=float)
    w = _bump_weights(len(increments))
    return float(np.sum(w * increments) / np.sum(w))


def rotation_number(config, sf, seed, N):
    """Rotation number of the section orbit through seed, on the lift.

    On escape before N iterates a partial estimate is returned with
    usable=False.
    """
    usable = True
    try:
        _, ths = iterate_map(config, sf, seed, N)
    except (EscapeError, OriginGuardError, StepUnderflowError) as exc:
        _, ths = exc.partial
        usable = False
    inc = np.diff(ths)
    if len(inc) < 8:
        return RotationEstimate(value=float("nan"), error_bound=float("inf"),
                                iterates_used=len(inc), usable=False)
    value = weighted_birkhoff(inc)
    half = weighted_birkhoff(inc[:len(inc) // 2])
    return RotationEstimate(value=value, error_bound=abs(value - half),
                            iterates_used=len(inc), usable=usable)


# --- Diophantine filter -----------------------------------------------------

@dataclass
class DiophantineVerdict:
    omega: float
    c: float
    beta_exponent: float
    q_max: int
    passed: bool
    worst: tuple  # (p, q, margin); margin = |omega - p/q| / (c q^(-2-beta))


def diophantine_check(omega, c, beta_exponent, q_max):
    """Exhaustive check |omega - p/q| >= c q^(-2-beta) for q = 1..q_max."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    worst = None
    passed = True
    for q in range(1, q_max + 1):
        p = round(omega * q)
        dist = abs(omega - p / q)
        margin = dist / (c * q ** (-2.0 - beta_exponent))
        if worst is None or margin < worst[2]:
            worst = (int(p), int(q), margin)
        if margin < 1.0:
            passed = False
    return DiophantineVerdict(omega=omega, c=c, beta_exponent=beta_exponent,
                              q_max=q_max, passed=passed, worst=worst)


# --- invariant curves -------------------------------------------------------

@dataclass
class InvariantCurveFit:
    """Graph lam = fit(theta) with its rotation number and invariance residual."""

    mean: float
    cos_coef: np.ndarray
    sin_coef: np.ndarray
    rho: float
    residual: float
    threshold: float
    accepted: bool
    lam_median: float
    iterates_used: int

    def fit_eval(self, theta):
        theta = np.asarray(theta, dtype=float)
        scalar = theta.ndim == 0
        k = np.arange(1, len(self.cos_coef) + 1)
        ang = TWO_PI * np.outer(np.atleast_1d(theta), k)
        v = self.mean + np.cos(ang) @ self.cos_coef + np.sin(ang) @ self.sin_coef
        return float(v[0]) if scalar else v

    def to_dict(self):
        return {"mean": self.mean,
                "cos_coef": list(map(float, self.cos_coef)),
                "sin_coef": list(map(float, self.sin_coef)),
                "rho": self.rho, "residual": self.residual,
                "threshold": self.threshold, "accepted": self.accepted,
                "lam_median": self.lam_median,
                "iterates_used": self.iterates_used}


def _circ_dist(v):
    """Distance of v to the nearest integer."""
    return np.abs(v - np.round(v))


def find_invariant_curve(config, sf, seed, modes, N,
                         dio_c=1e-2, dio_beta=0.5, q_max=10000,
                         threshold=None):
    """Fit an invariant curve through the orbit of seed.

    The orbit must stay bounded for N iterates and its rotation number must
    pass the Diophantine filter; angle-coverage gaps larger than 3/N abort
    the fit (resonant / island-trapped orbit).
    """
    lams, ths = iterate_map(config, sf, seed, N)
    inc = np.diff(ths)
    rho = weighted_birkhoff(inc)
    verdict = diophantine_check(rho, dio_c, dio_beta, q_max)
    if not verdict.passed:
        raise DiophantineError(
            "rotation number %r fails the (c=%g, beta=%g) condition at p/q=%d/%d"
            % (rho, dio_c, dio_beta, verdict.worst[0], verdict.worst[1]))

    angles = np.sort(ths % 1.0)
    gaps = np.diff(np.concatenate([angles, angles[:1] + 1.0]))
    if np.max(gaps) > 3.0 / N:
        raise ResonanceError("angle coverage gap %.3g > 3/N = %.3g; orbit "
                             "resonant or island-trapped"
                             % (float(np.max(gaps)), 3.0 / N))

    th_mod = ths % 1.0
    k = np.arange(1, modes + 1)
    ang = TWO_PI * np.outer(th_mod, k)
    design = np.hstack([np.ones((len(ths), 1)), np.cos(ang), np.sin(ang)])
    coef, *_ = np.linalg.lstsq(design, lams, rcond=None)
    fit = InvariantCurveFit(mean=float(coef[0]),
                            cos_coef=coef[1:modes + 1].copy(),
                            sin_coef=coef[modes + 1:].copy(),
                            rho=rho, residual=float("inf"),
                            threshold=0.0, accepted=False,
                            lam_median=float(np.median(lams)),
                            iterates_used=N)

    from .poincare import poincare_map  # local to avoid cycle at import time
    test_theta = np.arange(4 * modes) / (4 * modes)
    test_lam = fit.fit_eval(test_theta)
    img_lam = np.empty_like(test_lam)
    img_th = np.empty_like(test_lam)
    for i, (l, t) in enumerate(zip(test_lam, test_theta)):
        p = poincare_map(config, sf, PoincarePoint(float(l), float(t)))
        img_lam[i], img_th[i] = p.lam, p.Theta
    res_lam = float(np.max(np.abs(img_lam - fit.fit_eval(img_th % 1.0))))
    res_ang = float(np.max(_circ_dist(img_th - test_theta - rho)))
    residual = res_lam + res_ang

    if threshold is None:
        threshold = 1e-6 * fit.lam_median
    fit.residual = residual
    fit.threshold = float(threshold)
    fit.accepted = residual <= threshold
    return fit


# --- boundedness scan -------------------------------------------------------

@dataclass
class BoundednessRecord:
    seed: PoincarePoint
    horizon: int
    completed: int
    max_amp: float
    amps: np.ndarray           # per-period max(|x|+|y|), accepted-step sampling
    amp_bounds: np.ndarray     # per-period energy-curve amplitude at max action
    monotone_growth_last_half: bool
    between_curves: bool = None
    escaped: bool = False
    degenerate: bool = False

    def to_dict(self):
        return {"seed_lam": self.seed.lam, "seed_theta": self.seed.Theta,
                "horizon": self.horizon, "completed": self.completed,
                "max_amp": self.max_amp,
                "monotone_growth_last_half": self.monotone_growth_last_half,
                "between_curves": self.between_curves,
                "escaped": self.escaped, "degenerate": self.degenerate}


def boundedness_scan(config, sf, seeds, horizon, lower=None, upper=None):
    """Iterate each seed for `horizon` periods recording max(|x|+|y|) along
    the full trajectories; escape is recorded as unbounded-evidence.

    amps samples the trajectory at accepted integrator steps; amp_bounds is
    the sharp curve amplitude at the per-period maximal action (exactly
    constant for the unforced system).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    from .special import curve_amplitude
    out = []
    for seed in seeds:
        escaped = False
        between = None
        try:
            lams, ths, amps, lmaxes = iterate_map(config, sf, seed, horizon,
                                                  with_amp=True)
        except (EscapeError, OriginGuardError, StepUnderflowError) as exc:
            lams, ths, amps, lmaxes = exc.partial
            escaped = True
        if lower is not None and upper is not None and len(lams):
            th_mod = ths % 1.0
            lo = lower.fit_eval(th_mod)
            hi = upper.fit_eval(th_mod)
            between = bool(np.all((lams >= lo) & (lams <= hi)))
        amp_bounds = np.array([curve_amplitude(sf, l) for l in lmaxes])
        half = amps[len(amps) // 2:]
        mono = bool(len(half) >= 2 and np.all(np.diff(half) > 0.0))
        out.append(BoundednessRecord(
            seed=seed, horizon=horizon, completed=len(amps),
            max_amp=float(np.max(amps)) if len(amps) else float("nan"),
            amps=amps, amp_bounds=amp_bounds,
            monotone_growth_last_half=mono,
            between_curves=between, escaped=escaped,
            degenerate=config.degenerate))
    return out


# --- periodic orbits --------------------------------------------------------

@dataclass
class PeriodicOrbit:
    lam: float
    Theta: float
    m: int
    p: int
    residual: float
    minimal: bool

    def to_dict(self):
        return {"lam": self.lam, "Theta": self.Theta, "m": self.m,
                "p": self.p, "residual": self.residual, "minimal": self.minimal}


@dataclass
class PeriodicOrbitSearch:
    orbits: list
    best_residual: float
    seeds_tried: int
    converged: int = 0
    skipped_singular: int = 0


def _lift_pm(config, sf, lam, theta, m):
    lams, ths = iterate_map(config, sf, PoincarePoint(lam, theta), m)
    return lams[-1], ths[-1]


def find_periodic_orbit(config, sf, m, p, seeds, residual_tol=1e-9,
                        dedup_tol=1e-3, max_newton=40, fd_step=1e-6):
    """Newton search for fixed points of lift(P^m) shifted by winding p.

    The linear solve uses least squares, so the unforced case (singular
    Jacobian along the fixed-point circle) still converges.  Converged
    solutions are deduplicated by orbit equivalence and checked for
    minimality against every divisor of m.
    """
    if m < 1:
        raise ValueError("period m must be >= 1")
    found = []
    best = float("inf")
    converged = skipped = 0
    for seed in seeds:
        z = np.array([seed.lam, seed.Theta])
        ok = False
        try:
            for _ in range(max_newton):
                fl, ft = _lift_pm(config, sf, z[0], z[1], m)
                F = np.array([fl - z[0], ft - z[1] - p])
                r = float(np.linalg.norm(F))
                best = min(best, r)
                if r <= residual_tol:
                    ok = True
                    break
                hl = fd_step * max(1.0, abs(z[0]))
                ht = fd_step
                Jl = np.array(_lift_pm(config, sf, z[0] + hl, z[1], m))
                Jl -= np.array(_lift_pm(config, sf, z[0] - hl, z[1], m))
                Jt = np.array(_lift_pm(config, sf, z[0], z[1] + ht, m))
                Jt -= np.array(_lift_pm(config, sf, z[0], z[1] - ht, m))
                J = np.column_stack([Jl / (2 * hl), Jt / (2 * ht)])
                J -= np.eye(2)
                step, *_ = np.linalg.lstsq(J, -F, rcond=None)
                if not np.all(np.isfinite(step)):
                    skipped += 1
                    break
                # keep the action positive; damp wild steps
                scale = 1.0
                while z[0] + scale * step[0] <= 0.0 and scale > 1e-6:
                    scale *= 0.5
                z = z + scale * step
        except (EscapeError, OriginGuardError, StepUnderflowError,
                ValueError):
            continue
        if not ok:
            continue
        converged += 1
        orbit = _dedup_candidate(config, sf, z, m, found, dedup_tol)
        if orbit is None:
            continue
        minimal = _check_minimal(config, sf, z, m)
        found.append(PeriodicOrbit(lam=float(z[0]), Theta=float(z[1] % 1.0),
                                   m=m, p=p, residual=r, minimal=minimal))
    return PeriodicOrbitSearch(orbits=found, best_residual=best,
                               seeds_tried=len(list(seeds)), converged=converged,
                               skipped_singular=skipped)


def _orbit_points(config, sf, z, m):
    lams, ths = iterate_map(config, sf, PoincarePoint(float(z[0]), float(z[1])), m)
    return np.column_stack([lams[:-1], ths[:-1] % 1.0])


def _dedup_candidate(config, sf, z, m, found, tol):
    """Return z if it is a new orbit, None if it coincides (up to iterates of
    the map) with one already found."""
    pts = _orbit_points(config, sf, z, m)
    scale = max(1.0, float(np.median(pts[:, 0])))
    for other in found:
        opts = _orbit_points(config, sf, (other.lam, other.Theta), m)
        for q in opts:
            d = np.abs(pts[:, 0] - q[0]) / scale \
                + _circ_dist(pts[:, 1] - q[1])
            if np.min(d) < tol:
                return None
    return z


def _check_minimal(config, sf, z, m, tol=1e-6):
    """No proper divisor period: lift(P^m')(z) != z + (0, integer)."""
    for mp in range(1, m):
        if m % mp:
            continue
        fl, ft = _lift_pm(config, sf, float(z[0]), float(z[1]), mp)
        dl = abs(fl - z[0]) / max(1.0, abs(z[0]))
        dt = float(_circ_dist(np.array(ft - z[1])))
        if dl + dt <= tol:
            return False
    return True
