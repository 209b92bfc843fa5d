"""Impulsive flow in phase space: smooth adaptive segments, exact
velocity reversal at the scheduled times.

The state reported at an impulse time t_j carries y(t_j+): the impulse
belongs to the right endpoint of the earlier segment, which makes
flow_map composition associative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .special import PhaseState


class EscapeError(RuntimeError):
    """|x| + |y| exceeded the escape guard; trajectory labelled escaped."""

    def __init__(self, state, message="trajectory escaped"):
        super().__init__("%s at t=%r (|x|+|y|=%r)"
                         % (message, state.t, abs(state.x) + abs(state.y)))
        self.state = state


class StepUnderflowError(RuntimeError):
    """Step size underflow; blow-up suspected near the reported state."""

    def __init__(self, state):
        super().__init__("step-size underflow at t=%r, blow-up suspected" % state.t)
        self.state = state


@dataclass
class ImpulseEvent:
    t: float
    x: float
    y_minus: float
    y_plus: float


@dataclass
class Trajectory:
    """Accepted-step samples plus the impulse events along the way."""

    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    events: list = field(default_factory=list)
    max_amp: float = 0.0

    def write_csv(self, samples_path, events_path):
        with open(samples_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y"])
            for t, x, y in zip(self.times, self.xs, self.ys):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])
        with open(events_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_j", "x", "y_minus", "y_plus"])
            for e in self.events:
                w.writerow([repr(float(e.t)), repr(float(e.x)),
                            repr(float(e.y_minus)), repr(float(e.y_plus))])


def coefficient_arrays(config):
    """(means, cos, sin) arrays for the kernel, harmonics zero-padded to a
    common count."""
    m = 2 * config.n + 1
    K = max((len(c.harmonics) for c in config.coefficients), default=0)
    means = np.array([c.mean for c in config.coefficients])
    cosc = np.zeros((m, K))
    sinc = np.zeros((m, K))
    for i, c in enumerate(config.coefficients):
        for k, (a, b) in enumerate(c.harmonics):
            cosc[i, k] = a
            sinc[i, k] = b
    return means, cosc, sinc


def rhs(config, state):
    """(dx, dy) of the smooth vector field; polynomial part by Horner."""
    x, y, t = state.x, state.y, state.t
    f = 0.0
    for c in reversed(config.coefficients):
        f = f * x + c(t)
    return y, -(x ** (2 * config.n + 1)) - f


def apply_impulse(state):
    """Velocity reversal: (t, x, y) -> (t, x, -y)."""
    return PhaseState(state.t, state.x, -state.y)


def _kernel_args(config):
    means, cosc, sinc = coefficient_arrays(config)
    return (config.n, means.tolist(), cosc.tolist(), sinc.tolist())


def integrate_segment(config, state, t_end, record=False, check_impulses=True,
                      _ka=None):
    """Advance the smooth (impulse-free) system to t_end.

    By default the no-impulse-inside precondition is enforced; pass
    check_impulses=False to integrate the smooth vector field across
    scheduled times deliberately (e.g. over a full reference period).
    Returns (PhaseState, samples, max_amp); samples is None unless record.
    """
    if check_impulses:
        inside = [s for s in config.schedule.times_between(state.t, t_end)
                  if s < t_end]
        if inside:
            raise ValueError("impulse time %r lies inside segment (%r, %r)"
                             % (inside[0], state.t, t_end))
    ka = _ka if _ka is not None else _kernel_args(config)
    t, x, y, _, status, _, max_amp, _, samples = _kernel.integrate_segment(
        state.t, state.x, state.y, 0.0, t_end, *ka,
        0.0, 1.0, 1.0, config.rel_tol, config.abs_tol, config.max_step,
        config.escape_guard, 0.0, False, record)
    out = PhaseState(t, x, y)
    if status == _kernel.ESCAPED:
        raise EscapeError(out)
    if status == _kernel.UNDERFLOW:
        raise StepUnderflowError(out)
    return out, samples, max_amp


def flow_map(config, state, t_target, record=False):
    """Advance the impulsive system from state.t to t_target.

    Splits at every scheduled impulse time, alternating smooth integration
    and velocity reversal; an impulse exactly at t_target is applied.
    Returns (PhaseState, Trajectory).
    """
    if t_target < state.t:
        raise ValueError("t_target must be >= state.t")
    ka = _kernel_args(config)
    cuts = config.schedule.times_between(state.t, t_target)
    events = []
    all_t, all_x, all_y = [], [], []
    max_amp = abs(state.x) + abs(state.y)

    def run(seg_end):
        nonlocal state, max_amp
        state, samples, amp = integrate_segment(config, state, seg_end,
                                                record=record, _ka=ka)
        max_amp = max(max_amp, amp)
        if record and samples:
            start = 1 if all_t else 0  # avoid duplicating the join point
            for t, x, y in samples[start:]:
                all_t.append(t)
                all_x.append(x)
                all_y.append(y)

    for s in cuts:
        run(s)
        events.append(ImpulseEvent(state.t, state.x, state.y, -state.y))
        state = apply_impulse(state)
        if record and all_t:
            all_y[-1] = state.y  # sample at t_j carries y(t_j+)
    if state.t < t_target:
        run(t_target)

    traj = Trajectory(times=np.array(all_t), xs=np.array(all_x),
                      ys=np.array(all_y), events=events, max_amp=max_amp)
    return state, traj
