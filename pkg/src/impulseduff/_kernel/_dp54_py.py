"""Pure-Python Dormand-Prince 5(4) kernel for smooth segments.

Integrates  x' = y,  y' = -x^(2n+1) - sum_i x^i p_i(t)  between impulse
times, optionally carrying the lifted angle of the action-angle chart as a
third slaved component.  A compiled twin with the same contract lives in
``_dp54_cy.pyx``; ``impulseduff._kernel`` picks whichever is importable.

Status codes: 0 ok, 1 escape guard tripped, 2 step-size underflow,
3 origin guard tripped (angle tracking only).
"""

from __future__ import annotations

import math

OK = 0
ESCAPED = 1
UNDERFLOW = 2
ORIGIN = 3

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau (FSAL)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9


def _forcing(t, x, means, cosc, sinc, m, K):
    """sum_{i=0}^{m-1} x^i p_i(t) by Horner."""
    if K:
        cos_t = [0.0] * K
        sin_t = [0.0] * K
        for k in range(K):
            w = TWO_PI * (k + 1) * t
            cos_t[k] = math.cos(w)
            sin_t[k] = math.sin(w)
        f = 0.0
        for i in range(m - 1, -1, -1):
            p = means[i]
            ci = cosc[i]
            si = sinc[i]
            for k in range(K):
                p += ci[k] * cos_t[k] + si[k] * sin_t[k]
            f = f * x + p
        return f
    f = 0.0
    for i in range(m - 1, -1, -1):
        f = f * x + means[i]
    return f


def integrate_segment(t, x, y, theta, t_end,
                      n, means, cosc, sinc,
                      alpha, beta, dconst,
                      rtol, atol, max_step,
                      escape_guard, lam_guard,
                      track_theta, record):
    """Advance (x, y[, theta]) from t to t_end; no impulse may lie inside.

    means/cosc/sinc are sequences describing p_0..p_{2n} (see _forcing).
    Returns (t, x, y, theta, status, nsteps, max_amp, max_lam, samples):
    max_amp is the largest |x|+|y| seen at accepted steps, max_lam the
    largest action (0.0 unless track_theta), and samples a list of
    (t, x, y) per accepted step when record is true, else None.
    """
    m = 2 * n + 1
    K = len(cosc[0]) if m else 0
    forced = K > 0 or any(v != 0.0 for v in means)
    inv_two_beta = 1.0 / (2.0 * beta)
    two_n2 = 2 * n + 2

    def rhs(tt, xx, yy):
        # returns (dx, dy, dtheta, lam); lam only valid when track_theta
        xp = xx
        x2 = xx * xx
        for _ in range(n):
            xp *= x2          # xp = x^(2n+1)
        F = _forcing(tt, xx, means, cosc, sinc, m, K) if forced else 0.0
        dy = -xp - F
        if track_theta:
            h0 = 0.5 * yy * yy + (xp * xx) / two_n2
            lam = (h0 / dconst) ** inv_two_beta if h0 > 0.0 else 0.0
            if lam <= 0.0:
                return yy, dy, 0.0, 0.0
            dth = (beta * yy * yy + alpha * xx * (xp + F)) / lam
            return yy, dy, dth, lam
        return yy, dy, 0.0, 1.0

    samples = [(t, x, y)] if record else None
    max_amp = abs(x) + abs(y)
    max_lam = 0.0
    nsteps = 0
    span = t_end - t
    if span == 0.0:
        if track_theta:
            _, _, _, max_lam = rhs(t, x, y)
        return t, x, y, theta, OK, 0, max_amp, max_lam, samples
    if span < 0.0:
        raise ValueError("t_end must be >= t")

    dx0, dy0, dth0, lam0 = rhs(t, x, y)
    max_lam = lam0
    if track_theta and lam0 < lam_guard:
        return t, x, y, theta, ORIGIN, 0, max_amp, max_lam, samples

    # initial step heuristic (scaled norms of state and rhs)
    scx = atol + rtol * abs(x)
    scy = atol + rtol * abs(y)
    d0 = math.sqrt(0.5 * ((x / scx) ** 2 + (y / scy) ** 2))
    d1 = math.sqrt(0.5 * ((dx0 / scx) ** 2 + (dy0 / scy) ** 2))
    h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = min(h, max_step, span)

    k1x, k1y, k1t = dx0, dy0, dth0
    status = OK
    while t < t_end:
        if h < 1e-14 * max(1.0, abs(t)):
            status = UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t

        # stages 2..6
        xs = x + h * (_A21 * k1x)
        ys = y + h * (_A21 * k1y)
        k2x, k2y, k2t, _ = rhs(t + _C2 * h, xs, ys)
        xs = x + h * (_A31 * k1x + _A32 * k2x)
        ys = y + h * (_A31 * k1y + _A32 * k2y)
        k3x, k3y, k3t, _ = rhs(t + _C3 * h, xs, ys)
        xs = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        ys = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        k4x, k4y, k4t, _ = rhs(t + _C4 * h, xs, ys)
        xs = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        ys = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        k5x, k5y, k5t, _ = rhs(t + _C5 * h, xs, ys)
        xs = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
        ys = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
        k6x, k6y, k6t, _ = rhs(t + h, xs, ys)

        xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        k7x, k7y, k7t, lam7 = rhs(t + h, xn, yn)

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x
                  + _E6 * k6x + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y
                  + _E6 * k6y + _E7 * k7y)
        scx = atol + rtol * max(abs(x), abs(xn))
        scy = atol + rtol * max(abs(y), abs(yn))
        err = math.sqrt(0.5 * ((ex / scx) ** 2 + (ey / scy) ** 2))

        if err <= 1.0:
            if track_theta:
                theta += h * (_B1 * k1t + _B3 * k3t + _B4 * k4t
                              + _B5 * k5t + _B6 * k6t)
            t = t + h
            x, y = xn, yn
            k1x, k1y, k1t = k7x, k7y, k7t
            nsteps += 1
            amp = abs(x) + abs(y)
            if amp > max_amp:
                max_amp = amp
            if record:
                samples.append((t, x, y))
            if amp > escape_guard:
                status = ESCAPED
                break
            if track_theta:
                if lam7 > max_lam:
                    max_lam = lam7
                if lam7 < lam_guard:
                    status = ORIGIN
                    break
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            h = min(h * factor, max_step)
        else:
            h *= max(0.2, 0.9 * err ** -0.2)

    return t, x, y, theta, status, nsteps, max_amp, max_lam, samples
