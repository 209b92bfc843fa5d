# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) kernel for smooth segments.

Twin of ``_dp54_py.py`` with an identical call contract; see that module
for the documentation.  ``impulseduff._kernel`` prefers this version when
the extension has been built.
"""

from libc.math cimport sin, cos, sqrt, fabs, pow, fmin, fmax

import array

OK = 0
ESCAPED = 1
UNDERFLOW = 2
ORIGIN = 3

cdef double TWO_PI = 6.283185307179586476925286766559

cdef double _A21 = 1.0 / 5
cdef double _A31 = 3.0 / 40, _A32 = 9.0 / 40
cdef double _A41 = 44.0 / 45, _A42 = -56.0 / 15, _A43 = 32.0 / 9
cdef double _A51 = 19372.0 / 6561, _A52 = -25360.0 / 2187
cdef double _A53 = 64448.0 / 6561, _A54 = -212.0 / 729
cdef double _A61 = 9017.0 / 3168, _A62 = -355.0 / 33, _A63 = 46732.0 / 5247
cdef double _A64 = 49.0 / 176, _A65 = -5103.0 / 18656
cdef double _B1 = 35.0 / 384, _B3 = 500.0 / 1113, _B4 = 125.0 / 192
cdef double _B5 = -2187.0 / 6784, _B6 = 11.0 / 84
cdef double _E1 = 71.0 / 57600, _E3 = -71.0 / 16695, _E4 = 71.0 / 1920
cdef double _E5 = -17253.0 / 339200, _E6 = 22.0 / 525, _E7 = -1.0 / 40
cdef double _C2 = 1.0 / 5, _C3 = 3.0 / 10, _C4 = 4.0 / 5, _C5 = 8.0 / 9


cdef struct Deriv:
    double dx
    double dy
    double dth
    double lam


cdef double _forcing(double t, double x, double[::1] means,
                     double[::1] cosc, double[::1] sinc,
                     int m, int K, double* cbuf, double* sbuf) noexcept:
    cdef int i, k
    cdef double w, p, f = 0.0
    if K:
        for k in range(K):
            w = TWO_PI * (k + 1) * t
            cbuf[k] = cos(w)
            sbuf[k] = sin(w)
        for i in range(m - 1, -1, -1):
            p = means[i]
            for k in range(K):
                p += cosc[i * K + k] * cbuf[k] + sinc[i * K + k] * sbuf[k]
            f = f * x + p
        return f
    for i in range(m - 1, -1, -1):
        f = f * x + means[i]
    return f


cdef Deriv _rhs(double tt, double xx, double yy, int n, int m, int K,
                double[::1] means, double[::1] cosc, double[::1] sinc,
                bint forced, bint track_theta, double alpha, double beta,
                double dconst, double inv_two_beta, double two_n2,
                double* cbuf, double* sbuf) noexcept:
    cdef Deriv out
    cdef double xp = xx, x2 = xx * xx
    cdef double F = 0.0, h0, lam
    cdef int i
    for i in range(n):
        xp *= x2
    if forced:
        F = _forcing(tt, xx, means, cosc, sinc, m, K, cbuf, sbuf)
    out.dx = yy
    out.dy = -xp - F
    out.dth = 0.0
    out.lam = 1.0
    if track_theta:
        h0 = 0.5 * yy * yy + (xp * xx) / two_n2
        lam = pow(h0 / dconst, inv_two_beta) if h0 > 0.0 else 0.0
        if lam <= 0.0:
            out.dth = 0.0
            out.lam = 0.0
        else:
            out.dth = (beta * yy * yy + alpha * xx * (xp + F)) / lam
            out.lam = lam
    return out


def integrate_segment(double t, double x, double y, double theta, double t_end,
                      int n, means_seq, cosc_seq, sinc_seq,
                      double alpha, double beta, double dconst,
                      double rtol, double atol, double max_step,
                      double escape_guard, double lam_guard,
                      bint track_theta, bint record):
    """Advance (x, y[, theta]) from t to t_end; no impulse may lie inside.

    Same contract as the pure-Python kernel: returns
    (t, x, y, theta, status, nsteps, max_amp, max_lam, samples).
    """
    cdef int m = 2 * n + 1
    cdef int K = len(cosc_seq[0]) if m else 0
    cdef bint forced
    cdef double inv_two_beta = 1.0 / (2.0 * beta)
    cdef double two_n2 = 2 * n + 2
    cdef int i, k

    mbuf = array.array("d", [0.0] * m)
    cbuf2 = array.array("d", [0.0] * (m * K if K else 1))
    sbuf2 = array.array("d", [0.0] * (m * K if K else 1))
    forced = K > 0
    for i in range(m):
        mbuf[i] = means_seq[i]
        if mbuf[i] != 0.0:
            forced = True
        for k in range(K):
            cbuf2[i * K + k] = cosc_seq[i][k]
            sbuf2[i * K + k] = sinc_seq[i][k]
    cdef double[::1] means = mbuf
    cdef double[::1] cosc = cbuf2
    cdef double[::1] sinc = sbuf2
    # scratch for per-stage cos/sin values
    tbuf = array.array("d", [0.0] * (2 * K if K else 2))
    cdef double[::1] tview = tbuf
    cdef double* cb = &tview[0]
    cdef double* sb = &tview[0] + (K if K else 1)

    samples = [(t, x, y)] if record else None
    cdef double max_amp = fabs(x) + fabs(y)
    cdef double max_lam = 0.0
    cdef long nsteps = 0
    cdef double span = t_end - t
    cdef Deriv d

    if span == 0.0:
        if track_theta:
            d = _rhs(t, x, y, n, m, K, means, cosc, sinc, forced, track_theta,
                     alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
            max_lam = d.lam
        return t, x, y, theta, OK, 0, max_amp, max_lam, samples
    if span < 0.0:
        raise ValueError("t_end must be >= t")

    d = _rhs(t, x, y, n, m, K, means, cosc, sinc, forced, track_theta,
             alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
    cdef double dx0 = d.dx, dy0 = d.dy, dth0 = d.dth, lam0 = d.lam
    max_lam = lam0
    if track_theta and lam0 < lam_guard:
        return t, x, y, theta, ORIGIN, 0, max_amp, max_lam, samples

    cdef double scx = atol + rtol * fabs(x)
    cdef double scy = atol + rtol * fabs(y)
    cdef double d0 = sqrt(0.5 * ((x / scx) ** 2 + (y / scy) ** 2))
    cdef double d1 = sqrt(0.5 * ((dx0 / scx) ** 2 + (dy0 / scy) ** 2))
    cdef double h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = fmin(fmin(h, max_step), span)

    cdef double k1x = dx0, k1y = dy0, k1t = dth0
    cdef double k2x, k2y, k2t, k3x, k3y, k3t, k4x, k4y, k4t
    cdef double k5x, k5y, k5t, k6x, k6y, k6t, k7x, k7y, k7t, lam7
    cdef double xs, ys, xn, yn, ex, ey, err, amp, factor
    cdef int status = OK

    while t < t_end:
        if h < 1e-14 * fmax(1.0, fabs(t)):
            status = UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t

        xs = x + h * (_A21 * k1x)
        ys = y + h * (_A21 * k1y)
        d = _rhs(t + _C2 * h, xs, ys, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k2x = d.dx; k2y = d.dy; k2t = d.dth
        xs = x + h * (_A31 * k1x + _A32 * k2x)
        ys = y + h * (_A31 * k1y + _A32 * k2y)
        d = _rhs(t + _C3 * h, xs, ys, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k3x = d.dx; k3y = d.dy; k3t = d.dth
        xs = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        ys = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        d = _rhs(t + _C4 * h, xs, ys, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k4x = d.dx; k4y = d.dy; k4t = d.dth
        xs = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        ys = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        d = _rhs(t + _C5 * h, xs, ys, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k5x = d.dx; k5y = d.dy; k5t = d.dth
        xs = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x
                      + _A65 * k5x)
        ys = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y
                      + _A65 * k5y)
        d = _rhs(t + h, xs, ys, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k6x = d.dx; k6y = d.dy; k6t = d.dth

        xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        d = _rhs(t + h, xn, yn, n, m, K, means, cosc, sinc, forced,
                 track_theta, alpha, beta, dconst, inv_two_beta, two_n2, cb, sb)
        k7x = d.dx; k7y = d.dy; k7t = d.dth; lam7 = d.lam

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x
                  + _E6 * k6x + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y
                  + _E6 * k6y + _E7 * k7y)
        scx = atol + rtol * fmax(fabs(x), fabs(xn))
        scy = atol + rtol * fmax(fabs(y), fabs(yn))
        err = sqrt(0.5 * ((ex / scx) ** 2 + (ey / scy) ** 2))

        if err <= 1.0:
            if track_theta:
                theta += h * (_B1 * k1t + _B3 * k3t + _B4 * k4t
                              + _B5 * k5t + _B6 * k6t)
            t = t + h
            x = xn
            y = yn
            k1x = k7x; k1y = k7y; k1t = k7t
            nsteps += 1
            amp = fabs(x) + fabs(y)
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
            factor = 5.0 if err == 0.0 else fmin(5.0, 0.9 * pow(err, -0.2))
            h = fmin(h * factor, max_step)
        else:
            h *= fmax(0.2, 0.9 * pow(err, -0.2))

    return t, x, y, theta, status, nsteps, max_amp, max_lam, samples
