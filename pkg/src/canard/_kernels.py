"""Adaptive Runge-Kutta core shared by every integration entry point.

The stepper is a Dormand-Prince 5(4) embedded pair with the quartic
dense-output interpolant and proportional-integral step control.  The
same source is either compiled with numba or run as plain Python: set
CANARD_DISABLE_NUMBA=1 to force the Python path.  Right-hand sides are
functions (t, u, par) -> ndarray(2); a compiled core is built per rhs by
make_core, and only numba-compiled rhs functions get a compiled core."""

from __future__ import annotations

import math
import os

import numpy as np

_env = os.environ.get("CANARD_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _env in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def maybe_njit(fn):
    """numba.njit when compilation is enabled, identity otherwise."""
    if NUMBA_ENABLED:
        return numba.njit(cache=False)(fn)
    return fn


def _is_compiled(fn) -> bool:
    return NUMBA_ENABLED and isinstance(fn, numba.core.dispatcher.Dispatcher)


# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                      64448.0 / 6561.0, -212.0 / 729.0)
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                      -2187.0 / 6784.0, 11.0 / 84.0)
# b minus the embedded 4th-order weights
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense-output weights
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_STIFF = 2
STATUS_BAD_FIELD = 3

_MAX_REJECT_STREAK = 30


def make_core(rhs):
    """Build the integration loop around one rhs.  Returns
    core(par, u0, t_end, rtol, atol, hmax, sign, store_dense) ->
    (status, n, ts, ys, rcont) where ts[:n+1], ys[:n+1] are the accepted
    mesh and rcont[:n] holds the per-step interpolant coefficients."""

    def core(par, u0, t_end, rtol, atol, hmax, sign, store_dense):
        t = 0.0
        y = u0.copy()
        k1 = sign * rhs(t, y, par)

        # starter step: scipy-style two-probe estimate
        sc0 = atol + rtol * abs(y[0])
        sc1 = atol + rtol * abs(y[1])
        d0 = math.sqrt(0.5 * ((y[0] / sc0) ** 2 + (y[1] / sc1) ** 2))
        d1 = math.sqrt(0.5 * ((k1[0] / sc0) ** 2 + (k1[1] / sc1) ** 2))
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        h0 = min(h0, t_end)
        yp = y + h0 * k1
        kp = sign * rhs(t + h0, yp, par)
        d2 = math.sqrt(0.5 * (((kp[0] - k1[0]) / sc0) ** 2
                              + ((kp[1] - k1[1]) / sc1) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100.0 * h0, h1, hmax, t_end)

        cap = 1024
        ts = np.empty(cap + 1)
        ys = np.empty((cap + 1, 2))
        rc = np.empty((cap, 5, 2)) if store_dense else np.empty((1, 5, 2))
        ts[0] = 0.0
        ys[0, 0] = y[0]
        ys[0, 1] = y[1]
        n = 0
        streak = 0
        errold = 1e-4
        status = STATUS_OK

        while t < t_end:
            if not (math.isfinite(y[0]) and math.isfinite(y[1])
                    and math.isfinite(k1[0]) and math.isfinite(k1[1])):
                status = STATUS_BAD_FIELD
                break
            if h < 1e-14 * max(1.0, abs(t)):
                status = STATUS_UNDERFLOW
                break
            h = min(h, hmax, t_end - t)

            k2 = sign * rhs(t + C2 * h, y + h * (A21 * k1), par)
            k3 = sign * rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2), par)
            k4 = sign * rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), par)
            k5 = sign * rhs(t + C5 * h,
                            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), par)
            k6 = sign * rhs(t + h,
                            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4
                                     + A65 * k5), par)
            ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = sign * rhs(t + h, ynew, par)
            if not (math.isfinite(ynew[0]) and math.isfinite(ynew[1])
                    and math.isfinite(k7[0]) and math.isfinite(k7[1])):
                status = STATUS_BAD_FIELD
                break

            e0 = h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0]
                      + E6 * k6[0] + E7 * k7[0])
            e1c = h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1]
                       + E6 * k6[1] + E7 * k7[1])
            s0 = atol + rtol * max(abs(y[0]), abs(ynew[0]))
            s1 = atol + rtol * max(abs(y[1]), abs(ynew[1]))
            err = math.sqrt(0.5 * ((e0 / s0) ** 2 + (e1c / s1) ** 2))

            if err <= 1.0:
                if store_dense:
                    for j in range(2):
                        ydiff = ynew[j] - y[j]
                        bspl = h * k1[j] - ydiff
                        rc[n, 0, j] = y[j]
                        rc[n, 1, j] = ydiff
                        rc[n, 2, j] = bspl
                        rc[n, 3, j] = ydiff - h * k7[j] - bspl
                        rc[n, 4, j] = h * (D1 * k1[j] + D3 * k3[j] + D4 * k4[j]
                                           + D5 * k5[j] + D6 * k6[j] + D7 * k7[j])
                t = t + h
                y = ynew
                k1 = k7
                n += 1
                if n >= cap:
                    newcap = cap * 2
                    ts2 = np.empty(newcap + 1)
                    ys2 = np.empty((newcap + 1, 2))
                    ts2[:cap + 1] = ts[:cap + 1]
                    ys2[:cap + 1] = ys[:cap + 1]
                    ts = ts2
                    ys = ys2
                    if store_dense:
                        rc2 = np.empty((newcap, 5, 2))
                        rc2[:cap] = rc[:cap]
                        rc = rc2
                    cap = newcap
                ts[n] = t
                ys[n, 0] = y[0]
                ys[n, 1] = y[1]
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = 0.9 * err ** (-0.17) * errold ** 0.04
                    fac = min(10.0, max(0.2, fac))
                h = h * fac
                errold = max(err, 1e-4)
                streak = 0
            else:
                h = h * min(0.9, max(0.1, 0.9 * err ** (-0.2)))
                streak += 1
                if streak >= _MAX_REJECT_STREAK:
                    status = STATUS_STIFF
                    break

        return status, n, ts, ys, rc

    if _is_compiled(rhs):
        return numba.njit(cache=False)(core)
    return core


def _allee_rhs_impl(t, u, par):
    m = par[0]
    n = par[1]
    alpha = par[2]
    beta = par[3]
    gamma = par[4]
    eps = par[5]
    x = u[0]
    y = u[1]
    out = np.empty(2)
    out[0] = x * (x / (m + x) - n - x - y)
    out[1] = eps * (y * (alpha * x - beta - gamma * y))
    return out


allee_rhs = maybe_njit(_allee_rhs_impl)


def dense_eval(rcont_row, theta):
    """Interpolant value at fraction theta of the step."""
    t1 = 1.0 - theta
    return rcont_row[0] + theta * (rcont_row[1] + t1 * (
        rcont_row[2] + theta * (rcont_row[3] + t1 * rcont_row[4])))
