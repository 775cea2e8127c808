"""Compiled Monte Carlo engine (numba).

Bit-identical twin of the pure-python path: the philox block, the AS 241
inverse normal, and the state/clock updates are written with exactly the
same arithmetic expressions in the same order as _philox.py / sde.py, so a
trajectory computed here matches the reference path to the last bit.  The
test suite enforces this.

Rate families are dispatched on an integer tag so one kernel serves all of
them without boxing; tabulated rates receive their knot arrays directly.
"""
from __future__ import annotations

import math

import numba
import numpy as np
from numba import njit

U64 = np.uint64
MASK32 = U64(0xFFFFFFFF)
PHILOX_M0 = U64(0xD2E7470EE14C6C93)
PHILOX_M1 = U64(0xCA5A826395121157)
PHILOX_W0 = U64(0x9E3779B97F4A7C15)
PHILOX_W1 = U64(0xBB67AE8584CAA73B)
INV53 = 1.0 / 9007199254740992.0  # 2**-53
SQRT2 = math.sqrt(2.0)

KIND_PIECEWISE = 0
KIND_ARCTAN = 1
KIND_EXPONENTIAL = 2
KIND_TABULATED = 3

# status codes written per sample
OK = 0
CENSORED = 1
NONFINITE = 2


@njit(numba.types.UniTuple(numba.uint64, 4)(numba.uint64, numba.uint64, numba.uint64),
      cache=True, inline="always")
def _philox_block(block, k0, k1):
    c0 = block
    c1 = U64(0)
    c2 = U64(0)
    c3 = U64(0)
    for _ in range(10):
        a_lo = PHILOX_M0 & MASK32
        a_hi = PHILOX_M0 >> U64(32)
        b_lo = c0 & MASK32
        b_hi = c0 >> U64(32)
        t = a_lo * b_lo
        t1 = a_hi * b_lo + (t >> U64(32))
        t2 = a_lo * b_hi + (t1 & MASK32)
        hi0 = a_hi * b_hi + (t1 >> U64(32)) + (t2 >> U64(32))
        lo0 = PHILOX_M0 * c0
        a_lo = PHILOX_M1 & MASK32
        a_hi = PHILOX_M1 >> U64(32)
        b_lo = c2 & MASK32
        b_hi = c2 >> U64(32)
        t = a_lo * b_lo
        t1 = a_hi * b_lo + (t >> U64(32))
        t2 = a_lo * b_hi + (t1 & MASK32)
        hi1 = a_hi * b_hi + (t1 >> U64(32)) + (t2 >> U64(32))
        lo1 = PHILOX_M1 * c2
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    return c0, c1, c2, c3


@njit(numba.float64(numba.float64), cache=True, inline="always")
def _norm_ppf(p):
    # Wichura AS 241 (PPND16); expression mirrors _philox.norm_ppf exactly.
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    if q < 0.0:
        val = -val
    return val


@njit(cache=True, inline="always")
def _eval_rate(kind, p0, p1, p2, p3, xs, rs, x):
    if kind == KIND_PIECEWISE:
        if x >= 0.0:
            return p0
        return 0.0
    if kind == KIND_ARCTAN:
        return math.atan(p0 * x) + p1
    if kind == KIND_EXPONENTIAL:
        arg = -p1 * (x - p2) / p2
        if arg > 700.0:
            return p3
        r = p0 * math.exp(arg)
        if r > p3:
            return p3
        return r
    # tabulated, clamped linear interpolation
    n = xs.shape[0]
    if x <= xs[0]:
        return rs[0]
    if x >= xs[n - 1]:
        return rs[n - 1]
    j = np.searchsorted(xs, x)
    x0 = xs[j - 1]
    x1 = xs[j]
    w = (x - x0) / (x1 - x0)
    return rs[j - 1] + w * (rs[j] - rs[j - 1])


@njit(cache=True, nogil=True)
def run_batch(seed, start, n, eps, x0, dt, max_steps,
              kind, p0, p1, p2, p3, xs, rs,
              out_tau, out_status, out_steps):
    """Simulate samples start..start+n-1 into the output slots [0, n).

    Serial on purpose: callers parallelise by invoking this on disjoint
    contiguous chunks from their own threads (the GIL is released here), so
    results cannot depend on any threading layer's scheduling.
    """
    sdt = math.sqrt(dt)
    for i in range(n):
        k0 = U64(seed)
        k1 = U64(start) + U64(i)
        # draw 0: the Exp(1) firing threshold
        r0, buf1, buf2, buf3 = _philox_block(U64(0), k0, k1)
        u = (float(r0 >> U64(11)) + 1.0) * INV53
        gamma = -math.log(u)
        lane = 1
        block = U64(0)
        x = x0
        clock = 0.0
        status = CENSORED
        tau = 0.0
        ksteps = 0
        for k in range(max_steps):
            if lane == 1:
                raw = buf1
                lane = 2
            elif lane == 2:
                raw = buf2
                lane = 3
            elif lane == 3:
                raw = buf3
                lane = 0
                block += U64(1)
            else:
                buf0, buf1, buf2, buf3 = _philox_block(block, k0, k1)
                raw = buf0
                lane = 1
            un = float((raw >> U64(12)) * U64(2) + U64(1)) * INV53
            z = _norm_ppf(un)
            db = sdt * z
            x = x - eps * x * dt + SQRT2 * db
            ksteps = k + 1
            if not math.isfinite(x):
                status = NONFINITE
                break
            clock = clock + _eval_rate(kind, p0, p1, p2, p3, xs, rs, x) * dt
            if clock >= gamma:
                status = OK
                tau = ksteps * dt
                break
        out_steps[i] = ksteps
        out_tau[i] = tau
        out_status[i] = status


# ---------------------------------------------------------------------------
# Fokker-Planck time loop
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def fp_run(lower, im, cp, kill_half, lam, f, h, dt, n_steps,
           big_n_series, n_series, kill_series, snap_steps, snap_store,
           monitors):
    """March the split scheme n_steps times, recording per-step series.

    lower/im/cp: the reusable Thomas factorization of (I - dt*L) -- lower
    band, inverted pivots, normalized upper band.  kill_half = exp(-lam*dt/2)
    nodewise.  big_n_series[k] receives trapz(f) and n_series[k] receives
    trapz(lam*f) after step k (slot 0 is the initial state); kill_series[k]
    gets the mass removed during step k+1.
    monitors: [0] max |mass ledger residual|, [1] min density seen,
    [2] max boundary mass (first/last three nodes, trapezoid), updated as
    running extrema.  snap_steps must be sorted ascending; snapshot j copies
    f after step snap_steps[j].
    """
    n = f.shape[0]
    y = np.empty(n)

    def _trapz(v):
        # manual trapezoid to keep this nopython and allocation free
        acc = 0.5 * (v[0] + v[n - 1])
        for i in range(1, n - 1):
            acc += v[i]
        return acc * h

    mass = _trapz(f)
    big_n_series[0] = mass
    acc = 0.5 * (lam[0] * f[0] + lam[n - 1] * f[n - 1])
    for i in range(1, n - 1):
        acc += lam[i] * f[i]
    n_series[0] = acc * h

    snap_j = 0
    for k in range(n_steps):
        removed = 0.0
        # first exact killing half-step
        acc = 0.5 * (f[0] * (1.0 - kill_half[0])
                     + f[n - 1] * (1.0 - kill_half[n - 1]))
        for i in range(1, n - 1):
            acc += f[i] * (1.0 - kill_half[i])
        removed += acc * h
        for i in range(n):
            f[i] = f[i] * kill_half[i]
        # transport: solve (I - dt*L) f_new = f with the cached factorization
        y[0] = f[0] * im[0]
        for i in range(1, n):
            y[i] = (f[i] - lower[i] * y[i - 1]) * im[i]
        f[n - 1] = y[n - 1]
        for i in range(n - 2, -1, -1):
            f[i] = y[i] - cp[i] * f[i + 1]
        # second killing half-step
        acc = 0.5 * (f[0] * (1.0 - kill_half[0])
                     + f[n - 1] * (1.0 - kill_half[n - 1]))
        for i in range(1, n - 1):
            acc += f[i] * (1.0 - kill_half[i])
        removed += acc * h
        for i in range(n):
            f[i] = f[i] * kill_half[i]

        new_mass = _trapz(f)
        resid = abs(new_mass - (mass - removed))
        if resid > monitors[0]:
            monitors[0] = resid
        mass = new_mass
        big_n_series[k + 1] = new_mass
        kill_series[k] = removed

        fmin = f[0]
        for i in range(1, n):
            if f[i] < fmin:
                fmin = f[i]
        if fmin < monitors[1]:
            monitors[1] = fmin
        bmass = h * (0.5 * f[0] + f[1] + 0.5 * f[2]
                     + 0.5 * f[n - 3] + f[n - 2] + 0.5 * f[n - 1])
        if bmass > monitors[2]:
            monitors[2] = bmass

        acc = 0.5 * (lam[0] * f[0] + lam[n - 1] * f[n - 1])
        for i in range(1, n - 1):
            acc += lam[i] * f[i]
        n_series[k + 1] = acc * h

        if snap_j < snap_steps.shape[0] and snap_steps[snap_j] == k + 1:
            for i in range(n):
                snap_store[snap_j, i] = f[i]
            snap_j += 1
