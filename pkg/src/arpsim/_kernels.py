"""Compiled right-hand sides and the Dormand-Prince 5(4) integrator.

The parameter vector layout is produced by :func:`arpsim.model.pack`:

    [0:6]   pump   (shape, amplitude, center, width, chirp, chirp center)
    [6:12]  stokes (same)
    [12]    one-photon detuning at the chirp center
    [13]    two-photon detuning at the chirp center
    [14]    decay rate i -> g
    [15]    decay rate r -> i

All values are already angular (rad/us) where applicable.
"""

import numpy as np
from numba import njit

SCHRODINGER = 0
LINDBLAD = 1
EFFECTIVE = 2

DIMS = (3, 9, 2)

# status codes
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
NON_FINITE = 3

_jit = dict(cache=True, nogil=True, fastmath=False)


@njit(**_jit)
def field(p, o, t):
    if p[o] == 1.0:
        return p[o + 1]
    x = (t - p[o + 2]) / p[o + 3]
    return p[o + 1] * np.exp(-0.5 * x * x)


@njit(**_jit)
def detunings(p, t):
    pump_off = p[4] * (t - p[5])
    stokes_off = p[10] * (t - p[11])
    return p[12] - pump_off, p[13] - pump_off - stokes_off


@njit(**_jit)
def rhs(kind, t, y, p, out):
    wp = field(p, 0, t)
    ws = field(p, 6, t)
    big, small = detunings(p, t)
    if kind == SCHRODINGER:
        # i dc/dt = H c with H = [[0, -wp/2, 0], [-wp/2, D, -ws/2], [0, -ws/2, d]]
        cg, ci, cr = y[0], y[1], y[2]
        out[0] = 0.5j * wp * ci
        out[1] = -1j * big * ci + 0.5j * (wp * cg + ws * cr)
        out[2] = -1j * small * cr + 0.5j * ws * ci
    elif kind == LINDBLAD:
        h01 = -0.5 * wp
        h12 = -0.5 * ws
        # rho stored row-major; H is real symmetric and tridiagonal
        for a in range(3):
            for b in range(3):
                # (H rho)_ab
                hr = 0j
                if a == 0:
                    hr = h01 * y[3 + b]
                elif a == 1:
                    hr = h01 * y[b] + big * y[3 + b] + h12 * y[6 + b]
                else:
                    hr = h12 * y[3 + b] + small * y[6 + b]
                # (rho H)_ab
                rh = 0j
                if b == 0:
                    rh = y[3 * a + 1] * h01
                elif b == 1:
                    rh = y[3 * a] * h01 + y[3 * a + 1] * big + y[3 * a + 2] * h12
                else:
                    rh = y[3 * a + 1] * h12 + y[3 * a + 2] * small
                out[3 * a + b] = -1j * (hr - rh)
        g_ig = p[14]
        g_ri = p[15]
        # channel i -> g
        out[0] += g_ig * y[4]
        for j in range(3):
            out[3 + j] -= 0.5 * g_ig * y[3 + j]
            out[3 * j + 1] -= 0.5 * g_ig * y[3 * j + 1]
        # channel r -> i
        out[4] += g_ri * y[8]
        for j in range(3):
            out[6 + j] -= 0.5 * g_ri * y[6 + j]
            out[3 * j + 2] -= 0.5 * g_ri * y[3 * j + 2]
    else:
        # intermediate state adiabatically eliminated; coupling is omega_eff / 2
        half_eff = wp * ws / (4.0 * big)
        stark_g = wp * wp / (4.0 * big)
        stark_r = ws * ws / (4.0 * big)
        cg, cr = y[0], y[1]
        out[0] = 1j * (stark_g * cg + half_eff * cr)
        out[1] = -1j * ((small - stark_r) * cr - half_eff * cg)


@njit(**_jit)
def populations(kind, y, pops):
    if kind == SCHRODINGER:
        for k in range(3):
            pops[k] = y[k].real * y[k].real + y[k].imag * y[k].imag
    elif kind == LINDBLAD:
        pops[0] = y[0].real
        pops[1] = y[4].real
        pops[2] = y[8].real
    else:
        pops[0] = y[0].real * y[0].real + y[0].imag * y[0].imag
        pops[1] = 0.0
        pops[2] = y[1].real * y[1].real + y[1].imag * y[1].imag


# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
FAC_MIN = 0.2  # step ratio h_new / h is kept in [FAC_MIN, FAC_MAX]
FAC_MAX = 10.0
BETA = 0.04  # PI stabilisation exponent
EXPO = 0.2 - 0.75 * BETA


@njit(**_jit)
def _error_norm(y, ynew, err, rtol, atol):
    acc = 0.0
    n = y.shape[0]
    for k in range(n):
        sk = atol + rtol * max(abs(y[k]), abs(ynew[k]))
        e = abs(err[k]) / sk
        acc += e * e
    return np.sqrt(acc / n)


@njit(**_jit)
def dopri5(kind, p, y0, t_samples, rtol, atol, max_steps):
    """Integrate from ``t_samples[0]`` and record the state at every sample.

    Steps are clipped so that each sample time is hit exactly.

    Returns ``(states, status, t_fail, n_accepted, n_rejected, err_sum, peaks)``
    where ``err_sum`` accumulates the max-abs local error estimate of every
    accepted step and ``peaks`` holds the max population of g, i, r seen at
    any accepted step.
    """
    n = y0.shape[0]
    m = t_samples.shape[0]
    states = np.empty((m, n), dtype=np.complex128)
    states[0] = y0
    peaks = np.zeros(3)
    pops = np.empty(3)
    populations(kind, y0, pops)
    for k in range(3):
        peaks[k] = pops[k]

    y = y0.copy()
    ynew = np.empty(n, dtype=np.complex128)
    tmp = np.empty(n, dtype=np.complex128)
    err = np.empty(n, dtype=np.complex128)
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    k5 = np.empty(n, dtype=np.complex128)
    k6 = np.empty(n, dtype=np.complex128)
    k7 = np.empty(n, dtype=np.complex128)

    t = t_samples[0]
    t_final = t_samples[m - 1]
    rhs(kind, t, y, p, k1)

    # initial step (Hairer & Wanner, II.4)
    d0 = 0.0
    d1 = 0.0
    for k in range(n):
        sk = atol + rtol * abs(y[k])
        d0 += (abs(y[k]) / sk) ** 2
        d1 += (abs(k1[k]) / sk) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, t_final - t)

    n_acc = 0
    n_rej = 0
    err_sum = 0.0
    fac_old = 1e-4
    nxt = 1
    status = OK
    last_rejected = False
    while nxt < m:
        if n_acc + n_rej >= max_steps:
            status = MAX_STEPS
            break
        target = t_samples[nxt]
        clipped = False
        h_use = h
        if t + h_use >= target:
            h_use = target - t
            clipped = True
        if h_use <= 1e-14 * max(1.0, abs(t)):
            status = STEP_UNDERFLOW
            break

        for k in range(n):
            tmp[k] = y[k] + h_use * A21 * k1[k]
        rhs(kind, t + C2 * h_use, tmp, p, k2)
        for k in range(n):
            tmp[k] = y[k] + h_use * (A31 * k1[k] + A32 * k2[k])
        rhs(kind, t + C3 * h_use, tmp, p, k3)
        for k in range(n):
            tmp[k] = y[k] + h_use * (A41 * k1[k] + A42 * k2[k] + A43 * k3[k])
        rhs(kind, t + C4 * h_use, tmp, p, k4)
        for k in range(n):
            tmp[k] = y[k] + h_use * (A51 * k1[k] + A52 * k2[k] + A53 * k3[k] + A54 * k4[k])
        rhs(kind, t + C5 * h_use, tmp, p, k5)
        for k in range(n):
            tmp[k] = y[k] + h_use * (
                A61 * k1[k] + A62 * k2[k] + A63 * k3[k] + A64 * k4[k] + A65 * k5[k]
            )
        rhs(kind, t + h_use, tmp, p, k6)
        for k in range(n):
            ynew[k] = y[k] + h_use * (
                A71 * k1[k] + A73 * k3[k] + A74 * k4[k] + A75 * k5[k] + A76 * k6[k]
            )
        rhs(kind, t + h_use, ynew, p, k7)
        for k in range(n):
            err[k] = h_use * (
                E1 * k1[k] + E3 * k3[k] + E4 * k4[k] + E5 * k5[k] + E6 * k6[k] + E7 * k7[k]
            )
        enorm = _error_norm(y, ynew, err, rtol, atol)
        if not np.isfinite(enorm):
            status = NON_FINITE
            break

        fac11 = max(enorm, 1e-300) ** EXPO
        if enorm <= 1.0:
            fac = fac11 / fac_old**BETA
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
            h_next = h_use / fac
            if last_rejected:
                h_next = min(h_next, h_use)
            fac_old = max(enorm, 1e-4)
            emax = 0.0
            for k in range(n):
                emax = max(emax, abs(err[k]))
            err_sum += emax
            n_acc += 1
            t = target if clipped else t + h_use
            for k in range(n):
                y[k] = ynew[k]
                k1[k] = k7[k]
            populations(kind, y, pops)
            for k in range(3):
                if pops[k] > peaks[k]:
                    peaks[k] = pops[k]
            if clipped:
                states[nxt] = y
                nxt += 1
                # keep the unclipped proposal for the controller
                h = max(h, h_next) if h_use < h else h_next
            else:
                h = h_next
            last_rejected = False
        else:
            h = h_use / min(1.0 / FAC_MIN, fac11 / SAFETY)
            n_rej += 1
            last_rejected = True

    return states, status, t, n_acc, n_rej, err_sum, peaks


@njit(**_jit)
def rhs_once(kind, t, y, p):
    out = np.empty(y.shape[0], dtype=np.complex128)
    rhs(kind, t, y, p, out)
    return out
