"""Numba-compiled inner loops for the ODE and PDE integrators.

The parameter vector layout matches ModelParams.as_array():
(A, B, sigma, c1, c2, c3, c4, eta, delta, nu, h, mu1, mu2, eps).
"""

import numba
import numpy as np

EXTINCTION_THRESHOLD = 1e-6
BLOWUP_THRESHOLD = 1e6
NEGATIVE_ROUNDOFF = 1e-12
# values below this are flushed to exact zero (avoids denormal slowdown
# during post-collapse exponential decay; far below every threshold used)
TINY_FLUSH = 1e-30


@numba.njit(cache=True)
def _rhs(par, c, u, v):
    A, B, sigma, c1, c2, c3, c4, eta, delta, nu, h, mu1, mu2, eps = (
        par[0], par[1], par[2], par[3], par[4], par[5], par[6],
        par[7], par[8], par[9], par[10], par[11], par[12], par[13])
    F = A * u / (c + 1.0) - delta * u * c / (c + c2) \
        - nu * c * v / (c + c3) - c
    G = (B * c / (c + c1) - u) * u - u * v / (u + h) - sigma * u
    H = eta * c * c / (c * c + c4 * c4) * u * v / (u + h) \
        - mu1 * v - mu2 * v * v
    return F, G, eps * H


@numba.njit(cache=True)
def ode_run(par, c0, u0, v0, dt, nsteps, stride, use_euler, ext_thr):
    """Fixed-step integration of the nonspatial system.

    Returns (states, nrec, ext_step, blow_step, worst_negative) where
    states[k] is the state after step k*stride, ext_step is the first step
    at which all components fell below the extinction threshold (-1 if
    never), blow_step the step at which a component exceeded the blow-up
    threshold (-1 if never; integration halts there), and worst_negative
    the most negative component value seen before clamping.
    """
    nrec = nsteps // stride + 1
    states = np.empty((nrec, 3))
    states[0, 0] = c0
    states[0, 1] = u0
    states[0, 2] = v0
    c, u, v = c0, u0, v0
    k = 1
    ext_step = -1
    blow_step = -1
    worst_neg = 0.0
    for i in range(nsteps):
        if use_euler:
            F, G, H = _rhs(par, c, u, v)
            c += dt * F
            u += dt * G
            v += dt * H
        else:
            k1c, k1u, k1v = _rhs(par, c, u, v)
            k2c, k2u, k2v = _rhs(par, c + 0.5 * dt * k1c,
                                 u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
            k3c, k3u, k3v = _rhs(par, c + 0.5 * dt * k2c,
                                 u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
            k4c, k4u, k4v = _rhs(par, c + dt * k3c,
                                 u + dt * k3u, v + dt * k3v)
            c += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
            u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if c < TINY_FLUSH:
            if c < worst_neg:
                worst_neg = c
            c = 0.0
        if u < TINY_FLUSH:
            if u < worst_neg:
                worst_neg = u
            u = 0.0
        if v < TINY_FLUSH:
            if v < worst_neg:
                worst_neg = v
            v = 0.0
        if (i + 1) % stride == 0:
            states[k, 0] = c
            states[k, 1] = u
            states[k, 2] = v
            k += 1
        if ext_step < 0 and c < ext_thr and u < ext_thr and v < ext_thr:
            ext_step = i + 1
        if abs(c) > BLOWUP_THRESHOLD or abs(u) > BLOWUP_THRESHOLD \
                or abs(v) > BLOWUP_THRESHOLD or not (c == c and u == u
                                                     and v == v):
            blow_step = i + 1
            break
    return states[:k], k, ext_step, blow_step, worst_neg


@numba.njit(cache=True)
def lap5(f, dx2_12):
    """Five-point fourth-order Laplacian with even (mirror) ghost nodes.

    dx2_12 is 12*dx^2. The mirror extension f[-1]=f[1], f[-2]=f[2] (and
    symmetrically on the right) implements zero-flux boundaries.
    """
    n = f.size
    out = np.empty(n)
    for i in range(n):
        im1 = i - 1 if i >= 1 else 1
        im2 = i - 2 if i >= 2 else 2 - i
        ip1 = i + 1 if i + 1 < n else n - 2
        ip2 = i + 2 if i + 2 < n else 2 * n - 4 - i
        out[i] = (-f[im2] + 16.0 * f[im1] - 30.0 * f[i]
                  + 16.0 * f[ip1] - f[ip2]) / dx2_12
    return out


@numba.njit(cache=True)
def pde_run(par, c, u, v, D, dx, dt, nsteps, snap_stride,
            anoxia_level, react_on):
    """Forward-Euler reaction-diffusion loop.

    Returns (snaps, nsnap, anoxia_step, blow_step) where snaps[k] holds
    the three fields after step k*snap_stride. anoxia_step is the first
    step at which the spatial max of c fell below anoxia_level (-1 if
    never); blow_step is where a field left the finite range (-1 if
    never; the loop halts there with the last valid snapshot kept).
    """
    A, B, sigma, c1, c2, c3, c4, eta, delta, nu, h, mu1, mu2, eps = (
        par[0], par[1], par[2], par[3], par[4], par[5], par[6],
        par[7], par[8], par[9], par[10], par[11], par[12], par[13])
    dx2_12 = 12.0 * dx * dx
    n = c.size
    nsnap = nsteps // snap_stride + 1
    snaps = np.empty((nsnap, 3, n))
    snaps[0, 0] = c
    snaps[0, 1] = u
    snaps[0, 2] = v
    k = 1
    anoxia_step = -1
    blow_step = -1
    for i in range(nsteps):
        lc = lap5(c, dx2_12)
        lu = lap5(u, dx2_12)
        lv = lap5(v, dx2_12)
        if react_on:
            F = A * u / (c + 1.0) - delta * u * c / (c + c2) \
                - nu * c * v / (c + c3) - c
            G = (B * c / (c + c1) - u) * u - u * v / (u + h) - sigma * u
            H = eta * c * c / (c * c + c4 * c4) * u * v / (u + h) \
                - mu1 * v - mu2 * v * v
            c = c + dt * (lc + F)
            u = u + dt * (lu + G)
            v = v + dt * (D * lv + eps * H)
        else:
            c = c + dt * lc
            u = u + dt * lu
            v = v + dt * (D * lv)
        for j in range(n):
            # clamp negatives and flush vanishing values to zero so the
            # post-collapse decay does not hit slow denormal arithmetic
            if c[j] < TINY_FLUSH:
                c[j] = 0.0
            if u[j] < TINY_FLUSH:
                u[j] = 0.0
            if v[j] < TINY_FLUSH:
                v[j] = 0.0
        bad = False
        cmax = 0.0
        for j in range(n):
            if c[j] > cmax:
                cmax = c[j]
            if not (c[j] < BLOWUP_THRESHOLD and u[j] < BLOWUP_THRESHOLD
                    and v[j] < BLOWUP_THRESHOLD):
                bad = True
        if bad:
            blow_step = i + 1
            break
        if anoxia_step < 0 and cmax < anoxia_level:
            anoxia_step = i + 1
        if (i + 1) % snap_stride == 0:
            snaps[k, 0] = c
            snaps[k, 1] = u
            snaps[k, 2] = v
            k += 1
    return snaps[:k], k, anoxia_step, blow_step
