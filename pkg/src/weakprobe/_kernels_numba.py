"""Trajectory inner loop compiled with numba.

Arithmetic is written out on real/imaginary parts in the same order as the
numpy twin in ``_kernels_numpy`` so both backends round identically.
State layout per trajectory: ``rho = [rho00, rho11, Re rho01, Im rho01]`` and
``acc`` holds the propagator entries 00, 01, 10, 11 as (re, im) pairs.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _search(cum_l, cum_r, pl, pr, u):
    lo = 0
    hi = cum_l.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if pl * cum_l[mid] + pr * cum_r[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def propagate(rho, acc, exps, uniforms, record, n_steps, replay,
              ka, kb, kd, cum_l, cum_r, l0, l1, ch, sh, c2, s2,
              hist_rho, hist_fid):
    """Advance every trajectory by ``n_steps``; returns the first dead index or -1."""
    n = rho.shape[0]
    keep_hist = hist_rho.shape[1] > 0
    ll = l0 * l0
    rr = l1 * l1
    lr = 2.0 * l0 * l1
    for i in range(n):
        x = rho[i, 0]
        y = rho[i, 1]
        zr = rho[i, 2]
        zi = rho[i, 3]
        a00r = acc[i, 0]
        a00i = acc[i, 1]
        a01r = acc[i, 2]
        a01i = acc[i, 3]
        a10r = acc[i, 4]
        a10i = acc[i, 5]
        a11r = acc[i, 6]
        a11i = acc[i, 7]
        e = exps[i]
        for t in range(n_steps):
            if replay:
                k = record[i, t]
            else:
                pl = ll * x + rr * y + lr * zr
                pr = 1.0 - pl
                k = _search(cum_l, cum_r, pl, pr, uniforms[i, t])
                record[i, t] = k
            a = ka[k]
            b = kb[k]
            d = kd[k]

            # Hamiltonian precession of the coherence
            tr_ = zr * c2 - zi * s2
            ti_ = zr * s2 + zi * c2
            zr = tr_
            zi = ti_
            aa = a * a
            bb = b * b
            dd = d * d
            ab = a * b
            bd = b * d
            ad = a * d
            nx = aa * x + 2.0 * ab * zr + bb * y
            ny = bb * x + 2.0 * bd * zr + dd * y
            nzr = ab * x + bd * y + (bb + ad) * zr
            nzi = (ad - bb) * zi
            trace = nx + ny
            if not trace > 1e-300:
                return i
            x = nx / trace
            y = ny / trace
            zr = nzr / trace
            zi = nzi / trace

            # propagator: rows scaled by exp(+-i E dt / 2), then Kraus
            r0 = a00r * ch - a00i * sh
            i0 = a00r * sh + a00i * ch
            r1 = a01r * ch - a01i * sh
            i1 = a01r * sh + a01i * ch
            r2 = a10r * ch + a10i * sh
            i2 = a10i * ch - a10r * sh
            r3 = a11r * ch + a11i * sh
            i3 = a11i * ch - a11r * sh
            a00r = a * r0 + b * r2
            a00i = a * i0 + b * i2
            a01r = a * r1 + b * r3
            a01i = a * i1 + b * i3
            a10r = b * r0 + d * r2
            a10i = b * i0 + d * i2
            a11r = b * r1 + d * r3
            a11i = b * i1 + d * i3
            nf = (a00r * a00r + a00i * a00i + a01r * a01r + a01i * a01i
                  + a10r * a10r + a10i * a10i + a11r * a11r + a11i * a11i)
            if nf < 0.25 or nf > 4.0:
                m, ex = math.frexp(math.sqrt(nf))
                f = math.ldexp(1.0, -ex)
                a00r *= f
                a00i *= f
                a01r *= f
                a01i *= f
                a10r *= f
                a10i *= f
                a11r *= f
                a11i *= f
                e += ex
                nf = (a00r * a00r + a00i * a00i + a01r * a01r + a01i * a01i
                      + a10r * a10r + a10i * a10i + a11r * a11r + a11i * a11i)

            if keep_hist:
                hist_rho[i, t, 0] = x
                hist_rho[i, t, 1] = y
                hist_rho[i, t, 2] = zr
                hist_rho[i, t, 3] = zi
                dr = (a00r * a11r - a00i * a11i) - (a01r * a10r - a01i * a10i)
                di = (a00r * a11i + a00i * a11r) - (a01r * a10i + a01i * a10r)
                q = 1.0 - 4.0 * (dr * dr + di * di) / (nf * nf)
                hist_fid[i, t] = math.sqrt(q) if q > 0.0 else 0.0

        rho[i, 0] = x
        rho[i, 1] = y
        rho[i, 2] = zr
        rho[i, 3] = zi
        acc[i, 0] = a00r
        acc[i, 1] = a00i
        acc[i, 2] = a01r
        acc[i, 3] = a01i
        acc[i, 4] = a10r
        acc[i, 5] = a10i
        acc[i, 6] = a11r
        acc[i, 7] = a11i
        exps[i] = e
    return -1
