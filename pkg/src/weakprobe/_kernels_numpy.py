"""Pure-numpy twin of ``_kernels_numba.propagate``.

Vectorized across trajectories, sequential in time. Each elementwise
expression mirrors the compiled kernel term for term.
"""

import math

import numpy as np


def _search(cum_l, cum_r, pl, pr, u):
    n_bins = cum_l.shape[0]
    lo = np.zeros(pl.shape[0], dtype=np.int64)
    hi = np.full(pl.shape[0], n_bins - 1, dtype=np.int64)
    for _ in range(max(1, math.ceil(math.log2(n_bins))) + 1):
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) // 2
        hit = pl * cum_l[mid] + pr * cum_r[mid] > u
        hi = np.where(active & hit, mid, hi)
        lo = np.where(active & ~hit, mid + 1, lo)
    return lo


def propagate(rho, acc, exps, uniforms, record, n_steps, replay,
              ka, kb, kd, cum_l, cum_r, l0, l1, ch, sh, c2, s2,
              hist_rho, hist_fid):
    keep_hist = hist_rho.shape[1] > 0
    ll = l0 * l0
    rr = l1 * l1
    lr = 2.0 * l0 * l1
    x, y, zr, zi = (rho[:, j].copy() for j in range(4))
    a00r, a00i, a01r, a01i, a10r, a10i, a11r, a11i = (acc[:, j].copy() for j in range(8))
    e = exps.copy()
    for t in range(n_steps):
        if replay:
            k = record[:, t]
        else:
            pl = ll * x + rr * y + lr * zr
            pr = 1.0 - pl
            k = _search(cum_l, cum_r, pl, pr, uniforms[:, t])
            record[:, t] = k
        a = ka[k]
        b = kb[k]
        d = kd[k]

        zr, zi = zr * c2 - zi * s2, zr * s2 + zi * c2
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
        dead = ~(trace > 1e-300)
        if dead.any():
            return int(np.flatnonzero(dead)[0])
        x = nx / trace
        y = ny / trace
        zr = nzr / trace
        zi = nzi / trace

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
        out = (nf < 0.25) | (nf > 4.0)
        if out.any():
            _, ex = np.frexp(np.sqrt(nf[out]))
            f = np.ldexp(1.0, -ex)
            for arr in (a00r, a00i, a01r, a01i, a10r, a10i, a11r, a11i):
                arr[out] *= f
            e[out] += ex
            nf = (a00r * a00r + a00i * a00i + a01r * a01r + a01i * a01i
                  + a10r * a10r + a10i * a10i + a11r * a11r + a11i * a11i)

        if keep_hist:
            hist_rho[:, t, 0] = x
            hist_rho[:, t, 1] = y
            hist_rho[:, t, 2] = zr
            hist_rho[:, t, 3] = zi
            dr = (a00r * a11r - a00i * a11i) - (a01r * a10r - a01i * a10i)
            di = (a00r * a11i + a00i * a11r) - (a01r * a10i + a01i * a10r)
            q = 1.0 - 4.0 * (dr * dr + di * di) / (nf * nf)
            hist_fid[:, t] = np.sqrt(np.maximum(q, 0.0))

    for j, arr in enumerate((x, y, zr, zi)):
        rho[:, j] = arr
    for j, arr in enumerate((a00r, a00i, a01r, a01i, a10r, a10i, a11r, a11i)):
        acc[:, j] = arr
    exps[:] = e
    return -1
