# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo trial loop.

Operation-for-operation identical to `_trialloop_py.run_batch`; every inner
product runs in the same ascending-index order so the two kernels produce
bit-identical floating-point results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def run_batch(cnp.int64_t[:] msgs,
              double[:, :] s0,
              double[:, :, :] w,
              double[:, :] v,
              double[:, :] F,
              double[:, :] G,
              double[:] H,
              double[:] Kp,
              double[:] A,
              double[:, :] KY,
              double[:] g,
              double lam,
              double sqrt_var_u,
              double center,
              long long num,
              int n,
              int warmup):
    """Simulate a batch of trials; returns (msg_hat, power_sum) arrays."""
    cdef Py_ssize_t T = msgs.shape[0]
    cdef Py_ssize_t ns = F.shape[0]
    cdef Py_ssize_t q = G.shape[1]
    msg_hat_arr = np.empty(T, dtype=np.int64)
    power_arr = np.empty(T, dtype=np.float64)
    cdef cnp.int64_t[:] msg_hat = msg_hat_arr
    cdef double[:] power = power_arr

    s_arr = np.zeros(ns, dtype=np.float64)
    shat_arr = np.zeros(ns, dtype=np.float64)
    shh_arr = np.zeros(ns, dtype=np.float64)
    tmp_arr = np.zeros(ns, dtype=np.float64)
    cdef double[:] s = s_arr
    cdef double[:] shat = shat_arr
    cdef double[:] shh = shh_arr
    cdef double[:] tmp = tmp_arr

    cdef Py_ssize_t t, step, i, j, k, idx
    cdef double z, innov, acc, bias, z0, u, x, y0, pw, yprev, xprev
    cdef double ehat, nu_d, nu, y, xi
    cdef long long cand

    for t in range(T):
        for j in range(ns):
            s[j] = s0[t, j]
            shat[j] = 0.0

        for step in range(warmup):
            z = v[t, step]
            for j in range(ns):
                z += H[j] * s[j]
            innov = z
            for j in range(ns):
                innov -= H[j] * shat[j]
            for j in range(ns):
                acc = 0.0
                for k in range(ns):
                    acc += F[j, k] * shat[k]
                tmp[j] = acc + Kp[j] * innov
            for j in range(ns):
                shat[j] = tmp[j]
            for j in range(ns):
                acc = 0.0
                for k in range(ns):
                    acc += F[j, k] * s[k]
                for k in range(q):
                    acc += G[j, k] * w[t, step, k]
                tmp[j] = acc
            for j in range(ns):
                s[j] = tmp[j]

        bias = 0.0
        for j in range(ns):
            bias += H[j] * shat[j]
        for j in range(ns):
            shh[j] = shat[j]

        z0 = v[t, warmup]
        for j in range(ns):
            z0 += H[j] * s[j]
        if sqrt_var_u > 0.0:
            u = (msgs[t] - center) / sqrt_var_u
        else:
            u = 0.0
        x = u
        y0 = lam * x + z0
        pw = x * x
        for j in range(ns):
            acc = 0.0
            for k in range(ns):
                acc += F[j, k] * s[k]
            for k in range(q):
                acc += G[j, k] * w[t, warmup, k]
            tmp[j] = acc
        for j in range(ns):
            s[j] = tmp[j]

        yprev = y0
        xprev = x
        ehat = 0.0
        for i in range(1, n + 1):
            idx = warmup + i
            z = v[t, idx]
            for j in range(ns):
                z += H[j] * s[j]
            innov = yprev - lam * xprev
            for j in range(ns):
                innov -= H[j] * shat[j]
            for j in range(ns):
                acc = 0.0
                for k in range(ns):
                    acc += F[j, k] * shat[k]
                tmp[j] = acc + Kp[j] * innov
            for j in range(ns):
                shat[j] = tmp[j]
            nu_d = yprev
            for j in range(ns):
                nu_d -= H[j] * shh[j]
            for j in range(ns):
                acc = 0.0
                for k in range(ns):
                    acc += F[j, k] * shh[k]
                tmp[j] = acc + KY[i - 1, j] * nu_d
            for j in range(ns):
                shh[j] = tmp[j]
            x = 0.0
            for j in range(ns):
                x += A[j] * (shat[j] - shh[j])
            y = lam * x + z
            pw += x * x
            nu = y
            for j in range(ns):
                nu -= H[j] * shh[j]
            ehat += g[i - 1] * nu
            for j in range(ns):
                acc = 0.0
                for k in range(ns):
                    acc += F[j, k] * s[k]
                for k in range(q):
                    acc += G[j, k] * w[t, idx, k]
                tmp[j] = acc
            for j in range(ns):
                s[j] = tmp[j]
            yprev = y
            xprev = x

        if sqrt_var_u > 0.0:
            xi = (y0 - bias - ehat) / lam
            cand = <long long>floor(xi * sqrt_var_u + center + 0.5)
            if cand < 1:
                cand = 1
            elif cand > num:
                cand = num
        else:
            cand = 1
        msg_hat[t] = cand
        power[t] = pw
    return msg_hat_arr, power_arr
