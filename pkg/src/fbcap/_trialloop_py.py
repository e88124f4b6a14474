"""Pure-Python Monte-Carlo trial loop (reference kernel).

Mirrors the compiled kernel in `_trialloop.pyx` operation for operation:
every inner product and state update is an explicit ascending-index loop,
so both kernels produce bit-identical floating-point results.
"""

import numpy as np


def run_batch(msgs, s0, w, v, F, G, H, Kp, A, KY, g, lam, sqrt_var_u, center,
              num, n, warmup):
    """Simulate a batch of trials; returns (msg_hat, power_sum) arrays.

    msgs: (T,) int64 messages in [1, num]
    s0:   (T, ns) initial noise states
    w:    (T, steps, q) process noise, steps = warmup + n + 1
    v:    (T, steps) measurement noise
    KY:   (n, ns) decoder gains (row i applied to output y_i)
    g:    (n,) smoother gains for outputs y_1..y_n
    """
    T = msgs.shape[0]
    ns = F.shape[0]
    q = G.shape[1]
    msg_hat = np.empty(T, dtype=np.int64)
    power = np.empty(T, dtype=np.float64)

    s = [0.0] * ns
    shat = [0.0] * ns
    shh = [0.0] * ns
    tmp = [0.0] * ns

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
            cand = int(np.floor(xi * sqrt_var_u + center + 0.5))
            if cand < 1:
                cand = 1
            elif cand > num:
                cand = num
        else:
            cand = 1
        msg_hat[t] = cand
        power[t] = pw
    return msg_hat, power
