"""Capacity-achieving coding scheme for scalar channels and its smoother.

The scheme transmits a PAM symbol at time 0 and afterwards follows the
time-invariant policy x_i = A (shat_i - shathat_i) with A = Gamma SigmaHat^+.
The decoder runs a Kalman filter for shathat and a fixed-point smoother for
the first noise innovation; the decision compares y_0 minus the smoothed
estimate against the PAM constellation.

The decoder filter is message-blind: the time-0 output (which carries the
symbol) enters only the final decision, so the smoother recursions are exact
and the error covariance contracts by Psi / Psi_Y each step.

The per-trial loop runs in a compiled kernel when available; a pure-Python
kernel with identical operation order is the fallback (set FBCAP_KERNEL to
"python" or "cython" to force one).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import Policy
from .errors import FbcapError, NotScalar, OutOfRange, PowerViolationWarning, SingularPsiY
from .kalman import solve_dare
from .state_space import ChannelModel, _sym

_choice = os.environ.get("FBCAP_KERNEL", "auto")
if _choice == "python":
    from . import _trialloop_py as _kernel

    KERNEL = "python"
else:
    try:
        from . import _trialloop as _kernel

        KERNEL = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from . import _trialloop_py as _kernel

        KERNEL = "python"

WILSON_Z = 1.959963984540054  # 95% normal quantile


def pam_map(msg: int, nR: float) -> float:
    """Normalized PAM symbol for message ``msg`` out of floor(2^nR)."""
    if nR < 0:
        raise OutOfRange("nR must be nonnegative")
    num = int(math.floor(2.0**nR))
    if not 1 <= msg <= max(num, 1):
        raise OutOfRange(f"msg must be in [1, {num}]")
    var_u = (2.0 ** (2.0 * nR) - 1.0) / 12.0
    if var_u <= 0.0:
        return 0.0
    u = msg - (2.0**nR + 1.0) / 2.0
    return u / math.sqrt(var_u)


@dataclass
class SmootherState:
    """Fixed-point smoother state for the first noise innovation."""

    z_hat: np.ndarray  # (p,)
    Z_cov: np.ndarray  # (p, p)
    Fp_power: np.ndarray  # (n_s, n_s), F_p^{i-1} for the upcoming step
    i: int


def smoother_step(
    state: SmootherState,
    y_i: np.ndarray,
    hhs_i: np.ndarray,
    PsiY_i: np.ndarray,
    C: np.ndarray,
    Kp: np.ndarray,
    Fp: np.ndarray,
    H: np.ndarray,
) -> SmootherState:
    """One smoother update on output ``y_i`` (general MIMO).

    C = Lambda Gamma SigmaHat^+ + H is the closed-loop observation matrix,
    Fp = F - Kp C; kappa_i = C Fp^{i-1} Kp is maintained incrementally.
    """
    PsiY_i = _sym(np.atleast_2d(PsiY_i))
    w = np.linalg.eigvalsh(PsiY_i)
    if w[0] <= 0.0 or w[-1] / w[0] > 1e12:
        raise SingularPsiY("output innovation covariance is singular")
    kappa = C @ state.Fp_power @ Kp
    nu = np.atleast_1d(y_i) - H @ np.atleast_1d(hhs_i)
    gain = state.Z_cov @ kappa.T @ np.linalg.inv(PsiY_i)
    z_hat = state.z_hat + gain @ nu
    Z_cov = _sym((np.eye(state.Z_cov.shape[0]) - gain @ kappa) @ state.Z_cov)
    return SmootherState(
        z_hat=z_hat, Z_cov=Z_cov, Fp_power=state.Fp_power @ Fp, i=state.i + 1
    )


@dataclass(frozen=True)
class SchemeConfig:
    """Monte-Carlo configuration for the scalar coding scheme."""

    channel: ChannelModel
    policy: Policy
    n: int
    R: float  # rate in bits per channel use
    seed: int
    trials: int
    warmup: int = 200

    def __post_init__(self):
        if not self.channel.is_scalar():
            raise NotScalar("the coding scheme is defined for scalar channels")
        if np.max(np.abs(self.policy.M)) > 1e-8:
            raise FbcapError("the coding scheme requires a policy with M = 0")
        if self.R <= 0:
            raise OutOfRange("rate R must be positive")
        if self.n < 1:
            raise OutOfRange("horizon n must be >= 1")
        if self.trials < 1:
            raise OutOfRange("trials must be >= 1")
        if self.n * self.R > 62:
            raise OutOfRange(
                "n * R exceeds 62 bits; the message index would overflow int64"
            )


@dataclass(frozen=True)
class SimResult:
    p_e: float
    ci_low: float
    ci_high: float
    avg_power: float
    det_trace: np.ndarray  # det Zhat_{0|i}, i = 0..n
    psi_y_trace: np.ndarray  # decoder Psi_{Y,i}, i = 1..n
    msg: np.ndarray
    msg_hat: np.ndarray
    error_flag: np.ndarray
    n_errors: int
    trials: int
    kernel: str = KERNEL


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(_sym(a))
    w = np.clip(w, 0.0, None)
    return u @ np.diag(np.sqrt(w)) @ u.T


def wilson_interval(k: int, t: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson 95% confidence interval for a binomial proportion."""
    if t <= 0:
        return 0.0, 1.0
    phat = k / t
    denom = 1.0 + z * z / t
    mid = (phat + z * z / (2.0 * t)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / t + z * z / (4.0 * t * t)) / denom
    # the endpoints must bracket phat despite floating-point rounding
    return max(0.0, min(mid - half, phat)), min(1.0, max(mid + half, phat))


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial: order-independent across trials."""
    return np.random.Generator(np.random.Philox(key=seed, counter=trial << 64))


def _scheme_constants(config: SchemeConfig):
    channel = config.channel
    model = channel.noise
    dare = solve_dare(model)
    lam = float(channel.Lambda[0, 0])
    if lam == 0.0:
        raise OutOfRange("Lambda must be nonzero for the coding scheme")
    n, ns = config.n, model.n_s
    F = model.F
    H = model.H[0]  # (ns,)
    Kp = dare.Kp[:, 0]  # (ns,)
    Psi = float(dare.Psi[0, 0])
    A = config.policy.A[0]  # (ns,)
    C = lam * A + H  # closed-loop observation row
    Fp = F - np.outer(Kp, C)

    # Decoder gains: Sigma_0 = 0 (the filters agree after warm-up) and the
    # time-0 output is not filtered, so Sigma_1 = Kp Psi Kp^T.
    KY = np.zeros((n, ns))
    psi_y_trace = np.empty(n)
    sig = np.zeros((ns, ns))
    for i in range(n):
        if i == 0:
            ky = np.zeros(ns)
            psi_y = float(C @ sig @ C + Psi)
        else:
            psi_y = float(C @ sig @ C + Psi)
            ky = (F @ sig @ C + Kp * Psi) / psi_y
            KY[i] = ky
        sig = _sym(
            F @ sig @ F.T + np.outer(Kp, Kp) * Psi - np.outer(ky, ky) * psi_y
        )
    # Psi_{Y,i} for i = 1..n from the same recursion (value before gain i).
    sig = np.outer(Kp, Kp) * Psi
    for i in range(n):
        psi_y_trace[i] = float(C @ sig @ C + Psi)
        ky = (F @ sig @ C + Kp * Psi) / psi_y_trace[i]
        sig = _sym(
            F @ sig @ F.T + np.outer(Kp, Kp) * Psi - np.outer(ky, ky) * psi_y_trace[i]
        )

    # Smoother gains and the deterministic error-variance trace.
    g = np.empty(n)
    det_trace = np.empty(n + 1)
    det_trace[0] = Psi
    Zc = Psi
    fpp = np.eye(ns)
    for i in range(1, n + 1):
        kappa = float(C @ fpp @ Kp)
        psi_t = kappa * Zc * kappa + Psi
        g[i - 1] = Zc * kappa / psi_t
        Zc = Zc * Psi / psi_t
        det_trace[i] = Zc
        fpp = fpp @ Fp
    return dare, lam, F, H, Kp, Psi, A, C, KY, g, det_trace, psi_y_trace


def simulate(config: SchemeConfig) -> SimResult:
    """Monte-Carlo error-probability estimate of the coding scheme."""
    channel = config.channel
    model = channel.noise
    n, ns, q = config.n, model.n_s, model.q
    dare, lam, F, H, Kp, Psi, A, C, KY, g, det_trace, psi_y_trace = _scheme_constants(
        config
    )

    nR = config.n * config.R
    num = max(int(math.floor(2.0**nR)), 1)
    var_u = (2.0 ** (2.0 * nR) - 1.0) / 12.0
    sqrt_var_u = math.sqrt(var_u) if var_u > 0.0 else 0.0
    center = (2.0**nR + 1.0) / 2.0

    steps = config.warmup + n + 1
    joint_half = _psd_sqrt(model.joint_covariance())
    init_cov = model.Sigma1 if config.warmup > 0 else dare.Sigma
    init_half = _psd_sqrt(init_cov)

    # Writable C-contiguous copies: the model arrays are frozen and the
    # compiled kernel takes plain (non-const) memoryviews.
    Fc = np.array(F, dtype=np.float64, order="C")
    Gc = np.array(model.G, dtype=np.float64, order="C")
    Hc = np.array(H, dtype=np.float64, order="C")
    Kpc = np.array(Kp, dtype=np.float64, order="C")
    Ac = np.array(A, dtype=np.float64, order="C")
    KYc = np.array(KY, dtype=np.float64, order="C")
    gc = np.array(g, dtype=np.float64, order="C")

    def run_chunk(start: int, count: int):
        msgs = np.empty(count, dtype=np.int64)
        s0 = np.empty((count, ns))
        w = np.empty((count, steps, q))
        v = np.empty((count, steps))
        for j in range(count):
            rng = _trial_rng(config.seed, start + j)
            msgs[j] = rng.integers(1, num + 1)
            draws = rng.standard_normal(ns + steps * (q + 1))
            s0[j] = init_half @ draws[:ns]
            wv = draws[ns:].reshape(steps, q + 1) @ joint_half.T
            w[j] = wv[:, :q]
            v[j] = wv[:, q]
        msg_hat, power = _kernel.run_batch(
            msgs, s0, w, v, Fc, Gc, Hc, Kpc, Ac, KYc, gc,
            lam, sqrt_var_u, center, num, n, config.warmup,
        )
        return msgs, msg_hat, power

    threads = max(1, int(os.environ.get("FBCAP_THREADS", "1") or 1))
    trials = config.trials
    chunk = max(1, min(trials, -(-trials // max(threads * 4, 1))))
    jobs = [(s, min(chunk, trials - s)) for s in range(0, trials, chunk)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: run_chunk(*ab), jobs))
    else:
        parts = [run_chunk(*ab) for ab in jobs]

    msg = np.concatenate([p[0] for p in parts])
    msg_hat = np.concatenate([p[1] for p in parts])
    power = np.concatenate([p[2] for p in parts])
    error_flag = (msg != msg_hat).astype(np.int64)
    n_errors = int(error_flag.sum())
    p_e = n_errors / trials
    ci_low, ci_high = wilson_interval(n_errors, trials)
    avg_power = float(np.mean(power) / (n + 1))
    if avg_power > 1.05 * channel.P:
        warnings.warn(
            f"empirical average power {avg_power:.4f} exceeds the budget "
            f"{channel.P} by more than 5%",
            PowerViolationWarning,
        )
    return SimResult(
        p_e=p_e,
        ci_low=ci_low,
        ci_high=ci_high,
        avg_power=avg_power,
        det_trace=det_trace,
        psi_y_trace=psi_y_trace,
        msg=msg,
        msg_hat=msg_hat,
        error_flag=error_flag,
        n_errors=n_errors,
        trials=trials,
    )
