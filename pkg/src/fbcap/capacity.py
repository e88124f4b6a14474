"""Feedback-capacity computation and related closed-form baselines.

The central object is a determinant-maximization problem over the triple
(Pi, SigmaHat, Gamma):

    maximize   0.5 logdet Psi_Y - 0.5 logdet Psi
    s.t.       [[Pi, Gamma], [Gamma^T, SigmaHat]] >= 0,
               trace(Pi) <= P,
               Riccati LMI >= 0,

with Psi_Y = Lambda Pi Lambda^T + H SigmaHat H^T + Lambda Gamma H^T
+ H Gamma^T Lambda^T + Psi.  The solver is the barrier engine from
`maxdet`; constants (K_p, Psi) come from the stabilizing Riccati
solution of the noise model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    Infeasible,
    NotPSDAfterClip,
    NotScalar,
    OutOfRange,
    UnstableModel,
)
from .kalman import RiccatiSolution, riccati_step, solve_dare
from .maxdet import AffineBlock, MaxDetProblem, affine_block_from_fn
from .state_space import ChannelModel, StateSpaceNoise, _sym, noise_psd

PINV_RTOL = 1e-9
M_CLIP = 1e-8


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the barrier solver; defaults match the package tolerances."""

    gap_tol: float = 1e-10
    t_max: float = 1e12
    mu: float = 10.0
    constrain_gamma_zero: bool = False
    perturbation: float | None = None  # None: only if strict feasibility fails


@dataclass(frozen=True)
class CapacitySolution:
    Pi: np.ndarray
    SigmaHat: np.ndarray
    Gamma: np.ndarray
    PsiY: np.ndarray
    KY: np.ndarray
    M: np.ndarray
    capacity_nats: float
    kkt_residual: float
    lmi_margins: tuple[float, float]
    iterations: int
    Psi: np.ndarray = None
    Kp: np.ndarray = None
    schur_residual: float = math.nan
    orthogonality_residual: float = math.nan
    objective_shift: float = math.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)


@dataclass(frozen=True)
class Policy:
    """Time-invariant input law x_i = A (shat_i - shathat_i) + m_i."""

    A: np.ndarray
    M: np.ndarray


@dataclass(frozen=True)
class ConvergenceReport:
    SigmaHat_final: np.ndarray
    PsiY_final: np.ndarray
    sigma_gap: float
    psi_gap: float
    detectable: bool


class _SymParam:
    """Map a slice of the parameter vector to a symmetric matrix."""

    def __init__(self, n: int):
        self.n = n
        self.count = n * (n + 1) // 2
        self._idx = [(a, b) for a in range(n) for b in range(a, n)]

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for k, (a, b) in enumerate(self._idx):
            m[a, b] = x[k]
            m[b, a] = x[k]
        return m

    def from_matrix(self, m: np.ndarray) -> np.ndarray:
        return np.array([m[a, b] for a, b in self._idx])


def pinv_psd(a: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix."""
    w, u = np.linalg.eigh(_sym(a))
    cutoff = rtol * max(np.max(np.abs(w)), 0.0)
    inv = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    return u @ np.diag(inv) @ u.T


def _range_projector(a: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    w, u = np.linalg.eigh(_sym(a))
    cutoff = rtol * max(np.max(np.abs(w)), 0.0)
    mask = (w > cutoff).astype(float)
    return u @ np.diag(mask) @ u.T


def _psi_y(channel: ChannelModel, Psi, Pi, Sh, Ga) -> np.ndarray:
    Lam, H = channel.Lambda, channel.noise.H
    return _sym(Lam @ Pi @ Lam.T + H @ Sh @ H.T + Lam @ Ga @ H.T + H @ Ga.T @ Lam.T + Psi)


def _ky(channel: ChannelModel, dare: RiccatiSolution, Sh, Ga, PsiY) -> np.ndarray:
    F, H, Lam = channel.noise.F, channel.noise.H, channel.Lambda
    num = F @ (Ga.T @ Lam.T + Sh @ H.T) + dare.Kp @ dare.Psi
    return num @ np.linalg.inv(PsiY)


def _riccati_lmi(channel: ChannelModel, dare: RiccatiSolution, Pi, Sh, Ga) -> np.ndarray:
    F, H, Lam = channel.noise.F, channel.noise.H, channel.Lambda
    Kp, Psi = dare.Kp, dare.Psi
    top_left = F @ Sh @ F.T + Kp @ Psi @ Kp.T - Sh
    top_right = F @ (Ga.T @ Lam.T + Sh @ H.T) + Kp @ Psi
    psi_y = _psi_y(channel, Psi, Pi, Sh, Ga)
    return np.block([[top_left, top_right], [top_right.T, psi_y]])


def _solve_maxdet_capacity(channel: ChannelModel, dare: RiccatiSolution, options: SolverOptions):
    """Assemble and solve the single-letter program; returns raw (Pi, Sh, Ga, result)."""
    m, n = channel.m, channel.noise.n_s
    P = channel.P
    pi_par = _SymParam(m)
    sh_par = _SymParam(n)
    gam_zero = options.constrain_gamma_zero
    n_gam = 0 if gam_zero else m * n
    dim = pi_par.count + sh_par.count + n_gam

    def unpack(x):
        o = 0
        Pi = pi_par.to_matrix(x[o : o + pi_par.count])
        o += pi_par.count
        Sh = sh_par.to_matrix(x[o : o + sh_par.count])
        o += sh_par.count
        Ga = np.zeros((m, n)) if gam_zero else x[o:].reshape(m, n)
        return Pi, Sh, Ga

    def make_problem(perturbation):
        blocks = [
            affine_block_from_fn(
                lambda x: np.block(
                    [[unpack(x)[0], unpack(x)[2]], [unpack(x)[2].T, unpack(x)[1]]]
                ),
                dim,
            ),
            affine_block_from_fn(
                lambda x: _riccati_lmi(channel, dare, *unpack(x)), dim
            ),
            affine_block_from_fn(
                lambda x: np.array([[P - np.trace(unpack(x)[0])]]), dim
            ),
        ]
        obj = affine_block_from_fn(
            lambda x: _psi_y(channel, dare.Psi, *unpack(x)), dim
        )
        return MaxDetProblem(
            dim=dim,
            objective_blocks=[obj],
            constraint_blocks=blocks,
            perturbation=perturbation,
        )

    def start(delta):
        x = np.zeros(dim)
        x[: pi_par.count] = pi_par.from_matrix(P / (2.0 * m) * np.eye(m))
        x[pi_par.count : pi_par.count + sh_par.count] = sh_par.from_matrix(
            delta * np.eye(n)
        )
        return x

    scale = max(1.0, float(np.trace(dare.Sigma)), P)
    deltas = [scale * 10.0**-k for k in range(1, 13)]
    perturbations = [options.perturbation] if options.perturbation is not None else [
        0.0,
        1e-9,
        1e-7,
    ]
    for eps in perturbations:
        prob = make_problem(eps)
        for delta in deltas + ([0.0] if eps > 0 else []):
            x0 = start(delta)
            if prob.is_strictly_feasible(x0):
                result = prob.solve(
                    x0, gap_tol=options.gap_tol, mu=options.mu, t_max=options.t_max
                )
                return (*unpack(result.x), result)
    raise Infeasible("no strictly feasible starting point found")


def _finalize(channel: ChannelModel, dare: RiccatiSolution, Pi, Sh, Ga, result) -> CapacitySolution:
    """Orthogonality projection, Riccati-equality refinement, derived fields."""
    Psi = dare.Psi
    sign, logdet_psi = np.linalg.slogdet(Psi)
    obj_before = 0.5 * (np.linalg.slogdet(_psi_y(channel, Psi, Pi, Sh, Ga))[1] - logdet_psi)

    Pi = _sym(Pi)
    Sh = _sym(Sh)
    Ga = Ga @ _range_projector(Sh)

    # Riccati-equality refinement: iterate the output Riccati map to push the
    # Schur slack of the Riccati LMI to zero without changing the objective.
    F, Kp = channel.noise.F, dare.Kp
    for _ in range(200_000):
        PsiY = _psi_y(channel, Psi, Pi, Sh, Ga)
        KY = _ky(channel, dare, Sh, Ga, PsiY)
        Sh_next = _sym(F @ Sh @ F.T + Kp @ Psi @ Kp.T - KY @ PsiY @ KY.T)
        if np.max(np.abs(Sh_next - Sh)) < 1e-14 * max(1.0, np.max(np.abs(Sh))):
            Sh = Sh_next
            break
        Sh = Sh_next
    Ga = Ga @ _range_projector(Sh)
    PsiY = _psi_y(channel, Psi, Pi, Sh, Ga)
    KY = _ky(channel, dare, Sh, Ga, PsiY)
    schur = F @ Sh @ F.T + Kp @ Psi @ Kp.T - KY @ PsiY @ KY.T - Sh
    capacity = 0.5 * (np.linalg.slogdet(PsiY)[1] - logdet_psi)

    Sh_pinv = pinv_psd(Sh)
    M = _sym(Pi - Ga @ Sh_pinv @ Ga.T)
    w = np.linalg.eigvalsh(M)
    if w[0] < -M_CLIP:
        raise NotPSDAfterClip(
            f"extracted i.i.d. covariance has eigenvalue {w[0]:.3e} < -{M_CLIP}"
        )
    M = _clip_small_negatives(M)

    lmi1 = np.block([[Pi, Ga], [Ga.T, Sh]])
    lmi2 = _riccati_lmi(channel, dare, Pi, Sh, Ga)
    margins = (
        float(np.min(np.linalg.eigvalsh(_sym(lmi1)))),
        float(np.min(np.linalg.eigvalsh(_sym(lmi2)))),
    )
    ortho = float(np.max(np.abs(Ga @ (np.eye(Sh.shape[0]) - Sh @ Sh_pinv))))
    return CapacitySolution(
        Pi=Pi,
        SigmaHat=Sh,
        Gamma=Ga,
        PsiY=PsiY,
        KY=KY,
        M=M,
        capacity_nats=float(capacity),
        kkt_residual=result.gap,
        lmi_margins=margins,
        iterations=result.iterations,
        Psi=Psi,
        Kp=Kp,
        schur_residual=float(np.max(np.abs(schur))),
        orthogonality_residual=ortho,
        objective_shift=float(capacity - obj_before),
        diagnostics={
            "t_final": result.t_final,
            "perturbation": result.perturbation,
            "power_trace": float(np.trace(Pi)),
        },
    )


def solve_capacity(
    channel: ChannelModel, options: SolverOptions = SolverOptions()
) -> CapacitySolution:
    """Feedback capacity of the MIMO channel as a max-det program."""
    dare = solve_dare(channel.noise)
    Pi, Sh, Ga, result = _solve_maxdet_capacity(channel, dare, options)
    return _finalize(channel, dare, Pi, Sh, Ga, result)


def solve_capacity_scalar(
    channel: ChannelModel, options: SolverOptions = SolverOptions()
) -> CapacitySolution:
    """Scalar-channel capacity via the reduced parameterization.

    A non-unit scalar Lambda is folded into the power budget before solving.
    """
    if not channel.is_scalar():
        raise NotScalar("solve_capacity_scalar requires p = m = 1")
    lam = float(channel.Lambda[0, 0])
    if lam != 1.0:
        channel = ChannelModel(
            Lambda=[[1.0]], P=channel.P * lam * lam, noise=channel.noise
        )
    dare = solve_dare(channel.noise)
    n = channel.noise.n_s
    P = channel.P
    sh_par = _SymParam(n)
    gam_zero = options.constrain_gamma_zero
    n_gam = 0 if gam_zero else n
    dim = 1 + sh_par.count + n_gam

    def unpack(x):
        Pi = np.array([[x[0]]])
        Sh = sh_par.to_matrix(x[1 : 1 + sh_par.count])
        Ga = np.zeros((1, n)) if gam_zero else x[1 + sh_par.count :].reshape(1, n)
        return Pi, Sh, Ga

    def make_problem(perturbation):
        blocks = [
            affine_block_from_fn(
                lambda x: np.block(
                    [[unpack(x)[0], unpack(x)[2]], [unpack(x)[2].T, unpack(x)[1]]]
                ),
                dim,
            ),
            affine_block_from_fn(lambda x: _riccati_lmi(channel, dare, *unpack(x)), dim),
            affine_block_from_fn(lambda x: np.array([[P - x[0]]]), dim),
        ]
        obj = affine_block_from_fn(lambda x: _psi_y(channel, dare.Psi, *unpack(x)), dim)
        return MaxDetProblem(
            dim=dim,
            objective_blocks=[obj],
            constraint_blocks=blocks,
            perturbation=perturbation,
        )

    def start(delta):
        x = np.zeros(dim)
        x[0] = P / 2.0
        x[1 : 1 + sh_par.count] = sh_par.from_matrix(delta * np.eye(n))
        return x

    scale = max(1.0, float(np.trace(dare.Sigma)), P)
    deltas = [scale * 10.0**-k for k in range(1, 13)]
    perturbations = [options.perturbation] if options.perturbation is not None else [
        0.0,
        1e-9,
        1e-7,
    ]
    for eps in perturbations:
        prob = make_problem(eps)
        for delta in deltas + ([0.0] if eps > 0 else []):
            x0 = start(delta)
            if prob.is_strictly_feasible(x0):
                result = prob.solve(
                    x0, gap_tol=options.gap_tol, mu=options.mu, t_max=options.t_max
                )
                Pi, Sh, Ga = unpack(result.x)
                return _finalize(channel, dare, Pi, Sh, Ga, result)
    raise Infeasible("no strictly feasible starting point found")


def _clip_small_negatives(a: np.ndarray, floor: float = M_CLIP) -> np.ndarray:
    w, u = np.linalg.eigh(_sym(a))
    w = np.where((w < 0.0) & (w >= -floor), 0.0, w)
    return _sym(u @ np.diag(w) @ u.T)


def extract_policy(sol: CapacitySolution) -> Policy:
    """Feedback coefficient A = Gamma SigmaHat^+ and i.i.d. covariance M."""
    A = sol.Gamma @ pinv_psd(sol.SigmaHat)
    M = _sym(sol.Pi - A @ sol.SigmaHat @ A.T)
    w = np.linalg.eigvalsh(M)
    if w[0] < -M_CLIP:
        raise NotPSDAfterClip(
            f"policy covariance eigenvalue {w[0]:.3e} below -{M_CLIP}"
        )
    return Policy(A=A, M=_clip_small_negatives(M))


def ma_capacity_fixed_point(alpha: float, P: float) -> float:
    """MA(1) feedback capacity from the SNR fixed-point equation (nats)."""
    alpha = abs(float(alpha))
    P = float(P)
    if P <= 0:
        raise OutOfRange("P must be positive")
    snr = P
    for _ in range(10_000):
        ratio = math.sqrt(snr / (1.0 + snr))
        if alpha <= 1.0:
            nxt = (math.sqrt(P) + alpha * ratio) ** 2
        else:
            nxt = (math.sqrt(P) + ratio) ** 2 / alpha**2
        if abs(nxt - snr) < 1e-12 * max(1.0, snr):
            snr = nxt
            break
        snr = nxt
    return 0.5 * math.log1p(snr)


def kim_ma_capacity(alpha: float, P: float) -> float:
    """MA(1) capacity as -log x0 with x0 the root of P x^2 = (1-|a|x)^2 (1-x^2)."""
    a = abs(float(alpha))
    if a > 1.0:
        raise OutOfRange("the root characterization requires |alpha| <= 1")
    P = float(P)

    def poly(x):
        return P * x * x - (1.0 - a * x) ** 2 * (1.0 - x * x)

    x0 = brentq(poly, 1e-16, 1.0, xtol=1e-16, rtol=8.9e-16)
    return -math.log(x0)


def ar_iid_rate(beta: float, P: float = 1.0) -> float:
    """Maximal rate with i.i.d. inputs for AR(1) noise at unit power (nats)."""
    if P != 1.0:
        raise OutOfRange("closed form is for P = 1; use the Gamma=0 solver otherwise")
    beta = float(beta)
    if beta == 0.0:
        return 0.5 * math.log(2.0)
    b2 = beta * beta
    return 0.5 * math.log1p(0.5 * b2 * (1.0 + math.sqrt(1.0 + 4.0 / (b2 * b2))))


def ar_stationary_capacity(beta: float, P: float = 1.0) -> float:
    """AR(1) rate of the best time-invariant policy with no i.i.d. component.

    Restricts the scalar program to M = 0 (all power on the feedback term,
    Pi = P) and enforces the Riccati equality, leaving a one-dimensional
    fixed-point problem in SigmaHat.  For |beta| < 1 this equals the feedback
    capacity; beyond the stationary regime it is a lower bound.
    """
    from .state_space import build_ar1

    model = build_ar1(beta)
    dare = solve_dare(model)
    F = float(model.F[0, 0])
    H = float(model.H[0, 0])
    Kp = float(dare.Kp[0, 0])
    Psi = float(dare.Psi[0, 0])
    best = 0.5 * math.log1p(P / Psi)  # Gamma = 0 fallback (never below AWGN-style rate)

    def residual(sigma, s):
        gamma = s * math.sqrt(max(P * sigma, 0.0))
        psi_y = P + H * H * sigma + 2.0 * H * gamma + Psi
        ky = (F * (gamma + sigma * H) + Kp * Psi) / psi_y
        return F * F * sigma + Kp * Kp * Psi - ky * ky * psi_y - sigma

    for s in (1.0, -1.0):
        grid = np.concatenate([[0.0], np.geomspace(1e-9, 1e6, 400)])
        vals = [residual(g, s) for g in grid]
        for k in range(len(grid) - 1):
            if vals[k] == 0.0 or vals[k] * vals[k + 1] < 0.0:
                lo, hi = grid[k], grid[k + 1]
                sigma = brentq(lambda g: residual(g, s), lo, hi, xtol=1e-14)
                gamma = s * math.sqrt(max(P * sigma, 0.0))
                psi_y = P + H * H * sigma + 2.0 * H * gamma + Psi
                if psi_y > Psi:
                    best = max(best, 0.5 * math.log(psi_y / Psi))
    return best


def waterfilling_capacity(channel: ChannelModel, grid: int = 4096) -> float:
    """Feedforward (no-feedback) capacity of a stationary scalar channel."""
    if not channel.is_scalar():
        raise NotScalar("water-filling baseline is for scalar channels")
    model = channel.noise
    if not model.is_stationary():
        raise UnstableModel("water-filling requires a stationary noise model")
    lam = float(channel.Lambda[0, 0])
    omegas = -math.pi + (np.arange(grid) + 0.5) * (2.0 * math.pi / grid)
    N = np.array([noise_psd(model, w)[0, 0] for w in omegas]) / (lam * lam)
    P = channel.P

    def allocated(mu):
        return float(np.mean(np.maximum(0.0, mu - N)))

    lo, hi = float(np.min(N)), float(np.min(N)) + P + float(np.max(N))
    while allocated(hi) < P:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if allocated(mid) < P:
            lo = mid
        else:
            hi = mid
    p = np.maximum(0.0, 0.5 * (lo + hi) - N)
    return 0.5 * float(np.mean(np.log1p(p / N)))


def scop_finite_n(
    channel: ChannelModel, n: int, options: SolverOptions = SolverOptions()
) -> float:
    """Finite-horizon sequential program value in nats per step.

    Per-time variables (Gamma_t, Pi_t, SigmaHat_{t+1}) with SigmaHat_1 = 0,
    time-varying Riccati constants from Sigma1, and the terminal constraint
    SigmaHat_{n+1} >= 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    model = channel.noise
    m, ns, p = channel.m, model.n_s, model.p
    P = channel.P
    Lam, F, H = channel.Lambda, model.F, model.H

    # Time-varying filter constants from the model's initial covariance.
    Kps, Psis = [], []
    sigma = model.Sigma1
    for _ in range(n):
        sigma, kp, psi = riccati_step(model, sigma)
        Kps.append(kp)
        Psis.append(psi)

    pi_par = _SymParam(m)
    sh_par = _SymParam(ns)
    per_t = pi_par.count + m * ns + sh_par.count  # Pi_t, Gamma_t, SigmaHat_{t+1}
    dim = n * per_t

    def unpack_t(x, t):
        o = t * per_t
        Pi = pi_par.to_matrix(x[o : o + pi_par.count])
        o += pi_par.count
        Ga = x[o : o + m * ns].reshape(m, ns)
        o += m * ns
        Sh_next = sh_par.to_matrix(x[o : o + sh_par.count])
        return Pi, Ga, Sh_next

    def sh_at(x, t):
        if t == 0:
            return np.zeros((ns, ns))
        return unpack_t(x, t - 1)[2]

    def psi_y_t(x, t):
        Pi, Ga, _ = unpack_t(x, t)
        Sh = sh_at(x, t)
        return _sym(
            Lam @ Pi @ Lam.T
            + H @ Sh @ H.T
            + Lam @ Ga @ H.T
            + H @ Ga.T @ Lam.T
            + Psis[t]
        )

    def lmi1_t(x, t):
        Pi, Ga, _ = unpack_t(x, t)
        Sh = sh_at(x, t)
        return np.block([[Pi, Ga], [Ga.T, Sh]])

    def riccati_t(x, t):
        Pi, Ga, Sh_next = unpack_t(x, t)
        Sh = sh_at(x, t)
        top_left = F @ Sh @ F.T + Kps[t] @ Psis[t] @ Kps[t].T - Sh_next
        top_right = F @ Ga.T @ Lam.T + F @ Sh @ H.T + Kps[t] @ Psis[t]
        return np.block([[top_left, top_right], [top_right.T, psi_y_t(x, t)]])

    def power_block(x):
        total = sum(np.trace(unpack_t(x, t)[0]) for t in range(n))
        return np.array([[P - total / n]])

    obj_blocks = [
        affine_block_from_fn(lambda x, t=t: psi_y_t(x, t), dim) for t in range(n)
    ]
    cons = []
    for t in range(n):
        cons.append(affine_block_from_fn(lambda x, t=t: lmi1_t(x, t), dim))
        cons.append(affine_block_from_fn(lambda x, t=t: riccati_t(x, t), dim))
    cons.append(affine_block_from_fn(power_block, dim))
    cons.append(affine_block_from_fn(lambda x: unpack_t(x, n - 1)[2], dim))

    # SigmaHat_1 = 0 puts the first block LMI on the boundary, so the
    # program is always solved with a small perturbation.
    eps = options.perturbation if options.perturbation is not None else 1e-9
    prob = MaxDetProblem(
        dim=dim,
        objective_blocks=obj_blocks,
        constraint_blocks=cons,
        perturbation=max(eps, 1e-10),
    )

    def start(delta):
        x = np.zeros(dim)
        for t in range(n):
            o = t * per_t
            x[o : o + pi_par.count] = pi_par.from_matrix(P / (2.0 * m) * np.eye(m))
            o += pi_par.count + m * ns
            x[o : o + sh_par.count] = sh_par.from_matrix(delta * np.eye(ns))
        return x

    for delta in [10.0**-k for k in range(2, 13)] + [0.0]:
        x0 = start(delta)
        if prob.is_strictly_feasible(x0):
            result = prob.solve(
                x0, gap_tol=options.gap_tol * n, mu=options.mu, t_max=options.t_max
            )
            logdet_psis = sum(np.linalg.slogdet(ps)[1] for ps in Psis)
            return float((result.objective - 0.5 * logdet_psis) / n)
    raise Infeasible("no strictly feasible starting point for the finite-n program")


def closed_loop_check(
    channel: ChannelModel,
    policy: Policy,
    horizon: int,
    sol: CapacitySolution | None = None,
) -> ConvergenceReport:
    """Run the output-covariance recursion under a fixed policy.

    Reports the distance of the final iterate from the optimizer's
    (SigmaHat*, PsiY*) when a solution is supplied, and detectability of
    (F, Lambda A + H).
    """
    model = channel.noise
    F, H, Lam = model.F, model.H, channel.Lambda
    C = Lam @ policy.A + H
    LamMLam = Lam @ policy.M @ Lam.T
    sh = np.zeros((model.n_s, model.n_s))
    sigma = model.Sigma1
    psi_y = None
    for _ in range(horizon):
        sigma, kp, psi = riccati_step(model, sigma)
        psi_y = _sym(C @ sh @ C.T + LamMLam + psi)
        ky = (F @ sh @ C.T + kp @ psi) @ np.linalg.inv(psi_y)
        sh = _sym(F @ sh @ F.T + kp @ psi @ kp.T - ky @ psi_y @ ky.T)

    from .state_space import _detectable

    det = _detectable(F, C)
    if sol is not None:
        sigma_gap = float(np.max(np.abs(sh - sol.SigmaHat)))
        psi_gap = float(np.max(np.abs(psi_y - sol.PsiY)))
    else:
        sigma_gap = math.nan
        psi_gap = math.nan
    return ConvergenceReport(
        SigmaHat_final=sh,
        PsiY_final=psi_y,
        sigma_gap=sigma_gap,
        psi_gap=psi_gap,
        detectable=det,
    )
