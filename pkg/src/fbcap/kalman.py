"""Kalman filter recursions, the Riccati equation and the noise entropy rate.

All recursions are written for the prediction form of the filter:

    shat_{i+1} = F shat_i + K_{p,i} (z_i - H shat_i)
    K_{p,i}    = (F Sigma_i H^T + G L) Psi_i^{-1}
    Psi_i      = H Sigma_i H^T + V
    Sigma_{i+1}= F Sigma_i F^T + G W G^T - K_{p,i} Psi_i K_{p,i}^T
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoConvergence, SingularInnovation
from .state_space import StateSpaceNoise, _sym

DARE_TOL = 1e-12
MAX_ITER = 100_000
COND_LIMIT = 1e12
PSD_CLIP = 1e-9


@dataclass(frozen=True)
class RiccatiSolution:
    """Fixed point of the Riccati map with its derived constants."""

    Sigma: np.ndarray
    Kp: np.ndarray
    Psi: np.ndarray
    closed_loop_radius: float
    iterations: int
    residual: float
    maximal_only: bool = False


@dataclass(frozen=True)
class FilterState:
    """Predicted state estimate and (optionally time-varying) covariance."""

    s_hat: np.ndarray
    Sigma_i: np.ndarray | None = None


def _solve_psym(Psi: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve X Psi = rhs for X with a symmetric factorization of Psi."""
    Psi = _sym(Psi)
    w = np.linalg.eigvalsh(Psi)
    if w[0] <= 0.0 or w[-1] / w[0] > COND_LIMIT:
        raise SingularInnovation(
            "innovation covariance is singular (condition number above 1e12); "
            "capacity is infinite for this model"
        )
    c = np.linalg.cholesky(Psi)
    y = np.linalg.solve(c, rhs.T)
    return np.linalg.solve(c.T, y).T


def riccati_step(model: StateSpaceNoise, Sigma_i: np.ndarray):
    """One Riccati recursion step; returns (Sigma_next, Kp_i, Psi_i)."""
    Sigma_i = np.atleast_2d(np.asarray(Sigma_i, dtype=float))
    Psi_i = _sym(model.H @ Sigma_i @ model.H.T + model.V)
    Kp_i = _solve_psym(Psi_i, model.F @ Sigma_i @ model.H.T + model.G @ model.L)
    Sigma_next = (
        model.F @ Sigma_i @ model.F.T
        + model.G @ model.W @ model.G.T
        - Kp_i @ Psi_i @ Kp_i.T
    )
    Sigma_next = _clip_psd(_sym(Sigma_next))
    return Sigma_next, Kp_i, Psi_i


def _clip_psd(a: np.ndarray, floor: float = PSD_CLIP) -> np.ndarray:
    w, u = np.linalg.eigh(a)
    if w[0] >= 0.0:
        return a
    w = np.where((w < 0.0) & (w >= -floor), 0.0, w)
    return _sym(u @ np.diag(w) @ u.T)


def kalman_filter_step(
    model: StateSpaceNoise,
    state: FilterState,
    z_i: np.ndarray,
    gain: np.ndarray | None = None,
) -> FilterState:
    """Advance the predicted estimate one step.

    With ``gain`` given (time-invariant mode) the fixed K_p is used and the
    covariance is left untouched; otherwise the gain comes from the current
    covariance, which is advanced by `riccati_step`.
    """
    z_i = np.atleast_1d(np.asarray(z_i, dtype=float))
    innovation = z_i - model.H @ state.s_hat
    if gain is not None:
        s_next = model.F @ state.s_hat + np.atleast_2d(gain) @ innovation
        return replace(state, s_hat=s_next)
    if state.Sigma_i is None:
        raise ValueError("time-varying mode needs a covariance in the state")
    Sigma_next, Kp_i, _ = riccati_step(model, state.Sigma_i)
    s_next = model.F @ state.s_hat + Kp_i @ innovation
    return FilterState(s_hat=s_next, Sigma_i=Sigma_next)


def _riccati_residual(model: StateSpaceNoise, sol_sigma, Kp, Psi) -> float:
    res = (
        model.F @ sol_sigma @ model.F.T
        - sol_sigma
        + model.G @ model.W @ model.G.T
        - Kp @ Psi @ Kp.T
    )
    return float(np.max(np.abs(res)))


def _sda(A: np.ndarray, B: np.ndarray, R: np.ndarray, Q: np.ndarray, tol: float):
    """Structured doubling iteration for X = A^T X A + Q - A^T X B (R + B^T X B)^-1 B^T X A.

    Converges quadratically to the stabilizing solution and linearly to the
    maximal solution in critical (unit-circle) cases.
    """
    n = A.shape[0]
    Ak = A.copy()
    Gk = B @ np.linalg.solve(R, B.T)
    Hk = Q.copy()
    for it in range(200):
        M = np.linalg.solve(np.eye(n) + Gk @ Hk, np.column_stack([Ak, Gk]))
        AG = M[:, :n]
        GG = M[:, n:]
        Hn = Hk + Ak.T @ Hk @ AG
        Gn = Gk + Ak @ GG @ Ak.T
        An = Ak @ AG
        delta = np.max(np.abs(Hn - Hk))
        Ak, Gk, Hk = An, _sym(Gn), _sym(Hn)
        if delta < tol:
            return Hk, it + 1
    return Hk, 200


def solve_dare(
    model: StateSpaceNoise,
    tol: float = DARE_TOL,
    max_iter: int = MAX_ITER,
) -> RiccatiSolution:
    """Stabilizing (or maximal) solution of the Riccati equation.

    Plain fixed-point iteration from G W G^T; a structured doubling pass
    takes over when the plain iteration converges too slowly (closed loop
    near the unit circle).
    """
    sigma = _sym(model.G @ model.W @ model.G.T)
    iterations = 0
    plain_budget = min(max_iter, 20_000)
    converged = False
    while iterations < plain_budget:
        sigma_next, _, _ = riccati_step(model, sigma)
        iterations += 1
        if np.max(np.abs(sigma_next - sigma)) < tol:
            sigma = sigma_next
            converged = True
            break
        sigma = sigma_next

    if not converged:
        # Equivalent standard-form DARE after decorrelating (w, v):
        #   A = (F - G L V^-1 H)^T, B = H^T, R = V, Q = G (W - L V^-1 L^T) G^T
        Vinv = np.linalg.inv(model.V)
        A = (model.F - model.G @ model.L @ Vinv @ model.H).T
        B = model.H.T
        Q = _sym(model.G @ (model.W - model.L @ Vinv @ model.L.T) @ model.G.T)
        sigma, extra = _sda(A, B, model.V, Q, tol)
        sigma = _clip_psd(_sym(sigma), floor=np.inf)
        iterations += extra

    Psi = _sym(model.H @ sigma @ model.H.T + model.V)
    Kp = _solve_psym(Psi, model.F @ sigma @ model.H.T + model.G @ model.L)
    residual = _riccati_residual(model, sigma, Kp, Psi)
    if residual > max(1e-8, 1e3 * tol * max(1.0, float(np.max(np.abs(sigma))))):
        raise NoConvergence(
            f"Riccati iteration did not converge (residual {residual:.3e})"
        )
    radius = float(np.max(np.abs(np.linalg.eigvals(model.F - Kp @ model.H))))
    return RiccatiSolution(
        Sigma=sigma,
        Kp=Kp,
        Psi=Psi,
        closed_loop_radius=radius,
        iterations=iterations,
        residual=residual,
        maximal_only=radius >= 1.0 - 1e-9,
    )


def entropy_rate(model: StateSpaceNoise, horizon: int | None) -> float:
    """Entropy rate of the noise process in nats per step.

    Finite horizon averages (1/2n) sum log det Psi_i from Sigma1; with
    ``horizon=None`` the stationary value from the Riccati equation is used.
    """
    p = model.p
    const = 0.5 * p * math.log(2.0 * math.pi * math.e)
    if horizon is None:
        sol = solve_dare(model)
        return 0.5 * float(np.linalg.slogdet(sol.Psi)[1]) + const
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    sigma = model.Sigma1
    acc = 0.0
    for _ in range(horizon):
        sigma, _, psi = riccati_step(model, sigma)
        sign, logdet = np.linalg.slogdet(psi)
        if sign <= 0:
            raise SingularInnovation("innovation covariance not positive definite")
        acc += logdet
    return 0.5 * acc / horizon + const
