"""Barrier path-following solver for determinant maximization under LMIs.

Solves problems of the form

    maximize    sum_k 0.5 * logdet O_k(x)
    subject to  C_j(x) >= 0   (semidefinite, affine in x)

where every O_k and C_j is an affine symmetric-matrix function of the
parameter vector x.  The central path maximizes

    t * f(x) + sum_j logdet C_j(x)

for a geometrically increasing t; the total barrier parameter over the
constraint blocks bounds the suboptimality by (sum_j size_j) / t.

Affine blocks are represented numerically: a constant matrix plus one
coefficient matrix per scalar parameter, extracted by evaluating the
block builder on unit vectors.  This keeps problem assembly declarative
and free of hand-derived derivative code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Infeasible, SolverStall


@dataclass
class AffineBlock:
    """B(x) = const + sum_i x_i coeffs[i], symmetric."""

    const: np.ndarray
    coeffs: np.ndarray  # shape (d, s, s)

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.const + np.tensordot(x, self.coeffs, axes=(0, 0))


def affine_block_from_fn(fn: Callable[[np.ndarray], np.ndarray], dim: int) -> AffineBlock:
    """Extract (const, coeffs) of an affine matrix builder by probing."""
    zero = np.zeros(dim)
    const = np.asarray(fn(zero), dtype=float)
    const = 0.5 * (const + const.T)
    s = const.shape[0]
    coeffs = np.empty((dim, s, s))
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        ci = np.asarray(fn(e), dtype=float) - const
        coeffs[i] = 0.5 * (ci + ci.T)
    return AffineBlock(const=const, coeffs=coeffs)


def _chol_or_none(a: np.ndarray):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return None


def _logdet_grad_hess(block: AffineBlock, x: np.ndarray, need_hess: bool):
    """(logdet, grad, T_flat) of logdet B(x); T_flat rows give the Hessian
    via H = -T_flat T_flat^T.  Returns None when B(x) is not PD."""
    B = block.value(x)
    L = _chol_or_none(B)
    if L is None:
        return None
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    # T_i = L^-1 S_i L^-T, grad_i = tr(B^-1 S_i) = tr(T_i)
    d, s, _ = block.coeffs.shape
    Y = np.linalg.solve(L[None, :, :], block.coeffs)  # L^-1 S_i
    T = np.transpose(np.linalg.solve(L[None, :, :], np.transpose(Y, (0, 2, 1))), (0, 2, 1))
    grad = np.einsum("ijj->i", T)
    if not need_hess:
        return logdet, grad, None
    return logdet, grad, T.reshape(d, s * s)


@dataclass
class MaxDetResult:
    x: np.ndarray
    objective: float
    gap: float
    iterations: int
    t_final: float
    perturbation: float


@dataclass
class MaxDetProblem:
    """Assembled max-det problem over a d-dimensional parameter vector."""

    dim: int
    objective_blocks: list[AffineBlock]
    constraint_blocks: list[AffineBlock]
    obj_weights: Sequence[float] | None = None
    perturbation: float = 0.0

    def __post_init__(self):
        if self.obj_weights is None:
            self.obj_weights = [0.5] * len(self.objective_blocks)
        if self.perturbation:
            for blk in self.constraint_blocks:
                blk.const = blk.const + self.perturbation * np.eye(blk.size)

    @property
    def barrier_parameter(self) -> float:
        return float(sum(b.size for b in self.constraint_blocks))

    def objective(self, x: np.ndarray) -> float:
        total = 0.0
        for w, blk in zip(self.obj_weights, self.objective_blocks):
            sign, logdet = np.linalg.slogdet(blk.value(x))
            if sign <= 0:
                return -np.inf
            total += w * logdet
        return total

    def is_strictly_feasible(self, x: np.ndarray) -> bool:
        for blk in self.constraint_blocks + self.objective_blocks:
            if _chol_or_none(blk.value(x)) is None:
                return False
        return True

    def _phi(self, x: np.ndarray, t: float, need_hess: bool):
        """Barrier merit t*f + sum logdet C_j with gradient and Hessian."""
        d = self.dim
        val = 0.0
        grad = np.zeros(d)
        flats = []
        weights = []
        for w, blk in zip(self.obj_weights, self.objective_blocks):
            out = _logdet_grad_hess(blk, x, need_hess)
            if out is None:
                return None
            ld, g, Tf = out
            val += t * w * ld
            grad += t * w * g
            if need_hess:
                flats.append(Tf)
                weights.append(t * w)
        for blk in self.constraint_blocks:
            out = _logdet_grad_hess(blk, x, need_hess)
            if out is None:
                return None
            ld, g, Tf = out
            val += ld
            grad += g
            if need_hess:
                flats.append(Tf)
                weights.append(1.0)
        if not need_hess:
            return val, grad, None
        H = np.zeros((d, d))
        for w, Tf in zip(weights, flats):
            H -= w * (Tf @ Tf.T)
        return val, grad, H

    def solve(
        self,
        x0: np.ndarray,
        gap_tol: float = 1e-9,
        t0: float = 1.0,
        mu: float = 10.0,
        t_max: float = 1e12,
        newton_tol: float = 1e-11,
        max_newton: int = 60,
    ) -> MaxDetResult:
        x = np.asarray(x0, dtype=float).copy()
        if not self.is_strictly_feasible(x):
            raise Infeasible("initial point is not strictly feasible")
        m = self.barrier_parameter
        t = t0
        total_newton = 0
        while True:
            x, stalled = self._center(x, t, newton_tol, max_newton)
            total_newton += stalled
            gap = m / t
            if gap <= gap_tol or t >= t_max:
                break
            t = min(t * mu, t_max * 1.0000001)
        return MaxDetResult(
            x=x,
            objective=self.objective(x),
            gap=m / t,
            iterations=total_newton,
            t_final=t,
            perturbation=self.perturbation,
        )

    def _center(self, x: np.ndarray, t: float, newton_tol: float, max_newton: int):
        for it in range(max_newton):
            out = self._phi(x, t, need_hess=True)
            if out is None:
                raise SolverStall("iterate left the feasible region")
            val, grad, H = out
            # Maximize: solve (-H) dx = grad; -H is positive definite on the
            # strictly feasible set, regularize if roundoff says otherwise.
            A = -H
            reg = 0.0
            L = _chol_or_none(A)
            while L is None:
                reg = max(10.0 * reg, 1e-12 * (1.0 + np.max(np.abs(A))))
                L = _chol_or_none(A + reg * np.eye(self.dim))
                if reg > 1e6 * (1.0 + np.max(np.abs(A))):
                    raise SolverStall("Newton system is numerically singular")
            if reg:
                A = A + reg * np.eye(self.dim)
            dx = np.linalg.solve(L.T, np.linalg.solve(L, grad))
            decrement = float(grad @ dx)
            if decrement / 2.0 <= newton_tol:
                return x, it + 1
            # Backtracking line search keeping every block PD.
            step = 1.0
            for _ in range(60):
                cand = x + step * dx
                out2 = self._phi(cand, t, need_hess=False)
                if out2 is not None and out2[0] >= val + 0.25 * step * decrement:
                    x = cand
                    break
                step *= 0.5
            else:
                return x, it + 1
        return x, max_newton


def find_strictly_feasible_delta(
    make_x: Callable[[float], np.ndarray],
    problem_fn: Callable[[], "MaxDetProblem"],
    deltas: Sequence[float],
) -> tuple[np.ndarray, float] | None:
    """Scan delta candidates for a strictly feasible start; None if all fail."""
    prob = problem_fn()
    for delta in deltas:
        x = make_x(delta)
        if prob.is_strictly_feasible(x):
            return x, delta
    return None
