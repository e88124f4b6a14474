"""State-space noise models for the additive Gaussian channel.

The noise z_i is generated by the linear system

    s_{i+1} = F s_i + G w_i
    z_i     = H s_i + v_i

with (w_i, v_i) i.i.d. zero-mean Gaussian, cov(w) = W, cov(v) = V,
E[w v^T] = L, and s_1 ~ N(0, Sigma1).  The channel itself is
y_i = Lambda x_i + z_i under an average power budget P.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    FbcapError,
    InfiniteCapacity,
    NotPSD,
    UnstableModel,
)

PSD_TOL = 1e-9
EIG_TOL = 1e-9
RANK_TOL = 1e-9


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise FbcapError(f"{name} contains non-finite entries")
    return m


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def is_psd(a: np.ndarray, tol: float = PSD_TOL) -> bool:
    return bool(np.min(np.linalg.eigvalsh(_sym(a))) >= -tol)


def is_pd(a: np.ndarray, tol: float = PSD_TOL) -> bool:
    return bool(np.min(np.linalg.eigvalsh(_sym(a))) > tol)


@dataclass(frozen=True)
class StateSpaceNoise:
    """Immutable noise generator (F, G, H, W, V, L, Sigma1)."""

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    W: np.ndarray
    V: np.ndarray
    L: np.ndarray
    Sigma1: np.ndarray

    def __post_init__(self):
        for name in ("F", "G", "H", "W", "V", "L", "Sigma1"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))
        n_s = self.F.shape[0]
        q = self.G.shape[1]
        p = self.H.shape[0]
        checks = {
            "F": (n_s, n_s),
            "G": (n_s, q),
            "H": (p, n_s),
            "W": (q, q),
            "V": (p, p),
            "L": (q, p),
            "Sigma1": (n_s, n_s),
        }
        for name, shape in checks.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        for name in ("W", "V", "Sigma1"):
            m = getattr(self, name)
            if not np.allclose(m, m.T, atol=1e-12):
                raise NotPSD(f"{name} must be symmetric")
        if not is_psd(self.W):
            raise NotPSD("W must be positive semidefinite")
        if not is_psd(self.Sigma1):
            raise NotPSD("Sigma1 must be positive semidefinite")
        if not is_pd(self.V):
            # A degenerate measurement covariance makes a noise coordinate
            # predictable from the past, so the capacity is infinite.
            raise InfiniteCapacity("V must be strictly positive definite")
        if not is_psd(self.joint_covariance()):
            raise NotPSD("[[W, L], [L^T, V]] must be positive semidefinite")
        for name in ("F", "G", "H", "W", "V", "L", "Sigma1"):
            getattr(self, name).setflags(write=False)

    @property
    def n_s(self) -> int:
        return self.F.shape[0]

    @property
    def q(self) -> int:
        return self.G.shape[1]

    @property
    def p(self) -> int:
        return self.H.shape[0]

    def joint_covariance(self) -> np.ndarray:
        """Covariance of the stacked disturbance (w, v)."""
        return np.block([[self.W, self.L], [self.L.T, self.V]])

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.F))))

    def is_stationary(self) -> bool:
        return self.spectral_radius() < 1.0


@dataclass(frozen=True)
class ChannelModel:
    """Channel y = Lambda x + z with power budget P and noise model."""

    Lambda: np.ndarray
    P: float
    noise: StateSpaceNoise

    def __post_init__(self):
        object.__setattr__(self, "Lambda", _as_matrix(self.Lambda, "Lambda"))
        object.__setattr__(self, "P", float(self.P))
        if not (self.P > 0):
            raise FbcapError("power budget P must be positive")
        if self.Lambda.shape[0] != self.noise.p:
            raise DimensionMismatch(
                f"Lambda has {self.Lambda.shape[0]} rows, noise dimension is {self.noise.p}"
            )
        self.Lambda.setflags(write=False)

    @property
    def m(self) -> int:
        return self.Lambda.shape[1]

    @property
    def p(self) -> int:
        return self.Lambda.shape[0]

    def is_scalar(self) -> bool:
        return self.m == 1 and self.p == 1


@dataclass(frozen=True)
class ValidationReport:
    """Result of checking the standing assumptions on a noise model."""

    detectable: bool
    controllable_unit_circle: bool
    stationary: bool
    spectral_radius: float
    stabilizable: bool
    sigma1_warning: str | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def assumptions_hold(self) -> bool:
        return self.detectable and self.controllable_unit_circle


def stationary_state_covariance(model: StateSpaceNoise) -> np.ndarray:
    """Solve Sigma = F Sigma F^T + G W G^T (requires rho(F) < 1)."""
    if not model.is_stationary():
        raise UnstableModel("stationary covariance requires rho(F) < 1")
    n = model.n_s
    Q = model.G @ model.W @ model.G.T
    A = np.eye(n * n) - np.kron(model.F, model.F)
    sig = np.linalg.solve(A, Q.reshape(-1)).reshape(n, n)
    return _sym(sig)


def build_ma1(alpha: float, sigma1: float | None = None) -> StateSpaceNoise:
    """MA(1) noise z_i = w_i + alpha * w_{i-1} as a one-state model."""
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise FbcapError("alpha must be finite")
    s1 = [[1.0]] if sigma1 is None else [[float(sigma1)]]
    return StateSpaceNoise(
        F=[[0.0]], G=[[1.0]], H=[[alpha]], W=[[1.0]], V=[[1.0]], L=[[1.0]], Sigma1=s1
    )


def build_ar1(beta: float, sigma1: float | None = None) -> StateSpaceNoise:
    """AR(1) noise z_i = beta * z_{i-1} + w_i as a one-state model."""
    beta = float(beta)
    if not math.isfinite(beta):
        raise FbcapError("beta must be finite")
    if sigma1 is None:
        # Stationary state covariance when it exists, identity otherwise.
        s1 = [[1.0 / (1.0 - beta**2)]] if abs(beta) < 1 else [[1.0]]
    else:
        s1 = [[float(sigma1)]]
    return StateSpaceNoise(
        F=[[beta]], G=[[1.0]], H=[[beta]], W=[[1.0]], V=[[1.0]], L=[[1.0]], Sigma1=s1
    )


def _pbh_rank_deficient(stacked: np.ndarray) -> bool:
    s = np.linalg.svd(stacked, compute_uv=False)
    if s[0] == 0.0:
        return True
    return bool(s[-1] < RANK_TOL * s[0])


def _detectable(F: np.ndarray, H: np.ndarray) -> bool:
    n = F.shape[0]
    for lam in np.linalg.eigvals(F):
        if abs(lam) >= 1.0 - EIG_TOL:
            stacked = np.vstack([F - lam * np.eye(n), H.astype(complex)])
            if _pbh_rank_deficient(stacked):
                return False
    return True


def _controllable_on_unit_circle(Fs: np.ndarray, Ws: np.ndarray) -> bool:
    n = Fs.shape[0]
    evals, evecs = np.linalg.eig(Fs.T)
    Ws_half = _psd_sqrt(Ws)
    for lam, vec in zip(evals, evecs.T):
        if abs(abs(lam) - 1.0) <= EIG_TOL:
            x = vec.conj()
            if np.linalg.norm(x @ Ws_half) <= RANK_TOL * max(1.0, np.linalg.norm(Ws_half)):
                return False
    return True


def _stabilizable(Fs: np.ndarray, Ws: np.ndarray) -> bool:
    evals, evecs = np.linalg.eig(Fs.T)
    Ws_half = _psd_sqrt(Ws)
    for lam, vec in zip(evals, evecs.T):
        if abs(lam) >= 1.0 - EIG_TOL:
            x = vec.conj()
            if np.linalg.norm(x @ Ws_half) <= RANK_TOL * max(1.0, np.linalg.norm(Ws_half)):
                return False
    return True


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(_sym(a))
    w = np.clip(w, 0.0, None)
    return u @ np.diag(np.sqrt(w)) @ u.T


def validate(model: StateSpaceNoise) -> ValidationReport:
    """Check detectability, unit-circle controllability and stationarity.

    Failed assumptions are reported, not raised: downstream solvers decide
    whether to proceed.
    """
    Vinv = np.linalg.inv(model.V)
    Fs = model.F - model.G @ model.L @ Vinv @ model.H
    Ws = model.W - model.L @ Vinv @ model.L.T

    detectable = _detectable(model.F, model.H)
    controllable = _controllable_on_unit_circle(Fs, model.G @ Ws @ model.G.T)
    stabilizable = _stabilizable(Fs, model.G @ Ws @ model.G.T)
    rho = model.spectral_radius()

    notes = []
    warning = None
    if not detectable:
        notes.append("detectability failed: (F, H) has an unobserved unstable mode")
    if not controllable:
        notes.append("unit-circle controllability of (F_s, W_s) failed")
    if not stabilizable:
        warning = (
            "(F_s, W_s) is not stabilizable; convergence of the Riccati "
            "recursion from Sigma1 is not certified"
        )
    return ValidationReport(
        detectable=detectable,
        controllable_unit_circle=controllable,
        stationary=rho < 1.0,
        spectral_radius=rho,
        stabilizable=stabilizable,
        sigma1_warning=warning,
        notes=tuple(notes),
    )


def noise_psd(model: StateSpaceNoise, omega: float) -> np.ndarray:
    """Power spectral density S_z(omega) of a stationary noise model."""
    if model.spectral_radius() >= 1.0 - EIG_TOL:
        raise UnstableModel("noise PSD requires rho(F) < 1")
    z = np.exp(1j * float(omega))
    T = model.H @ np.linalg.solve(z * np.eye(model.n_s) - model.F, model.G)
    S = (
        T @ model.W @ T.conj().T
        + model.V
        + T @ model.L
        + model.L.T @ T.conj().T
    )
    return 0.5 * (S + S.conj().T).real


def load_noise_json(path) -> StateSpaceNoise:
    """Load a noise model from a JSON file (keys F, G, H, W, V, L, Sigma1)."""
    data = _load_strict_json(path)
    return noise_from_dict(data)


def load_channel_json(path) -> ChannelModel:
    """Load a channel (Lambda, P + noise keys) from a JSON file."""
    data = _load_strict_json(path)
    noise = noise_from_dict(data)
    if "Lambda" not in data or "P" not in data:
        raise FbcapError("channel file must define 'Lambda' and 'P'")
    return ChannelModel(Lambda=data["Lambda"], P=data["P"], noise=noise)


def noise_from_dict(data: dict) -> StateSpaceNoise:
    required = ["F", "G", "H", "W", "V", "L", "Sigma1"]
    missing = [k for k in required if k not in data]
    if missing:
        raise FbcapError(f"model file missing keys: {missing}")
    return StateSpaceNoise(**{k: data[k] for k in required})


def _reject_constant(token: str):
    raise FbcapError(f"non-finite number {token!r} in model file")


def _load_strict_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh, parse_constant=_reject_constant)
    if not isinstance(data, dict):
        raise FbcapError("model file must contain a JSON object")
    return data
