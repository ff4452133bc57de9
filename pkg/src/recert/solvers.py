"""Joint sparse estimators for regression with corrupted responses and designs.

* Robust Lasso: ``min ½‖y − X b + θ‖₂² + λ_b‖b‖₁ + λ_θ‖θ‖₁`` by cyclic
  coordinate descent.
* Multitask robust regression: ``min ½‖M − X B + Θ‖₂,₂² + λ_B‖B‖₁,₁ + λ_Θ‖Θ‖₂,₁``
  by proximal gradient with row-group shrinkage on ``Θ``.

A penalty of ``inf`` freezes the corresponding block at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (AugmentedPoint, ConeSpecVector, InvalidInputError, cone_margin_vector,
                   is_cone_member_vector)


@dataclass(frozen=True)
class SolverConfig:
    lambda_b: float
    lambda_theta: float
    max_iters: int = 10_000
    tol: float = 1e-8

    def __post_init__(self):
        if not (self.lambda_b >= 0 and self.lambda_theta >= 0):
            raise InvalidInputError("penalties must be >= 0")
        if not self.tol > 0:
            raise InvalidInputError("tol must be > 0")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")


@dataclass(frozen=True, eq=False)
class SolverResult:
    b_hat: np.ndarray
    theta_hat: np.ndarray
    objective_trace: tuple[float, ...]
    converged: bool
    iterations: int
    kkt_residual: float
    non_unique: bool = False


def default_penalties(n: int, p: int) -> tuple[float, float, float]:
    """``(λ_b, λ_θ, γ)`` with ``λ_θ = 2√(log n/n)``, ``γ = 1.1√(log p/log n)``, ``λ_b = γλ_θ``."""
    lam_t = 2.0 * math.sqrt(math.log(n) / n)
    gamma = 1.1 * math.sqrt(math.log(p) / math.log(n))
    return gamma * lam_t, lam_t, gamma


def _penalty(lam: float, value: float) -> float:
    if lam == 0 or value == 0:
        return 0.0
    return lam * value


def _l21(A: np.ndarray) -> float:
    return float(np.sqrt((A ** 2).sum(axis=1)).sum())


def objective_value(b, theta, y, X_norm, cfg: SolverConfig) -> float:
    """Exact objective of either solver; matrix arguments select the multitask form."""
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.asarray(X_norm, dtype=float)
    n, p = X.shape
    if b.shape[0] != p or theta.shape[0] != n or y.shape[0] != n or b.ndim != y.ndim or theta.ndim != y.ndim:
        raise InvalidInputError("dimension mismatch in objective_value")
    r = y - X @ b + theta
    smooth = 0.5 * float((r ** 2).sum())
    if y.ndim == 1:
        return smooth + _penalty(cfg.lambda_b, float(np.abs(b).sum())) + _penalty(
            cfg.lambda_theta, float(np.abs(theta).sum()))
    if b.shape[1] != y.shape[1] or theta.shape[1] != y.shape[1]:
        raise InvalidInputError("column counts differ")
    return smooth + _penalty(cfg.lambda_b, float(np.abs(b).sum())) + _penalty(cfg.lambda_theta, _l21(theta))


def smooth_gradient(b, theta, y, X_norm) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of ``½‖y − X b + θ‖²`` with respect to ``(b, θ)``."""
    r = np.asarray(y, dtype=float) - X_norm @ b + theta
    return -(X_norm.T @ r), r


def _l1_kkt(g: np.ndarray, x: np.ndarray, lam: float) -> float:
    """Largest violation of ``g ∈ −λ ∂‖x‖₁``."""
    if not g.size:
        return 0.0
    if math.isinf(lam):
        return 0.0
    nz = x != 0
    v = np.where(nz, np.abs(g + lam * np.sign(x)), np.maximum(np.abs(g) - lam, 0.0))
    return float(v.max())


def _group_kkt(G: np.ndarray, T: np.ndarray, lam: float) -> float:
    if math.isinf(lam):
        return 0.0
    norms = np.sqrt((T ** 2).sum(axis=1))
    nz = norms > 0
    unit = np.divide(T, norms[:, None], out=np.zeros_like(T), where=nz[:, None])
    v_nz = np.sqrt(((G + lam * unit) ** 2).sum(axis=1))
    v_z = np.maximum(np.sqrt((G ** 2).sum(axis=1)) - lam, 0.0)
    v = np.where(nz, v_nz, v_z)
    return float(v.max()) if v.size else 0.0


def _soft(x, lam):
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("inputs must be finite")


def solve_robust_lasso(y, X_norm, cfg: SolverConfig, b0=None, theta0=None) -> SolverResult:
    """Cyclic coordinate descent for the robust Lasso.

    Each sweep updates ``b_1, …, b_p`` and then all ``θ_i`` at once (the θ
    block is separable, ``θ_i = −S(y_i − x_iᵀb, λ_θ)``). Stops once the
    relative objective decrease has been below ``tol`` for two consecutive
    sweeps and the KKT residual is at most ``tol``.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X_norm, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise InvalidInputError("y must have length n for an n x p design")
    _check_finite(y, X)
    n, p = X.shape
    b = np.zeros(p) if b0 is None else np.array(b0, dtype=float)
    theta = np.zeros(n) if theta0 is None else np.array(theta0, dtype=float)
    if b.shape != (p,) or theta.shape != (n,):
        raise InvalidInputError("warm start has wrong shape")
    freeze_t = math.isinf(cfg.lambda_theta)
    freeze_b = math.isinf(cfg.lambda_b)
    if freeze_t:
        theta[:] = 0.0
    if freeze_b:
        b[:] = 0.0
    col_sq = (X ** 2).sum(axis=0)
    non_unique = bool(np.any(col_sq == 0) and cfg.lambda_b == 0)
    r = y - X @ b + theta
    trace = [objective_value(b, theta, y, X, cfg)]
    if not (b.any() or theta.any()):
        # The origin is optimal iff both gradients sit inside the penalty boxes;
        # testing with X.T @ y avoids per-column rounding at the exact threshold.
        kkt = max(0.0 if freeze_b else _l1_kkt(-(X.T @ y), b, cfg.lambda_b),
                  0.0 if freeze_t else _l1_kkt(y, theta, cfg.lambda_theta))
        if kkt == 0.0:
            return SolverResult(b, theta, tuple(trace), True, 0, 0.0, non_unique)
    small = 0
    converged = False
    kkt = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if not freeze_b:
            for j in range(p):
                if col_sq[j] == 0:
                    continue
                old = b[j]
                rho = X[:, j] @ r + col_sq[j] * old
                new = _soft(rho, cfg.lambda_b) / col_sq[j]
                if new != old:
                    r -= X[:, j] * (new - old)
                    b[j] = new
        if not freeze_t:
            u = y - X @ b
            theta = -_soft(u, cfg.lambda_theta)
            r = u + theta
        else:
            r = y - X @ b
        f = objective_value(b, theta, y, X, cfg)
        prev = trace[-1]
        trace.append(f)
        dec = (prev - f) / max(abs(prev), 1e-300)
        small = small + 1 if dec < cfg.tol else 0
        if small >= 2:
            gb, gt = -(X.T @ r), r
            kkt = max(0.0 if freeze_b else _l1_kkt(gb, b, cfg.lambda_b),
                      0.0 if freeze_t else _l1_kkt(gt, theta, cfg.lambda_theta))
            if kkt <= cfg.tol:
                converged = True
                break
    if not converged:
        gb, gt = -(X.T @ r), r
        kkt = max(0.0 if freeze_b else _l1_kkt(gb, b, cfg.lambda_b),
                  0.0 if freeze_t else _l1_kkt(gt, theta, cfg.lambda_theta))
    return SolverResult(b, theta, tuple(trace), converged, it, kkt, non_unique)


def solve_multitask_robust(M, X_norm, cfg: SolverConfig, B0=None, Theta0=None) -> SolverResult:
    """Proximal gradient (step ``1/L``, ``L = σ_max([X | −I])²``) for the multitask problem.

    Entrywise soft-thresholding on ``B`` and row-wise group shrinkage on
    ``Θ``. The estimate ``Θ̂`` tracks ``Θ*`` in ``M = X B* − Θ* + W``.
    """
    M = np.asarray(M, dtype=float)
    X = np.asarray(X_norm, dtype=float)
    if X.ndim != 2 or M.ndim != 2 or M.shape[0] != X.shape[0]:
        raise InvalidInputError("M must be n x q for an n x p design")
    _check_finite(M, X)
    n, p = X.shape
    q = M.shape[1]
    B = np.zeros((p, q)) if B0 is None else np.array(B0, dtype=float)
    T = np.zeros((n, q)) if Theta0 is None else np.array(Theta0, dtype=float)
    if B.shape != (p, q) or T.shape != (n, q):
        raise InvalidInputError("warm start has wrong shape")
    freeze_b = math.isinf(cfg.lambda_b)
    freeze_t = math.isinf(cfg.lambda_theta)
    if freeze_b:
        B[:] = 0.0
    if freeze_t:
        T[:] = 0.0
    L = np.linalg.norm(X, 2) ** 2 + 1.0
    step = 1.0 / L
    trace = [objective_value(B, T, M, X, cfg)]
    small = 0
    converged = False
    kkt = math.inf
    it = 0
    R = M - X @ B + T
    for it in range(1, cfg.max_iters + 1):
        if not freeze_b:
            B = _soft(B + step * (X.T @ R), step * cfg.lambda_b)
        if not freeze_t:
            Z = T - step * R
            nz = np.sqrt((Z ** 2).sum(axis=1))
            shrink = np.maximum(1.0 - step * cfg.lambda_theta / np.where(nz > 0, nz, 1.0), 0.0)
            T = Z * shrink[:, None]
        R = M - X @ B + T
        f = objective_value(B, T, M, X, cfg)
        prev = trace[-1]
        trace.append(f)
        dec = (prev - f) / max(abs(prev), 1e-300)
        small = small + 1 if dec < cfg.tol else 0
        if small >= 2:
            kkt = max(0.0 if freeze_b else _l1_kkt(-(X.T @ R), B, cfg.lambda_b),
                      0.0 if freeze_t else _group_kkt(R, T, cfg.lambda_theta))
            if kkt <= cfg.tol or f == 0.0:
                converged = True
                break
    if not converged:
        kkt = max(0.0 if freeze_b else _l1_kkt(-(X.T @ R), B, cfg.lambda_b),
                  0.0 if freeze_t else _group_kkt(R, T, cfg.lambda_theta))
    return SolverResult(B, T, tuple(trace), converged, it, kkt)


@dataclass(frozen=True)
class ConeCheck:
    margin: float
    member: bool


def error_in_cone_check(result: SolverResult, truth, spec: ConeSpecVector) -> ConeCheck:
    """Cone margin of the estimation error ``[b̂ − b*; θ̂ − θ*]``."""
    b_star, theta_star = (np.asarray(a, dtype=float) for a in truth)
    err = AugmentedPoint(result.b_hat - b_star, result.theta_hat - theta_star)
    return ConeCheck(cone_margin_vector(err, spec), is_cone_member_vector(err, spec))
