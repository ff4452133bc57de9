"""Empirical RE constants over augmented cones and Monte Carlo checks of the bounds.

The RE constant of a cone is a minimum over an infinite set. Everything here
samples finitely many feasible points, so

* ``κ̂`` from :func:`empirical_re_vector` / :func:`empirical_re_matrix` is an
  *upper* estimate of the true constant;
* a sampled infimum in :func:`verify_lemma_aux1` over-estimates the true one;
* a sampled supremum in :func:`verify_lemma_aux2` under-estimates the true one.

These one-sided directions are what make the lemma checks valid as stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import bounds as bd
from .core import (AugmentedMatrixPoint, AugmentedPoint, ConeSpecMatrix, ConeSpecVector,
                   InvalidInputError, MEMBERSHIP_RTOL, matrix_cone_parts, vector_cone_parts)
from .design import CovarianceSpec, DesignSample, spectral_term, stream, varrho

VIOLATION_RTOL = 1e-9
BRUTE_FORCE_MAX_DIM = 12
_BF_CHUNK = 1 << 16


@dataclass(frozen=True)
class ReCertificate:
    """Empirical RE estimate ``κ̂`` next to a theoretical lower bound.

    ``κ̂`` is an upper estimate; ``margin = κ̂ − bound`` must be ≥ 0 whenever
    the bound holds on the realised design.
    """

    kappa_hat: float
    bound: float
    margin: float
    num_points: int
    num_refinements: int
    violations: int
    witness: Optional[AugmentedPoint] = None


@dataclass(frozen=True)
class SplittingDiagnostics:
    I1_hat: float
    I2_hat: float
    spectral: float
    rhs: float


@dataclass(frozen=True)
class PointwiseReport:
    num_points: int
    violations: int
    max_gap: float
    positive_rhs: int
    sample_size_ok: bool


# ------------------------------------------------------------------ vector cones


def _cone_weights(spec: ConeSpecVector) -> np.ndarray:
    """Weights ``w`` with ``[b;θ]`` in the cone iff ``w·|v| ≤ 0``."""
    sm = spec.supports.s_mask()
    om = spec.supports.o_mask()
    wb = np.where(sm, -spec.c * spec.gamma, spec.gamma)
    wt = np.where(om, -spec.c, 1.0)
    return np.concatenate([wb, wt])


def _retract(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Shrink the off-support block just enough to enter the cone, then normalise.

    Rows that end up zero (no on-support mass) are returned as zeros.
    """
    on_mask = w < 0
    absV = np.abs(V)
    on = (absV * np.where(on_mask, -w, 0.0)).sum(axis=-1)
    off = (absV * np.where(on_mask, 0.0, w)).sum(axis=-1)
    factor = np.where(off > on, on / np.where(off > 0, off, 1.0), 1.0)
    V = np.where(on_mask, V, V * factor[..., None])
    norms = np.linalg.norm(V, axis=-1, keepdims=True)
    return np.divide(V, norms, out=np.zeros_like(V), where=norms > 0)


def _halfspace_step(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the cone piece of its own sign pattern.

    With ``y = |v|`` the piece is ``{y ≥ 0, w·y ≤ 0}``; its projection is
    ``max(y − t w, 0)`` where ``t ≥ 0`` solves ``w·max(y − t w, 0) = 0``
    (a decreasing piecewise-linear equation, solved by bisection).
    """
    s = np.where(V < 0, -1.0, 1.0)
    Y = np.abs(V)
    val = (Y * w).sum(axis=-1)
    need = val > 0
    if not need.any():
        return V
    Yn = Y[need]
    lo = np.zeros(len(Yn))
    hi = np.full(len(Yn), Yn.max(axis=1) / w[w > 0].min())
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g = (np.maximum(Yn - mid[:, None] * w, 0.0) * w).sum(axis=1)
        lo = np.where(g > 0, mid, lo)
        hi = np.where(g > 0, hi, mid)
    Y = Y.copy()
    Y[need] = np.maximum(Yn - hi[:, None] * w, 0.0)
    return s * Y


def _split(V: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    return V[..., :p], V[..., p:]


def _apply_M(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    p = X.shape[1]
    return V[:, :p] @ X.T - V[:, p:]


def _apply_Mt(X: np.ndarray, R: np.ndarray) -> np.ndarray:
    return np.concatenate([R @ X, -R], axis=1)


def _sample_cone_array(spec: ConeSpecVector, K: int, rng: np.random.Generator) -> np.ndarray:
    w = _cone_weights(spec)
    V = rng.standard_normal((K, spec.p + spec.n))
    return _retract(V, w)


def sample_cone_points(spec: ConeSpecVector, K: int, seed: int = 0) -> list[AugmentedPoint]:
    """``K`` unit-norm members of the cone (empty list for the degenerate cone ``{0}``).

    Gaussian ``[b; θ]`` is drawn, the off-support part is rescaled by the
    largest factor ≤ 1 that restores a non-negative margin, and the result is
    normalised.
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if spec.degenerate:
        return []
    V = _sample_cone_array(spec, K, stream(seed, "cone-sampler"))
    b, t = _split(V, spec.p)
    return [AugmentedPoint(b[k], t[k]) for k in range(K)]


def _ratios(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    R = _apply_M(X, V)
    num = np.sqrt((R ** 2).sum(axis=1))
    den = np.linalg.norm(V, axis=1)
    return np.divide(num, den, out=np.full(len(V), np.inf), where=den > 0)


def _refine_vector(X: np.ndarray, w: np.ndarray, V: np.ndarray, iters: int):
    """Batched projected descent of ``‖Mv‖²`` on the unit sphere inside the cone.

    Returns refined rows, their squared ratios and the number of accepted steps.
    """
    F = (_apply_M(X, V) ** 2).sum(axis=1)
    lip = np.linalg.norm(X, 2) ** 2 + 1.0
    eta = np.full(len(V), 0.5 / lip)
    accepted = 0
    for _ in range(iters):
        MV = _apply_M(X, V)
        G = 2.0 * (_apply_Mt(X, MV) - F[:, None] * V)
        cand = _retract(_halfspace_step(V - eta[:, None] * G, w), w)
        Fc = (_apply_M(X, cand) ** 2).sum(axis=1)
        ok = (Fc < F) & (np.linalg.norm(cand, axis=1) > 0)
        V = np.where(ok[:, None], cand, V)
        F = np.where(ok, Fc, F)
        eta = np.where(ok, eta * 1.25, eta * 0.5)
        eta = np.maximum(eta, 1e-300)
        accepted += int(ok.sum())
    return V, F, accepted


def _starting_points(X: np.ndarray, spec: ConeSpecVector, K: int, rng: np.random.Generator) -> np.ndarray:
    """Cone samples, half plain Gaussian and half near-cancelling ``θ ≈ X b``."""
    w = _cone_weights(spec)
    n, p = X.shape
    V = rng.standard_normal((K, p + n))
    half = K // 2
    if half:
        b = V[:half, :p]
        V[:half, p:] = b @ X.T + 0.1 * V[:half, p:]
    return _retract(V, w)


def empirical_re_vector(X_norm, spec: ConeSpecVector, K: int = 256, refine_iters: int = 200,
                        seed: int = 0, bound: float = 0.0) -> ReCertificate:
    """Upper estimate of ``min ‖X_norm b − θ‖₂ / ‖[b; θ]‖₂`` over the cone.

    ``K`` cone points are drawn and each is refined by projected descent
    (gradient step, cone re-projection, re-normalisation; the step is halved
    on non-decrease). ``bound`` is only carried into the certificate.
    """
    X = np.asarray(X_norm, dtype=float)
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if X.shape != (spec.n, spec.p):
        raise InvalidInputError(f"X_norm must be {spec.n}x{spec.p}, got {X.shape}")
    if spec.degenerate:
        return ReCertificate(math.inf, bound, math.inf, 0, 0, 0)
    V = _starting_points(X, spec, K, stream(seed, "cone-sampler"))
    V, F, acc = _refine_vector(X, _cone_weights(spec), V, refine_iters)
    k = int(np.argmin(F))
    kappa = float(np.sqrt(max(F[k], 0.0)))
    b, t = _split(V[k], spec.p)
    return ReCertificate(kappa, bound, kappa - bound, K, acc, 0, AugmentedPoint(b, t))


# -------------------------------------------------------------- brute force oracle


def _householder_complements(a: np.ndarray) -> np.ndarray:
    """Orthonormal bases of ``a⊥`` for a batch of vectors ``a`` of shape ``(N, k)``."""
    N, k = a.shape
    u = a / np.linalg.norm(a, axis=1, keepdims=True)
    u[:, 0] -= 1.0
    nu = (u ** 2).sum(axis=1)
    H = np.broadcast_to(np.eye(k), (N, k, k)).copy()
    safe = nu > 1e-30
    H[safe] -= 2.0 * u[safe, :, None] * u[safe, None, :] / nu[safe, None, None]
    return H[:, :, 1:]


def _exact_candidates(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Stationary points of ``vᵀAv`` on every face of ``{w·|v| ≤ 0}``.

    For each free coordinate set ``F`` it returns the eigenvectors of ``A``
    compressed to ``F`` (cone constraint inactive) and, for each sign pattern
    on ``F``, the eigenvectors compressed to ``{s∘w·v = 0}`` (constraint
    active). The minimiser over the cone is one of these for generic ``A``.
    """
    m = A.shape[0]
    out = []
    for k in range(1, m + 1):
        sets = np.array(list(combinations(range(m), k)))
        sub = A[sets[:, :, None], sets[:, None, :]]
        _, vecs = np.linalg.eigh(sub)
        full = np.zeros((len(sets), k, m))
        rows = np.arange(len(sets))[:, None, None]
        full[rows, np.arange(k)[None, :, None], sets[:, None, :]] = np.swapaxes(vecs, 1, 2)
        out.append(full.reshape(-1, m))
        if k < 2:
            continue
        signs = np.array([(1,) + s for s in _sign_patterns(k - 1)], dtype=float)
        F_idx = np.repeat(sets, len(signs), axis=0)
        S_all = np.tile(signs, (len(sets), 1))
        a = w[F_idx] * S_all
        Q = _householder_complements(a)
        subA = A[F_idx[:, :, None], F_idx[:, None, :]]
        red = np.swapaxes(Q, 1, 2) @ subA @ Q
        _, y = np.linalg.eigh(red)
        loc = Q @ y
        full = np.zeros((len(F_idx), k - 1, m))
        rows = np.arange(len(F_idx))[:, None, None]
        full[rows, np.arange(k - 1)[None, :, None], F_idx[:, None, :]] = np.swapaxes(loc, 1, 2)
        out.append(full.reshape(-1, m))
    return np.concatenate(out, axis=0)


def _sign_patterns(k: int) -> list[tuple[int, ...]]:
    if k == 0:
        return [()]
    rest = _sign_patterns(k - 1)
    return [(1,) + r for r in rest] + [(-1,) + r for r in rest]


def _members(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    absV = np.abs(V)
    val = (absV * w).sum(axis=1)
    scale = (absV * np.abs(w)).sum(axis=1)
    return (val <= MEMBERSHIP_RTOL * scale) & (scale > 0)


def exact_cone_minimum(M: np.ndarray, w: np.ndarray) -> float:
    """``min ‖Mv‖₂/‖v‖₂`` over ``{w·|v| ≤ 0}`` by face enumeration (small dims only)."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(w, dtype=float)
    if M.shape[1] > BRUTE_FORCE_MAX_DIM:
        raise InvalidInputError(f"face enumeration is capped at dimension {BRUTE_FORCE_MAX_DIM}")
    C = _exact_candidates(M.T @ M, w)
    C = C[_members(C, w)]
    if not len(C):
        return math.inf
    r = np.linalg.norm(C @ M.T, axis=1) / np.linalg.norm(C, axis=1)
    return float(r.min())


def brute_force_re(X_norm, spec: ConeSpecVector, grid_budget: int = 10 ** 6, seed: int = 0,
                   exact: bool = True) -> float:
    """Independent oracle for the RE constant of a small vector cone.

    Minimum ratio over (i) the first ``grid_budget`` directions of a fixed
    uniform stream on the unit sphere that lie in the cone, (ii) all
    support-aligned coordinate directions and (iii) the exact face
    enumeration of :func:`exact_cone_minimum`. Parts (i)-(ii) alone are an
    upper estimate that converges as the budget grows and is non-increasing
    in it; part (iii), skipped with ``exact=False``, makes the value exact
    on generic instances.
    """
    X = np.asarray(X_norm, dtype=float)
    n, p = X.shape
    if (n, p) != (spec.n, spec.p):
        raise InvalidInputError("X_norm does not match the cone dimensions")
    if p + n > BRUTE_FORCE_MAX_DIM:
        raise InvalidInputError(f"brute_force_re requires p + n <= {BRUTE_FORCE_MAX_DIM}")
    if grid_budget < 0:
        raise InvalidInputError("grid_budget must be >= 0")
    w = _cone_weights(spec)
    M = np.hstack([X, -np.eye(n)])
    best = math.inf
    used = 0
    chunk = 0
    while used < grid_budget:
        size = min(_BF_CHUNK, grid_budget - used)
        V = stream(seed, "cone-sampler", 0xBF, chunk).standard_normal((_BF_CHUNK, p + n))[:size]
        V = V[_members(V, w)]
        if len(V):
            best = min(best, float((np.linalg.norm(V @ M.T, axis=1) / np.linalg.norm(V, axis=1)).min()))
        used += size
        chunk += 1
    on_idx = np.flatnonzero(w < 0)
    if len(on_idx):
        best = min(best, float(np.linalg.norm(M[:, on_idx], axis=0).min()))
    return min(best, exact_cone_minimum(M, w)) if exact else best


# ---------------------------------------------------------------- matrix cones


def _matrix_masks(spec: ConeSpecMatrix) -> tuple[np.ndarray, np.ndarray]:
    return spec.collection.mask(), spec.o_mask()


def _retract_matrix(B, T, spec: ConeSpecMatrix):
    jm, om = _matrix_masks(spec)
    on, off = matrix_cone_parts(B, T, spec)
    on = spec.c * on
    factor = np.where(off > on, on / np.where(off > 0, off, 1.0), 1.0)
    B = np.where(jm, B, B * factor[:, None, None])
    T = np.where(om[:, None], T, T * factor[:, None, None])
    scale = np.maximum(np.sqrt((B ** 2).sum(axis=(1, 2))), np.sqrt((T ** 2).sum(axis=(1, 2))))
    safe = np.where(scale > 0, scale, 1.0)[:, None, None]
    return B / safe, T / safe, scale > 0


def _matrix_objective(X, B, T):
    R = X[None] @ B - T
    num = (R ** 2).sum(axis=(1, 2))
    nb = (B ** 2).sum(axis=(1, 2))
    nt = (T ** 2).sum(axis=(1, 2))
    return num, nb, nt, R


def empirical_re_matrix(X_norm, spec: ConeSpecMatrix, K: int = 64, refine_iters: int = 200,
                        seed: int = 0, bound: float = 0.0) -> ReCertificate:
    """Upper estimate of ``min ‖X_norm B − Θ‖₂,₂ / (‖B‖₂,₂ ∨ ‖Θ‖₂,₂)`` over the matrix cone.

    Gaussian ``[B; Θ]`` blocks are drawn (column by column, i.e. one vector
    draw per column), the off-support parts get a single global rescale to
    satisfy the scalar cone inequality, and each point is refined by
    projected subgradient descent on the ratio.
    """
    X = np.asarray(X_norm, dtype=float)
    n, p = X.shape
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if (n, p) != (spec.n, spec.p):
        raise InvalidInputError("X_norm does not match the cone dimensions")
    jm, om = _matrix_masks(spec)
    if not jm.any() and not om.any():
        return ReCertificate(math.inf, bound, math.inf, 0, 0, 0)
    rng = stream(seed, "cone-sampler")
    B = rng.standard_normal((K, p, p))
    T = rng.standard_normal((K, n, p))
    half = K // 2
    T[:half] = X[None] @ B[:half] + 0.1 * T[:half]
    B, T, _ = _retract_matrix(B, T, spec)
    num, nb, nt, R = _matrix_objective(X, B, T)
    F = num / np.maximum(nb, nt)
    lip = np.linalg.norm(X, 2) ** 2 + 1.0
    eta = np.full(K, 0.5 / lip)
    accepted = 0
    for _ in range(refine_iters):
        D = np.maximum(nb, nt)
        use_b = (nb >= nt)[:, None, None]
        gB = (2.0 * (X.T[None] @ R) - np.where(use_b, 2.0 * F[:, None, None] * B, 0.0)) / D[:, None, None]
        gT = (-2.0 * R - np.where(use_b, 0.0, 2.0 * F[:, None, None] * T)) / D[:, None, None]
        Bc, Tc, live = _retract_matrix(B - eta[:, None, None] * gB, T - eta[:, None, None] * gT, spec)
        numc, nbc, ntc, Rc = _matrix_objective(X, Bc, Tc)
        Fc = numc / np.where(live, np.maximum(nbc, ntc), 1.0)
        ok = live & (Fc < F)
        sel = ok[:, None, None]
        B, T, R = np.where(sel, Bc, B), np.where(sel, Tc, T), np.where(sel, Rc, R)
        nb, nt, F = np.where(ok, nbc, nb), np.where(ok, ntc, nt), np.where(ok, Fc, F)
        eta = np.maximum(np.where(ok, eta * 1.25, eta * 0.5), 1e-300)
        accepted += int(ok.sum())
    k = int(np.argmin(F))
    kappa = float(np.sqrt(max(F[k], 0.0)))
    return ReCertificate(kappa, bound, kappa - bound, K, accepted, 0)


# ---------------------------------------------------------------- theorem checks


def _points_to_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        return np.atleast_2d(points[0]), np.atleast_2d(points[1])
    pts = list(points)
    if not pts:
        raise InvalidInputError("no points given")
    return np.stack([q.b for q in pts]), np.stack([q.theta for q in pts])


def check_theorem_pointwise(sample: DesignSample, points, mode="special",
                            sigma_max_a: float | None = None) -> PointwiseReport:
    """Count points with ``‖X_norm b − θ‖₂ < RHS − tol``.

    ``points`` is a sequence of :class:`AugmentedPoint` or a pair of arrays
    ``(b, θ)`` with shapes ``(K, p)`` and ``(K, n)``. ``mode`` is
    ``"special"`` for the rounded constants or a :class:`BoundParams`.
    ``tol = 1e-9 (1 + ‖[b;θ]‖₂)``.
    """
    b, t = _points_to_arrays(points)
    n, p = sample.n, sample.p
    if b.shape[1] != p or t.shape[1] != n:
        raise InvalidInputError("point dimensions do not match the design")
    rho_s = varrho(sample.sigma_s)
    if sigma_max_a is None:
        sigma_max_a = spectral_term(sample.E_D, sample.sigma_s)
    if isinstance(mode, str):
        if mode != "special":
            raise InvalidInputError(f"unknown mode {mode!r}")
        res = bd.special_vector_rhs(n, p, rho_s, sigma_max_a, b, t, sample.sigma_s)
    else:
        res = bd.general_vector_rhs(mode, n, p, rho_s, sigma_max_a, b, t, sample.sigma_s)
    rhs = np.atleast_1d(res.value)
    lhs = np.linalg.norm(b @ sample.X_norm.T - t, axis=1)
    tol = VIOLATION_RTOL * (1.0 + np.sqrt((b ** 2).sum(axis=1) + (t ** 2).sum(axis=1)))
    gap = rhs - lhs
    return PointwiseReport(num_points=len(lhs), violations=int((lhs < rhs - tol).sum()),
                           max_gap=float(gap.max()), positive_rhs=int((rhs > 0).sum()),
                           sample_size_ok=res.sample_size_ok)


def _random_sparse(K: int, dim: int, rng: np.random.Generator, max_support: int = 5) -> np.ndarray:
    """Rows with a uniformly placed support of random size in ``1..max_support``."""
    size = rng.integers(1, min(dim, max_support) + 1, size=K)
    rank = np.argsort(np.argsort(rng.random((K, dim)), axis=1), axis=1)
    return np.where(rank < size[:, None], rng.standard_normal((K, dim)), 0.0)


def theorem_test_points(X_norm: np.ndarray, K: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A mixture of sparse-``b``, sparse-``θ``, dense and near-cancelling test points.

    Rows cycle through four kinds: sparse ``b`` with ``θ = 0``; sparse ``θ``
    with a small one-coordinate ``b``; dense Gaussian ``[b; θ]``; sparse ``b``
    with ``θ = X_norm b + 0.01·noise``.
    """
    n, p = X_norm.shape
    b = np.zeros((K, p))
    t = np.zeros((K, n))
    kind = np.arange(K) % 4
    i0, i1, i2, i3 = (np.flatnonzero(kind == k) for k in range(4))
    b[i0] = _random_sparse(len(i0), p, rng)
    t[i1] = _random_sparse(len(i1), n, rng)
    b[i1] = 0.1 * _random_sparse(len(i1), p, rng, max_support=1)
    b[i2] = rng.standard_normal((len(i2), p))
    t[i2] = rng.standard_normal((len(i2), n))
    b[i3] = _random_sparse(len(i3), p, rng)
    t[i3] = b[i3] @ X_norm.T + 0.01 * rng.standard_normal((len(i3), n))
    return b, t


def certify_vector(sample: DesignSample, spec: ConeSpecVector, K: int = 256, refine_iters: int = 200,
                   seed: int = 0, params: bd.BoundParams | None = None) -> ReCertificate:
    """Empirical ``κ̂`` on the realised design plus the cone lower bound.

    The bound is :func:`bounds.vector_cone_re_bound`; ``violations`` counts
    refined points breaking the pointwise inequality the bound rests on.
    """
    sig = sample.sigma_s
    smax = spectral_term(sample.E_D, sig)
    bound = bd.vector_cone_re_bound(
        spec.supports.s, spec.supports.o, spec.c, spec.gamma, sample.n, sample.p,
        varrho(sig), float(np.linalg.eigvalsh(sig).min()), smax, params)
    if spec.degenerate:
        return ReCertificate(math.inf, bound, math.inf, 0, 0, 0)
    X = sample.X_norm
    V = _starting_points(X, spec, K, stream(seed, "cone-sampler"))
    V, F, acc = _refine_vector(X, _cone_weights(spec), V, refine_iters)
    b, t = _split(V, spec.p)
    rep = check_theorem_pointwise(sample, (b, t), "special" if params is None else params, smax)
    k = int(np.argmin(F))
    kappa = float(np.sqrt(max(F[k], 0.0)))
    return ReCertificate(kappa, bound, kappa - bound, K, acc, rep.violations,
                         AugmentedPoint(b[k], t[k]))


# ------------------------------------------------------------- lemma machinery


def _sigma_norms(Bm: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(np.einsum("ki,ij,kj->k", Bm, sigma, Bm), 0.0))


def _check_v1(sigma: np.ndarray, r1: float) -> None:
    if not varrho(sigma) * r1 >= 1.0 - 1e-12:
        raise InvalidInputError(f"V1({r1}) is empty: need r1 * varrho >= 1")


def _check_v(sigma: np.ndarray, r1: float, r2: float) -> None:
    if not (varrho(sigma) * r1) ** 2 + r2 ** 2 >= 1.0 - 1e-12:
        raise InvalidInputError(f"V({r1}, {r2}) is empty: need (r1 varrho)^2 + r2^2 >= 1")


def sample_v1(sigma: np.ndarray, r1: float, K: int, rng: np.random.Generator) -> np.ndarray:
    """``K`` points with ``‖Σ^{1/2}b‖₂ = 1`` and ``‖b‖₁ ≤ r₁``.

    Normalised Gaussians are accepted when feasible. If fewer than 1% pass,
    points are built as ``±e_j + s z`` around the anchor ``j = argmax Σ_jj``
    (the coordinate with the smallest ℓ₁/ellipse ratio), with ``s`` found by
    bisection so that the normalised point is feasible.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_v1(sigma, r1)
    p = sigma.shape[0]
    pilot = rng.standard_normal((max(4 * K, 256), p))
    q = _sigma_norms(pilot, sigma)
    good = q > 0
    Bn = pilot[good] / q[good, None]
    ok = np.abs(Bn).sum(axis=1) <= r1
    if ok.mean() >= 0.01:
        got = [Bn[ok]]
        total = int(ok.sum())
        while total < K:
            Z = rng.standard_normal((max(4 * K, 256), p))
            q = _sigma_norms(Z, sigma)
            Z = Z[q > 0] / q[q > 0, None]
            Z = Z[np.abs(Z).sum(axis=1) <= r1]
            got.append(Z)
            total += len(Z)
        return np.concatenate(got)[:K]
    d = np.diag(sigma)
    j = int(np.argmax(d))
    Z = rng.standard_normal((K, p))
    Z[:, j] = 0.0
    anchor = np.zeros((K, p))
    anchor[:, j] = rng.choice([-1.0, 1.0], size=K)

    def ratio(s):
        Bs = anchor + s[:, None] * Z
        return np.abs(Bs).sum(axis=1) / np.maximum(_sigma_norms(Bs, sigma), 1e-300)

    lo = np.zeros(K)
    hi = np.ones(K)
    for _ in range(60):
        bad = ratio(hi) <= r1
        if not bad.any():
            break
        hi = np.where(bad, hi * 2, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        feas = ratio(mid) <= r1
        lo = np.where(feas, mid, lo)
        hi = np.where(feas, hi, mid)
    s = lo * rng.uniform(0.5, 1.0, size=K)
    s = np.where(ratio(s) <= r1, s, lo)
    Bs = anchor + s[:, None] * Z
    return Bs / _sigma_norms(Bs, sigma)[:, None]


def _soft(U, lam):
    return np.sign(U) * np.maximum(np.abs(U) - lam, 0.0)


def _theta_step(U: np.ndarray, R: np.ndarray, r2: float) -> np.ndarray:
    """Rows maximising ``u·θ`` over ``‖θ‖₂ = R``, ``‖θ‖₁ ≤ r₂`` (``R ≤ r₂``)."""
    K, n = U.shape
    norm = np.linalg.norm(U, axis=1)
    zero = norm == 0
    U = np.where(zero[:, None], np.eye(1, n)[0][None, :], U)
    lo = np.zeros(K)
    hi = np.abs(U).max(axis=1)

    def theta_at(lam):
        S = _soft(U, lam[:, None])
        ns = np.linalg.norm(S, axis=1, keepdims=True)
        return R[:, None] * S / np.where(ns > 0, ns, 1.0)

    feas0 = np.abs(theta_at(lo)).sum(axis=1) <= r2 * (1 + 1e-12)
    hi = np.where(feas0, 0.0, hi * (1 - 1e-12))
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        feas = np.abs(theta_at(mid)).sum(axis=1) <= r2
        hi = np.where(feas, mid, hi)
        lo = np.where(feas, lo, mid)
    th = theta_at(hi)
    top = np.zeros_like(U)
    top[np.arange(K), np.argmax(np.abs(U), axis=1)] = 1.0
    top *= np.sign(U) * R[:, None]
    bad = np.abs(th).sum(axis=1) > r2 * (1 + 1e-9)
    return np.where(bad[:, None], top, th)


def _b_step(V: np.ndarray, a: np.ndarray, r1: float, sigma: np.ndarray, pinv: np.ndarray,
            diagonal: bool) -> np.ndarray:
    """Feasible rows approximately maximising ``v·b`` over ``‖Σ^{1/2}b‖ = a, ‖b‖₁ ≤ r₁``.

    Exact (weighted soft-thresholding) for diagonal ``Σ``; a feasible
    heuristic otherwise. Falls back to the scaled anchor coordinate.
    """
    K, p = V.shape
    d = np.diag(sigma)
    j = int(np.argmax(d))
    anchor = np.zeros((K, p))
    anchor[:, j] = np.where(V[:, j] >= 0, 1.0, -1.0) * a / math.sqrt(d[j]) if d[j] > 0 else 0.0
    if diagonal:
        pos = d > 0
        omega = np.where(pos, 1.0 / np.sqrt(np.where(pos, d, 1.0)), 0.0)
        Uc = np.where(pos, V * omega, 0.0)

        def b_at(lam):
            C = np.sign(Uc) * np.maximum(np.abs(Uc) - lam[:, None] * omega, 0.0)
            nc = np.linalg.norm(C, axis=1, keepdims=True)
            C = a[:, None] * C / np.where(nc > 0, nc, 1.0)
            return C * omega
        hi = np.where(omega > 0, np.abs(Uc) / np.where(omega > 0, omega, 1.0), 0.0).max(axis=1)
    else:
        D = V @ pinv

        def b_at(lam):
            C = _soft(D, lam[:, None])
            nc = _sigma_norms(C, sigma)[:, None]
            return a[:, None] * C / np.where(nc > 0, nc, 1.0)
        hi = np.abs(D).max(axis=1)

    def feasible(Bm):
        live = _sigma_norms(Bm, sigma) > 0.5 * a
        return (np.abs(Bm).sum(axis=1) <= r1) & (live | (a == 0))

    lo = np.zeros(K)
    hi = hi * (1 - 1e-12)
    f0 = feasible(b_at(lo))
    hi = np.where(f0, 0.0, hi)
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        f = feasible(b_at(mid))
        hi = np.where(f, mid, hi)
        lo = np.where(f, lo, mid)
    Bm = b_at(hi)
    ok = feasible(Bm) & (np.abs(_sigma_norms(Bm, sigma) - a) <= 1e-9 * np.maximum(a, 1))
    better = (Bm * V).sum(axis=1) >= (anchor * V).sum(axis=1)
    return np.where((ok & better)[:, None], Bm, anchor)


def sup_bilinear(G: np.ndarray, sigma: np.ndarray, r1: float, r2: float, K: int,
                 rng: np.random.Generator, alt_iters: int = 30) -> float:
    """Sampled ``sup θᵀ G b`` over ``V(r₁, r₂)`` by alternating maximisation.

    ``K`` starts spread over a grid of splits ``a = ‖Σ^{1/2}b‖₂``,
    ``‖θ‖₂ = √(1 − a²)``. Every evaluated pair is feasible, so the result
    never exceeds the true supremum.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_v(sigma, r1, r2)
    n, p = G.shape
    rho_s = varrho(sigma)
    a_lo = math.sqrt(max(0.0, 1.0 - r2 ** 2))
    a_hi = min(1.0, r1 * rho_s)
    grid = np.linspace(a_lo, a_hi, min(K, 9)) if a_hi > a_lo else np.array([a_hi])
    a = grid[np.arange(K) % len(grid)]
    R = np.sqrt(np.maximum(1.0 - a ** 2, 0.0))
    R = np.minimum(R, r2)
    diagonal = np.count_nonzero(sigma - np.diag(np.diag(sigma))) == 0
    pinv = np.linalg.pinv(sigma)
    T = _theta_step(rng.standard_normal((K, n)), R, r2)
    best = -math.inf
    for _ in range(alt_iters):
        Bm = _b_step(T @ G, a, r1, sigma, pinv, diagonal)
        T = _theta_step(Bm @ G.T, R, r2)
        val = float((T * (Bm @ G.T)).sum(axis=1).max())
        if val <= best + 1e-9 * abs(best):
            best = max(best, val)
            break
        best = val
    return best


def splitting_diagnostics(sample: DesignSample, r1: float, r2: float, K: int = 64,
                          seed: int = 0) -> SplittingDiagnostics:
    """Sampled ``I₁`` over ``V₁(√2 r₁)``, sampled ``I₂`` over ``V(r₁, r₂)``, and

    ``rhs = min(I₁, 1)/√2 − √(2 I₂) − σ_max(E_D Σ_S^{†/2})/√n``.

    ``I₁`` is over-estimated and ``I₂`` under-estimated, so ``rhs`` is a
    diagnostic and not a certified bound.
    """
    sig = sample.sigma_s
    _check_v(sig, r1, r2)
    G = sample.X_R / math.sqrt(sample.n)
    rng = stream(seed, "cone-sampler")
    Bv = sample_v1(sig, math.sqrt(2.0) * r1, K, rng)
    I1 = float(np.linalg.norm(Bv @ G.T, axis=1).min())
    I2 = sup_bilinear(G, sig, r1, r2, K, rng)
    spec_term = spectral_term(sample.E_D, sig) / math.sqrt(sample.n)
    rhs = min(I1, 1.0) / math.sqrt(2.0) - math.sqrt(2.0 * max(I2, 0.0)) - spec_term
    return SplittingDiagnostics(I1, I2, spec_term, rhs)


def _sigma_matrix(cov_S) -> tuple[CovarianceSpec, np.ndarray]:
    if isinstance(cov_S, CovarianceSpec):
        return cov_S, cov_S.to_matrix()
    M = np.asarray(cov_S, dtype=float)
    return CovarianceSpec.dense(M), M


@dataclass(frozen=True)
class Aux1Result:
    trials: int
    violations: int
    frequency: float
    bound: float
    probability_bound: float
    slack: float
    passed: bool
    min_sampled_inf: float


@dataclass(frozen=True)
class Aux2Result:
    trials: int
    mean: float
    std_error: float
    bound: float
    passed: bool
    values: tuple[float, ...] = ()


def aux1_trial(p: int, n: int, cov: CovarianceSpec, sig: np.ndarray, r1: float, K: int,
               seed: int, trial: int) -> float:
    """Sampled ``inf_{V₁(r₁)} ‖X_ℛ^{(n)} b‖₂`` for one fresh design."""
    G = cov.sample_rows(n, stream(seed, "Y", trial)) / math.sqrt(n)
    Bv = sample_v1(sig, r1, K, stream(seed, "cone-sampler", trial))
    return float(np.linalg.norm(Bv @ G.T, axis=1).min())


def aux2_trial(p: int, n: int, cov: CovarianceSpec, sig: np.ndarray, r1: float, r2: float,
               K: int, seed: int, trial: int) -> float:
    G = cov.sample_rows(n, stream(seed, "Y", trial)) / math.sqrt(n)
    return sup_bilinear(G, sig, r1, r2, K, stream(seed, "cone-sampler", trial))


def _check_shape(cov: CovarianceSpec, p: int):
    if cov.p != p:
        raise InvalidInputError(f"covariance dimension {cov.p} != p = {p}")


def summarize_aux1(values: Sequence[float], n: int, p: int, t: float, r1: float,
                   rho_s: float) -> Aux1Result:
    bound = bd.lemma_aux1_bound(n, p, t, r1, rho_s)
    vals = np.asarray(values, dtype=float)
    T = len(vals)
    viol = int((vals < bound).sum())
    q = min(1.0, math.exp(-n * t ** 2 / 2.0))
    slack = 3.0 * math.sqrt(q * (1 - q) / T)
    freq = viol / T
    return Aux1Result(T, viol, freq, bound, q, slack, freq <= q + slack, float(vals.min()))


def summarize_aux2(values: Sequence[float], n: int, p: int, r1: float, r2: float,
                   rho_s: float) -> Aux2Result:
    bound = bd.lemma_aux2_bound(n, p, r1, r2, rho_s)
    vals = np.asarray(values, dtype=float)
    T = len(vals)
    se = float(vals.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
    mean = float(vals.mean())
    return Aux2Result(T, mean, se, bound, mean <= bound + 3.0 * se, tuple(float(v) for v in vals))


def verify_lemma_aux1(p: int, n: int, cov_S, t: float, r1: float, trials: int, K: int = 64,
                      seed: int = 0) -> Aux1Result:
    """One-sided check of the high-probability lower bound on ``inf_{V₁(r₁)} ‖X_ℛ^{(n)} b‖₂``.

    A trial violates when its sampled infimum is below the bound; because
    the sampled infimum is at least the true one, the observed frequency
    must stay below ``e^{−nt²/2}`` plus three binomial standard errors.
    """
    if n < 10:
        raise InvalidInputError("n must be >= 10")
    if trials < 1 or K < 1:
        raise InvalidInputError("trials and K must be >= 1")
    cov, sig = _sigma_matrix(cov_S)
    _check_shape(cov, p)
    _check_v1(sig, r1)
    vals = [aux1_trial(p, n, cov, sig, r1, K, seed, i) for i in range(trials)]
    return summarize_aux1(vals, n, p, t, r1, varrho(sig))


def verify_lemma_aux2(p: int, n: int, cov_S, r1: float, r2: float, trials: int, K: int = 32,
                      seed: int = 0) -> Aux2Result:
    """One-sided check of the expectation bound on ``sup_{V(r₁,r₂)} θᵀ X_ℛ^{(n)} b``.

    Passes when the mean sampled supremum is at most the bound plus three
    standard errors.
    """
    if trials < 1 or K < 1:
        raise InvalidInputError("trials and K must be >= 1")
    cov, sig = _sigma_matrix(cov_S)
    _check_shape(cov, p)
    _check_v(sig, r1, r2)
    vals = [aux2_trial(p, n, cov, sig, r1, r2, K, seed, i) for i in range(trials)]
    return summarize_aux2(vals, n, p, r1, r2, varrho(sig))
