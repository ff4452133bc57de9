"""Corrupted Gaussian designs ``X = Y + E_D + E_R`` and robust-Lasso responses.

Randomness
----------
Every random draw comes from a PCG64 generator seeded by
``SeedSequence(master_seed, spawn_key=(crc32(label), *extra))``. The labels in
use are ``"Y"``, ``"ER"``, ``"noise"`` and ``"cone-sampler"``; the optional
``extra`` integers carry a trial index. Streams with different labels are
statistically independent, so e.g. changing how ``E_R`` is drawn leaves ``Y``
bit-identical.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import InvalidInputError, index_mask

EIG_CLAMP_RTOL = 1e-12
STREAM_LABELS = ("Y", "ER", "noise", "cone-sampler")


def stream(seed: int, label: str, *extra: int) -> np.random.Generator:
    """Independent generator for ``(seed, label, *extra)``."""
    if seed < 0:
        raise InvalidInputError("seeds must be non-negative integers")
    key = (zlib.crc32(label.encode("utf-8")),) + tuple(int(e) for e in extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


class CovarianceError(InvalidInputError):
    """The covariance is not symmetric positive semidefinite."""


def _symmetric_root(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition-based PSD square root, clamping tiny negative eigenvalues."""
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise CovarianceError("covariance matrix is not symmetric")
    w, V = np.linalg.eigh((M + M.T) / 2)
    top = max(float(w.max()), 0.0)
    if w.min() < -EIG_CLAMP_RTOL * max(top, np.finfo(float).tiny):
        raise CovarianceError(f"covariance is not PSD (smallest eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T, w


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """A p×p covariance: identity, diagonal, AR(1) or an explicit dense matrix.

    ``identity`` never materialises a matrix unless asked to, which keeps the
    closed-form quantities (diagonal maximum, smallest eigenvalue) usable at
    dimensions where a dense p×p array is out of the question.
    """

    kind: str
    p: int
    diag: Optional[np.ndarray] = None
    phi: Optional[float] = None
    matrix: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.p < 1:
            raise InvalidInputError("covariance dimension must be >= 1")
        if self.kind == "identity":
            pass
        elif self.kind == "diagonal":
            d = np.asarray(self.diag, dtype=float)
            if d.shape != (self.p,):
                raise InvalidInputError(f"diagonal must have length {self.p}")
            if np.any(d < 0) or not np.all(np.isfinite(d)):
                raise CovarianceError("diagonal covariance entries must be finite and >= 0")
            object.__setattr__(self, "diag", d)
        elif self.kind == "ar1":
            if self.phi is None or not -1 < self.phi < 1:
                raise InvalidInputError(f"ar1 coefficient must lie in (-1, 1), got {self.phi}")
        elif self.kind == "dense":
            M = np.asarray(self.matrix, dtype=float)
            if M.shape != (self.p, self.p):
                raise InvalidInputError(f"dense covariance must be {self.p}x{self.p}")
            if not np.all(np.isfinite(M)) or np.any(np.diag(M) < 0):
                raise CovarianceError("dense covariance must be finite with nonnegative diagonal")
            object.__setattr__(self, "matrix", M)
            self.root()  # validates PSD at construction
        else:
            raise InvalidInputError(f"unknown covariance kind {self.kind!r}")

    @classmethod
    def identity(cls, p: int) -> "CovarianceSpec":
        return cls("identity", p)

    @classmethod
    def diagonal(cls, d) -> "CovarianceSpec":
        d = np.asarray(d, dtype=float)
        return cls("diagonal", d.shape[0], diag=d)

    @classmethod
    def ar1(cls, p: int, phi: float) -> "CovarianceSpec":
        return cls("ar1", p, phi=float(phi))

    @classmethod
    def dense(cls, M) -> "CovarianceSpec":
        M = np.asarray(M, dtype=float)
        return cls("dense", M.shape[0], matrix=M)

    def is_diagonal(self) -> bool:
        return self.kind in ("identity", "diagonal")

    def diagonal_entries(self) -> np.ndarray:
        if self.kind == "identity":
            return np.ones(self.p)
        if self.kind == "diagonal":
            return self.diag.copy()
        if self.kind == "ar1":
            return np.ones(self.p)
        return np.diag(self.matrix).copy()

    def max_diagonal(self) -> float:
        if self.kind in ("identity", "ar1"):
            return 1.0
        return float(self.diagonal_entries().max())

    def to_matrix(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.p)
        if self.kind == "diagonal":
            return np.diag(self.diag)
        if self.kind == "ar1":
            idx = np.arange(self.p)
            return self.phi ** np.abs(idx[:, None] - idx[None, :])
        return self.matrix.copy()

    def _eig(self):
        if "root" not in self._cache:
            root, w = _symmetric_root(self.to_matrix())
            self._cache["root"] = root
            self._cache["eig"] = w
        return self._cache["root"], self._cache["eig"]

    def root(self) -> np.ndarray:
        """Cached factor ``L`` with ``L Lᵀ = Σ`` (the symmetric PSD root)."""
        if self.kind == "identity":
            return np.eye(self.p)
        if self.kind == "diagonal":
            return np.diag(np.sqrt(self.diag))
        return self._eig()[0]

    def min_eigenvalue(self) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "diagonal":
            return float(self.diag.min())
        return float(self._eig()[1].min())

    def sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` i.i.d. ``N(0, Σ)`` rows as ``z Lᵀ``."""
        z = rng.standard_normal((n, self.p))
        if self.kind == "identity":
            return z
        if self.kind == "diagonal":
            return z * np.sqrt(self.diag)
        return z @ self.root().T


@dataclass(frozen=True, eq=False)
class ContaminationSpec:
    """Outlier set ``O`` (1-based) plus deterministic and random corruption.

    ``deterministic`` is ``"none"``, ``"constant_row"`` (row ``μ_E`` on every
    outlier row, zero elsewhere) or ``"explicit"`` (a full n×p ``E_D``).
    ``random_cov`` is ``Σ_E`` for the Gaussian part ``E_R``; ``None`` means
    ``E_R = 0``.
    """

    O: frozenset = frozenset()
    deterministic: str = "none"
    mu: Optional[np.ndarray] = None
    E_D: Optional[np.ndarray] = None
    random_cov: Optional[CovarianceSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "O", frozenset(int(i) for i in self.O))
        if self.deterministic not in ("none", "constant_row", "explicit"):
            raise InvalidInputError(f"unknown deterministic contamination {self.deterministic!r}")
        if self.deterministic == "constant_row" and self.mu is None:
            raise InvalidInputError("constant_row contamination needs mu")
        if self.deterministic == "explicit" and self.E_D is None:
            raise InvalidInputError("explicit contamination needs E_D")

    def deterministic_matrix(self, n: int, p: int) -> np.ndarray:
        if self.deterministic == "none":
            return np.zeros((n, p))
        if self.deterministic == "constant_row":
            mu = np.asarray(self.mu, dtype=float)
            if mu.shape != (p,):
                raise InvalidInputError(f"mu must have length {p}")
            rows = index_mask(self.O, n)
            return np.where(rows[:, None], mu[None, :], 0.0)
        E = np.asarray(self.E_D, dtype=float)
        if E.shape != (n, p):
            raise InvalidInputError(f"explicit E_D must be {n}x{p}, got {E.shape}")
        return E.copy()


@dataclass(frozen=True, eq=False)
class DesignSample:
    Y: np.ndarray
    E_D: np.ndarray
    E_R: np.ndarray
    X: np.ndarray
    X_norm: np.ndarray
    sigma_s: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def X_R(self) -> np.ndarray:
        """The randomised design ``Y + E_R``."""
        return self.Y + self.E_R


def sample_design(p: int, n: int, cov: CovarianceSpec, contamination: ContaminationSpec | None = None,
                  seed: int = 0, trial: int | None = None) -> DesignSample:
    """Draw ``(Y, E_D, E_R, X, X/√n, Σ_S)`` under the random contamination model."""
    if p < 1 or n < 1:
        raise InvalidInputError("p and n must be >= 1")
    if cov.p != p:
        raise InvalidInputError(f"covariance dimension {cov.p} != p = {p}")
    contamination = contamination or ContaminationSpec()
    extra = () if trial is None else (trial,)
    if contamination.deterministic != "none" and cov.min_eigenvalue() <= 0:
        raise InvalidInputError("deterministic contamination requires a non-singular covariance")
    Y = cov.sample_rows(n, stream(seed, "Y", *extra))
    E_D = contamination.deterministic_matrix(n, p)
    if contamination.random_cov is not None:
        if contamination.random_cov.p != p:
            raise InvalidInputError("contamination covariance dimension mismatch")
        E_R = contamination.random_cov.sample_rows(n, stream(seed, "ER", *extra))
    else:
        E_R = np.zeros((n, p))
    X = Y + E_D + E_R
    return DesignSample(Y=Y, E_D=E_D, E_R=E_R, X=X, X_norm=X / np.sqrt(n),
                        sigma_s=sigma_s(cov, contamination.random_cov), seed=seed)


def sigma_s(cov: CovarianceSpec | np.ndarray, cov_E: CovarianceSpec | np.ndarray | None = None) -> np.ndarray:
    """``Σ_S = Σ + Σ_E``; returns ``Σ`` when ``Σ_E`` is absent."""
    S = cov.to_matrix() if isinstance(cov, CovarianceSpec) else np.asarray(cov, dtype=float)
    if cov_E is None:
        return S
    SE = cov_E.to_matrix() if isinstance(cov_E, CovarianceSpec) else np.asarray(cov_E, dtype=float)
    if SE.shape != S.shape:
        raise InvalidInputError(f"dimension mismatch: {S.shape} vs {SE.shape}")
    return S + SE


def varrho(sigma: np.ndarray) -> float:
    """Square root of the largest diagonal entry."""
    d = np.diag(np.asarray(sigma, dtype=float))
    if d.size == 0:
        raise InvalidInputError("empty matrix")
    if np.any(d < 0):
        raise InvalidInputError("negative diagonal entry")
    return float(np.sqrt(d.max()))


def pseudo_inverse_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of the symmetric PSD square root of ``sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
        raise InvalidInputError("matrix is not symmetric")
    w, V = np.linalg.eigh((sigma + sigma.T) / 2)
    top = max(float(w.max()), 0.0)
    keep = w > EIG_CLAMP_RTOL * top if top > 0 else np.zeros_like(w, dtype=bool)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (V * inv) @ V.T


def spectral_term(E_D: np.ndarray, sigma: np.ndarray) -> float:
    """``σ_max(E_D Σ_S^{†/2})`` (not normalised by √n)."""
    E_D = np.asarray(E_D, dtype=float)
    if not np.any(E_D):
        return 0.0
    return float(np.linalg.norm(E_D @ pseudo_inverse_sqrt(sigma), 2))


def sample_response(X_norm: np.ndarray, b_star, theta_star, noise_sd: float, seed: int,
                    trial: int | None = None) -> np.ndarray:
    """``y = X_norm b* − θ* + w`` with ``w ~ N(0, noise_sd² I)``."""
    X_norm = np.asarray(X_norm, dtype=float)
    b_star = np.asarray(b_star, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    n, p = X_norm.shape
    if b_star.shape != (p,) or theta_star.shape != (n,):
        raise InvalidInputError("dimension mismatch between X_norm, b* and θ*")
    if noise_sd < 0:
        raise InvalidInputError("noise_sd must be >= 0")
    extra = () if trial is None else (trial,)
    w = noise_sd * stream(seed, "noise", *extra).standard_normal(n) if noise_sd > 0 else np.zeros(n)
    return X_norm @ b_star - theta_star + w
