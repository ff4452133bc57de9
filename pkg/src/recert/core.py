"""Mixed norms, support restrictions and augmented dimension-reduction cones.

All index sets handed to the public types are 1-based, as in the usual
statistical notation ``S ⊆ {1..p}``, ``O ⊆ {1..n}``. Internally they are
converted to boolean masks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MEMBERSHIP_RTOL = 1e-12


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


def _as_index_set(indices: Iterable[int], upper: int, name: str) -> frozenset[int]:
    out = set()
    for i in indices:
        if int(i) != i:
            raise InvalidInputError(f"{name}: non-integer index {i!r}")
        i = int(i)
        if not 1 <= i <= upper:
            raise InvalidInputError(f"{name}: index {i} outside 1..{upper}")
        out.add(i)
    return frozenset(out)


def index_mask(indices: Iterable[int], size: int) -> np.ndarray:
    """Boolean mask of length ``size`` for a 1-based index set."""
    mask = np.zeros(size, dtype=bool)
    idx = np.fromiter((i - 1 for i in indices), dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= size):
        raise InvalidInputError(f"index out of range 1..{size}")
    mask[idx] = True
    return mask


@dataclass(frozen=True)
class SupportSetVector:
    """Parameter support ``S ⊆ {1..p}`` and outlier set ``O ⊆ {1..n}``."""

    S: frozenset[int]
    O: frozenset[int]
    p: int
    n: int

    def __init__(self, S: Iterable[int], O: Iterable[int], p: int, n: int):
        if p < 1 or n < 1:
            raise InvalidInputError("p and n must be positive")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "S", _as_index_set(S, p, "S"))
        object.__setattr__(self, "O", _as_index_set(O, n, "O"))

    @property
    def s(self) -> int:
        return len(self.S)

    @property
    def o(self) -> int:
        return len(self.O)

    def s_mask(self) -> np.ndarray:
        return index_mask(self.S, self.p)

    def o_mask(self) -> np.ndarray:
        return index_mask(self.O, self.n)


@dataclass(frozen=True)
class SupportCollection:
    """A collection ``{J_1, ..., J_p}`` of subsets of ``{1..p}``.

    Entry ``(i, j)`` of a p×p matrix is "on support" iff ``i ∈ J_j``.
    """

    J: tuple[frozenset[int], ...]

    def __init__(self, J: Sequence[Iterable[int]]):
        p = len(J)
        if p < 1:
            raise InvalidInputError("support collection must have p >= 1 entries")
        sets = tuple(_as_index_set(Jj, p, f"J_{j + 1}") for j, Jj in enumerate(J))
        object.__setattr__(self, "J", sets)

    @property
    def p(self) -> int:
        return len(self.J)

    @property
    def size(self) -> int:
        """``|𝒥| = Σ_j |J_j|``."""
        return sum(len(Jj) for Jj in self.J)

    def mask(self) -> np.ndarray:
        p = self.p
        m = np.zeros((p, p), dtype=bool)
        for j, Jj in enumerate(self.J):
            for i in Jj:
                m[i - 1, j] = True
        return m

    def complement(self) -> "SupportCollection":
        full = set(range(1, self.p + 1))
        return SupportCollection([full - Jj for Jj in self.J])


@dataclass(frozen=True)
class ConeSpecVector:
    """Augmented cone ``γ‖b_{S^c}‖₁ + ‖θ_{O^c}‖₁ ≤ c(γ‖b_S‖₁ + ‖θ_O‖₁)``.

    The intended regime is ``c > 1``; any ``c > 0`` is accepted.
    """

    supports: SupportSetVector
    c: float
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise InvalidInputError(f"cone constant c must be > 0, got {self.c}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be > 0, got {self.gamma}")

    @classmethod
    def build(cls, S, O, p: int, n: int, c: float, gamma: float) -> "ConeSpecVector":
        return cls(SupportSetVector(S, O, p, n), float(c), float(gamma))

    @property
    def p(self) -> int:
        return self.supports.p

    @property
    def n(self) -> int:
        return self.supports.n

    @property
    def degenerate(self) -> bool:
        """True when ``S = O = ∅``, i.e. the cone is ``{0}``."""
        return not self.supports.S and not self.supports.O


@dataclass(frozen=True)
class ConeSpecMatrix:
    """Matrix cone ``γ‖B_{𝒥^c}‖₁,₁ + ‖Θ_{O^c,•}‖₂,₁ ≤ c(γ‖B_𝒥‖₁,₁ + ‖Θ_{O,•}‖₂,₁)``."""

    collection: SupportCollection
    O: frozenset[int]
    n: int
    c: float
    gamma: float

    def __init__(self, collection: SupportCollection, O: Iterable[int], n: int,
                 c: float, gamma: float):
        if not (np.isfinite(c) and c > 0):
            raise InvalidInputError(f"cone constant c must be > 0, got {c}")
        if not (np.isfinite(gamma) and gamma > 0):
            raise InvalidInputError(f"gamma must be > 0, got {gamma}")
        object.__setattr__(self, "collection", collection)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "O", _as_index_set(O, n, "O"))
        object.__setattr__(self, "c", float(c))
        object.__setattr__(self, "gamma", float(gamma))

    @property
    def p(self) -> int:
        return self.collection.p

    def o_mask(self) -> np.ndarray:
        return index_mask(self.O, self.n)


@dataclass(frozen=True, eq=False)
class AugmentedPoint:
    """A point ``[b; θ]`` of the augmented space ``R^{p+n}``."""

    b: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        if b.ndim != 1 or theta.ndim != 1:
            raise InvalidInputError("b and theta must be vectors")
        b.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "theta", theta)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.b, self.theta])

    def norm(self) -> float:
        return float(np.sqrt(self.b @ self.b + self.theta @ self.theta))

    def scaled(self, factor: float) -> "AugmentedPoint":
        return AugmentedPoint(factor * self.b, factor * self.theta)


@dataclass(frozen=True, eq=False)
class AugmentedMatrixPoint:
    """A point ``[B; Θ]`` with ``B`` p×p and ``Θ`` n×p."""

    B: np.ndarray
    Theta: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        Theta = np.asarray(self.Theta, dtype=float)
        if B.ndim != 2 or Theta.ndim != 2 or B.shape[1] != Theta.shape[1]:
            raise InvalidInputError("B and Theta must be matrices with equal column counts")
        B.setflags(write=False)
        Theta.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Theta", Theta)


# --------------------------------------------------------------------------- norms


def mixed_norm(A, q1: float, q2: float) -> float:
    """``‖A‖_{q1,q2} = (Σ_i ‖A_{i,•}‖_{q1}^{q2})^{1/q2}``, rows first.

    ``q = inf`` means max. ``mixed_norm(A, 2, 2)`` is the Frobenius norm.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.size == 0:
        raise InvalidInputError("mixed_norm of an empty matrix")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("mixed_norm: non-finite entries")
    if q1 <= 0 or q2 <= 0:
        raise InvalidInputError("mixed-norm exponents must be positive")
    absA = np.abs(A)
    if np.isinf(q1):
        rows = absA.max(axis=1)
    else:
        rows = (absA ** q1).sum(axis=1) ** (1.0 / q1)
    if np.isinf(q2):
        return float(rows.max())
    return float((rows ** q2).sum() ** (1.0 / q2))


def restrict_vector(b, S: Iterable[int]) -> np.ndarray:
    """Return ``b_S``: a copy of ``b`` with coordinates outside ``S`` zeroed."""
    b = np.asarray(b, dtype=float)
    mask = index_mask(S, b.shape[0])
    return np.where(mask, b, 0.0)


def restrict_matrix(A, collection: SupportCollection) -> np.ndarray:
    """Return ``A_𝒥``: keep ``A[i, j]`` iff ``i ∈ J_j``."""
    A = np.asarray(A, dtype=float)
    p = collection.p
    if A.shape != (p, p):
        raise InvalidInputError(f"expected a {p}x{p} matrix, got {A.shape}")
    return np.where(collection.mask(), A, 0.0)


# ------------------------------------------------------------------------ cones


def _membership_tol(scale: float) -> float:
    return MEMBERSHIP_RTOL * scale


def vector_cone_parts(b, theta, spec: ConeSpecVector) -> tuple[np.ndarray, np.ndarray]:
    """On-support and off-support ℓ₁ mass, vectorised over leading axes.

    ``b`` has shape ``(..., p)`` and ``theta`` ``(..., n)``. Returns
    ``(on, off)`` with ``on = γ‖b_S‖₁ + ‖θ_O‖₁`` and ``off`` its complement.
    """
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if b.shape[-1] != spec.p or theta.shape[-1] != spec.n:
        raise InvalidInputError(
            f"point dimensions ({b.shape[-1]}, {theta.shape[-1]}) do not match "
            f"cone ({spec.p}, {spec.n})")
    sm = spec.supports.s_mask()
    om = spec.supports.o_mask()
    ab, at = np.abs(b), np.abs(theta)
    on = spec.gamma * ab[..., sm].sum(axis=-1) + at[..., om].sum(axis=-1)
    off = spec.gamma * ab[..., ~sm].sum(axis=-1) + at[..., ~om].sum(axis=-1)
    return on, off


def cone_margin_vector(point: AugmentedPoint, spec: ConeSpecVector) -> float:
    """``c(γ‖b_S‖₁ + ‖θ_O‖₁) − (γ‖b_{S^c}‖₁ + ‖θ_{O^c}‖₁)``; member iff ≥ 0."""
    on, off = vector_cone_parts(point.b, point.theta, spec)
    return float(spec.c * on - off)


def is_cone_member_vector(point: AugmentedPoint, spec: ConeSpecVector) -> bool:
    on, off = vector_cone_parts(point.b, point.theta, spec)
    return bool(spec.c * on - off >= -_membership_tol(spec.c * on + off))


def matrix_cone_parts(B, Theta, spec: ConeSpecMatrix) -> tuple[np.ndarray, np.ndarray]:
    """On/off parts of the matrix cone, vectorised over leading axes."""
    B = np.asarray(B, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    p, n = spec.p, spec.n
    if B.shape[-2:] != (p, p) or Theta.shape[-2:] != (n, p):
        raise InvalidInputError(
            f"expected B {p}x{p} and Theta {n}x{p}, got {B.shape[-2:]} and {Theta.shape[-2:]}")
    jm = spec.collection.mask()
    om = spec.o_mask()
    aB = np.abs(B)
    rows = np.sqrt((Theta ** 2).sum(axis=-1))
    on = spec.gamma * (aB * jm).sum(axis=(-2, -1)) + rows[..., om].sum(axis=-1)
    off = spec.gamma * (aB * ~jm).sum(axis=(-2, -1)) + rows[..., ~om].sum(axis=-1)
    return on, off


def cone_margin_matrix(point: AugmentedMatrixPoint, spec: ConeSpecMatrix) -> float:
    """``c(γ‖B_𝒥‖₁,₁ + ‖Θ_{O,•}‖₂,₁) − (γ‖B_{𝒥^c}‖₁,₁ + ‖Θ_{O^c,•}‖₂,₁)``."""
    on, off = matrix_cone_parts(point.B, point.Theta, spec)
    return float(spec.c * on - off)


def is_cone_member_matrix(point: AugmentedMatrixPoint, spec: ConeSpecMatrix) -> bool:
    on, off = matrix_cone_parts(point.B, point.Theta, spec)
    return bool(spec.c * on - off >= -_membership_tol(spec.c * on + off))
