"""Closed-form lower bounds for ``‖X^{(n)} b − θ‖₂`` and the derived RE constants.

Two families are evaluated:

* the *general* bounds, parametrised by ``(ε, α, β, σ, τ)``;
* the *special* bounds with rounded constants ``0.24``, ``36``, ``33`` and
  the sample-size gate ``n ≥ 208``, which follow from the general ones at
  ``ε = 0.19, τ = 0.02, σ = 7.5, α = β = 20``.

Throughout, ``sigma_max_a`` denotes ``σ_max(E_D Σ_S^{†/2})`` *without* the
``1/√n`` normalisation; every formula divides by ``√n`` itself. Logarithms
are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import InvalidInputError
from .design import CovarianceSpec

SQRT2 = math.sqrt(2.0)

SPECIAL_LEAD = 0.24
SPECIAL_L1 = 36.0
SPECIAL_THETA = 33.0
SPECIAL_RATE = 1.0 / 297.0
SPECIAL_N_MIN = 208
PRIOR_RE_CONSTANT = 0.0625
COROLLARY_GAMMA_FACTOR = 1.1


@dataclass(frozen=True)
class BoundParams:
    epsilon: float
    alpha: float
    beta: float
    sigma: float
    tau: float

    def __post_init__(self):
        if not 0 < self.epsilon < 0.75:
            raise InvalidInputError(f"epsilon must lie in (0, 3/4), got {self.epsilon}")
        for name in ("alpha", "beta", "sigma", "tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be a positive number, got {v}")


REFERENCE_PARAMS = BoundParams(epsilon=0.19, alpha=20.0, beta=20.0, sigma=7.5, tau=0.02)


def mu_rho(params: BoundParams) -> tuple[float, float]:
    """``μ_ε = 1 − (3/4 − ε)/√2`` and ``ρ = (1 + τ)(1 + 1/σ)``."""
    mu = 1.0 - (0.75 - params.epsilon) / SQRT2
    rho = (1.0 + params.tau) * (1.0 + 1.0 / params.sigma)
    return mu, rho


def c_n(params: BoundParams, n: int, sigma_max_a: float = 0.0) -> float:
    """Lead constant ``C_n(A)`` for a matrix ``A`` with ``σ_max(A) = sigma_max_a``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    _, rho = mu_rho(params)
    eps = params.epsilon
    core = (0.75 - eps) / SQRT2 * (1.0 - math.exp(-n * eps ** 2 / 2.0)) - (1.0 - 1.0 / rho)
    return rho * core - (1.0 / (2 * params.alpha) + 1.0 / (2 * params.beta) + sigma_max_a / math.sqrt(n))


def c_infinity(params: BoundParams) -> float:
    """``lim_{n→∞} C_n(0)``."""
    _, rho = mu_rho(params)
    return rho * ((0.75 - params.epsilon) / SQRT2 - (1.0 - 1.0 / rho)) - (
        1.0 / (2 * params.alpha) + 1.0 / (2 * params.beta))


def l1_coefficient(params: BoundParams) -> float:
    """Multiplier of ``ϱ(Σ_S)‖b‖₁√(log p / n)``: ``ρ(2 + α√2)``."""
    _, rho = mu_rho(params)
    return rho * (2.0 + params.alpha * SQRT2)


def theta_coefficient(params: BoundParams) -> float:
    """Multiplier of ``‖θ‖₁√(log n / n)``: ``ρβ√2``."""
    _, rho = mu_rho(params)
    return rho * params.beta * SQRT2


def exponent_rate(params: BoundParams) -> float:
    """Rate ``(1+τ)²μ_ε²/(2σ²)`` in the failure probability ``2exp(−rate·n)``."""
    mu, _ = mu_rho(params)
    return (1.0 + params.tau) ** 2 * mu ** 2 / (2.0 * params.sigma ** 2)


def n_min_real(params: BoundParams) -> float:
    """Real-valued threshold ``2σ² log 2 / ((1+τ)²μ_ε²)``."""
    return math.log(2.0) / exponent_rate(params)


def n_min(params: BoundParams) -> int:
    return max(math.ceil(n_min_real(params)), 10)


def failure_probability(params: BoundParams, n: int) -> float:
    return min(1.0, max(0.0, 2.0 * math.exp(-exponent_rate(params) * n)))


def special_failure_probability(n: int) -> float:
    return min(1.0, 2.0 * math.exp(-n * SPECIAL_RATE))


@dataclass(frozen=True)
class BoundReport:
    mu_epsilon: float
    rho: float
    lead_constant: float
    l1_coefficient: float
    theta_coefficient: float
    n_min: int
    n_min_real: float
    failure_probability: float
    sample_size_ok: bool


def bound_report(params: BoundParams, n: int, sigma_max_a: float = 0.0) -> BoundReport:
    mu, rho = mu_rho(params)
    nm = n_min(params)
    return BoundReport(
        mu_epsilon=mu, rho=rho, lead_constant=c_n(params, n, sigma_max_a),
        l1_coefficient=l1_coefficient(params), theta_coefficient=theta_coefficient(params),
        n_min=nm, n_min_real=n_min_real(params),
        failure_probability=failure_probability(params, n), sample_size_ok=n >= nm)


# --------------------------------------------------------------- pointwise RHS


@dataclass(frozen=True)
class RhsResult:
    """Value(s) of a lower bound; ``sample_size_ok`` is False below the n gate."""

    value: np.ndarray | float
    sample_size_ok: bool


def _check_dims(n: int, p: int, b: np.ndarray, theta: np.ndarray, sigma: np.ndarray):
    if b.shape[-1] != p or theta.shape[-1] != n or b.shape[:-1] != theta.shape[:-1]:
        raise InvalidInputError(
            f"points must have shapes (..., {p}) and (..., {n}); got {b.shape}, {theta.shape}")
    if sigma.shape != (p, p):
        raise InvalidInputError(f"Σ_S must be {p}x{p}, got {sigma.shape}")


def _weighted_sq(b: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``bᵀ Σ b`` along the last axis (``= ‖Σ^{1/2} b‖²``)."""
    return np.maximum(((b @ sigma) * b).sum(axis=-1), 0.0)


def _vector_rhs(lead, a1, a2, n, p, varrho_s, b, theta, sigma):
    b = np.asarray(b, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_dims(n, p, b, theta, sigma)
    aug = np.sqrt(_weighted_sq(b, sigma) + (theta ** 2).sum(axis=-1))
    val = (lead * aug
           - a1 * varrho_s * np.abs(b).sum(axis=-1) * math.sqrt(math.log(p) / n)
           - a2 * np.abs(theta).sum(axis=-1) * math.sqrt(math.log(n) / n))
    return val if val.ndim else float(val)


def general_vector_rhs(params: BoundParams, n: int, p: int, varrho_s: float, sigma_max_a: float,
                       b, theta, sigma_s) -> RhsResult:
    """General vector bound evaluated at ``[b; θ]`` (batched over leading axes).

    ``C_n‖[Σ_S^{1/2} b; θ]‖₂ − ρ(2+α√2)ϱ‖b‖₁√(log p/n) − ρβ‖θ‖₁√(2 log n/n)``.
    """
    val = _vector_rhs(c_n(params, n, sigma_max_a), l1_coefficient(params),
                      theta_coefficient(params), n, p, varrho_s, b, theta, sigma_s)
    return RhsResult(val, n >= n_min(params))


def special_vector_rhs(n: int, p: int, varrho_s: float, sigma_max_a: float, b, theta, sigma_s) -> RhsResult:
    """``(0.24 − ‖E_D^{(n)}Σ_S^{†/2}‖)‖[Σ_S^{1/2}b; θ]‖₂ − 36ϱ‖b‖₁√(log p/n) − 33‖θ‖₁√(log n/n)``."""
    lead = SPECIAL_LEAD - sigma_max_a / math.sqrt(n)
    val = _vector_rhs(lead, SPECIAL_L1, SPECIAL_THETA, n, p, varrho_s, b, theta, sigma_s)
    return RhsResult(val, n >= SPECIAL_N_MIN)


def _matrix_rhs(lead, a1, a2, n, p, varrho_s, B, Theta, sigma):
    B = np.asarray(B, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if B.shape[-2:] != (p, p) or Theta.shape[-2:] != (n, p):
        raise InvalidInputError(f"expected B {p}x{p} and Theta {n}x{p}")
    if sigma.shape != (p, p):
        raise InvalidInputError(f"Σ_S must be {p}x{p}")
    sb = np.sqrt(np.maximum(np.einsum("...ij,ik,...kj->...", B, sigma, B), 0.0))
    st = np.sqrt((Theta ** 2).sum(axis=(-2, -1)))
    l11 = np.abs(B).sum(axis=(-2, -1))
    l21 = np.sqrt((Theta ** 2).sum(axis=-1)).sum(axis=-1)
    val = (lead * np.maximum(sb, st)
           - a1 * varrho_s * l11 * math.sqrt(math.log(p) / n)
           - a2 * l21 * math.sqrt(math.log(n) / n))
    return val if val.ndim else float(val)


def general_matrix_rhs(params: BoundParams, n: int, p: int, varrho_s: float, sigma_max_a: float,
                       B, Theta, sigma_s) -> RhsResult:
    """Matrix analogue with ``‖Σ_S^{1/2}B‖₂,₂ ∨ ‖Θ‖₂,₂``, ``‖B‖₁,₁`` and ``‖Θ‖₂,₁``."""
    val = _matrix_rhs(c_n(params, n, sigma_max_a), l1_coefficient(params),
                      theta_coefficient(params), n, p, varrho_s, B, Theta, sigma_s)
    return RhsResult(val, n >= n_min(params))


def special_matrix_rhs(n: int, p: int, varrho_s: float, sigma_max_a: float, B, Theta, sigma_s) -> RhsResult:
    lead = SPECIAL_LEAD - sigma_max_a / math.sqrt(n)
    val = _matrix_rhs(lead, SPECIAL_L1, SPECIAL_THETA, n, p, varrho_s, B, Theta, sigma_s)
    return RhsResult(val, n >= SPECIAL_N_MIN)


# ------------------------------------------------------------------ corollary


@dataclass(frozen=True)
class CorollaryVerdict:
    gamma_min: float
    gamma_ok: bool
    n_ok: bool
    condition_value: float
    condition_n_ok: bool
    alternate_branch_used: bool
    c_n: float
    kappa: float
    re_constant: Optional[float]
    passed: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)


def _spectral_summary(cov, cov_E) -> tuple[float, float, float]:
    """``(λ_min(Σ), max diag(Σ_S), λ_min(Σ_S))`` without materialising identities."""

    def tag(c):
        if c is None:
            return None
        if isinstance(c, CovarianceSpec):
            return c
        return CovarianceSpec.dense(np.asarray(c, dtype=float))

    cov, cov_E = tag(cov), tag(cov_E)
    lam_sigma = cov.min_eigenvalue()
    if cov_E is None:
        return lam_sigma, cov.max_diagonal(), lam_sigma
    if cov.p != cov_E.p:
        raise InvalidInputError("Σ and Σ_E dimensions differ")
    if cov.kind == "identity" and cov_E.kind == "identity":
        return lam_sigma, 2.0, 2.0
    if cov.is_diagonal() and cov_E.is_diagonal():
        d = cov.diagonal_entries() + cov_E.diagonal_entries()
        return lam_sigma, float(d.max()), float(d.min())
    total = cov.to_matrix() + cov_E.to_matrix()
    return lam_sigma, float(np.diag(total).max()), float(np.linalg.eigvalsh(total).min())


def corollary_check(s: int, o: int, c: float, gamma: float, c0: float, n: int, p: int,
                    cov, cov_E=None, sigma_max_a: float = 0.0) -> CorollaryVerdict:
    """Check the sample-size and constant conditions giving ``RE^{mat}_{s,o}(c, γ)``.

    ``cov`` and ``cov_E`` are :class:`CovarianceSpec` instances or arrays.
    Raises ``InvalidInputError`` when ``Σ`` is singular.
    """
    if c0 <= 0:
        raise InvalidInputError("c0 must be > 0")
    lam_sigma, max_diag, lam_s = _spectral_summary(cov, cov_E)
    if lam_sigma <= 0:
        raise InvalidInputError("Σ must be non-singular")
    rho_s = math.sqrt(max_diag)
    log_ratio = math.sqrt(math.log(p) / math.log(n)) if n > 1 else math.inf
    gamma_min = COROLLARY_GAMMA_FACTOR * log_ratio
    gamma_ok = gamma >= gamma_min
    kappa = min(1.0, math.sqrt(lam_s))
    alternate = gamma >= COROLLARY_GAMMA_FACTOR * rho_s * log_ratio
    rate = math.sqrt(math.log(n) / n)
    factor = 1.0 if alternate else rho_s
    condition_value = SPECIAL_L1 * factor * (gamma * math.sqrt(s) + math.sqrt(o)) * rate
    condition_ok = condition_value <= kappa * c0
    cn = SPECIAL_LEAD - sigma_max_a / math.sqrt(n) - (1.0 + c) * c0
    n_ok = n >= SPECIAL_N_MIN
    reasons = []
    if not n_ok:
        reasons.append(f"n = {n} < {SPECIAL_N_MIN}")
    if not gamma_ok:
        reasons.append(f"gamma = {gamma} < {gamma_min:.6g}")
    if not condition_ok:
        reasons.append(f"sample-size condition {condition_value:.6g} > kappa*c0 = {kappa * c0:.6g}")
    if not cn > 0:
        reasons.append(f"c_n = {cn:.6g} is not positive")
    passed = not reasons
    return CorollaryVerdict(
        gamma_min=gamma_min, gamma_ok=gamma_ok, n_ok=n_ok, condition_value=condition_value,
        condition_n_ok=condition_ok, alternate_branch_used=alternate, c_n=cn, kappa=kappa,
        re_constant=cn * kappa if cn > 0 else None, passed=passed, reasons=tuple(reasons))


def vector_cone_re_bound(s: int, o: int, c: float, gamma: float, n: int, p: int,
                         varrho_s: float, lambda_min_s: float, sigma_max_a: float = 0.0,
                         params: BoundParams | None = None) -> float:
    """Lower bound on the RE constant over a vector cone ``C_{S,O}(c, γ)``.

    On the high-probability event of the pointwise bound, every cone member
    satisfies ``‖X^{(n)}b − θ‖₂ ≥ bound · ‖[b; θ]‖₂``. Uses
    ``γ‖b‖₁ + ‖θ‖₁ ≤ (1+c)√(γ²s + o)‖[b; θ]‖₂`` and
    ``‖[Σ_S^{1/2}b; θ]‖₂ ≥ min(1, √λ_min(Σ_S))‖[b; θ]‖₂``. Clipped at 0.
    """
    if params is None:
        lead = SPECIAL_LEAD - sigma_max_a / math.sqrt(n)
        a1, a2 = SPECIAL_L1, SPECIAL_THETA
    else:
        lead = c_n(params, n, sigma_max_a)
        a1, a2 = l1_coefficient(params), theta_coefficient(params)
    if lead <= 0:
        return 0.0
    kappa_sigma = min(1.0, math.sqrt(max(lambda_min_s, 0.0)))
    w_b = a1 * varrho_s * math.sqrt(math.log(p) / n) / gamma
    w_t = a2 * math.sqrt(math.log(n) / n)
    penalty = max(w_b, w_t) * (1.0 + c) * math.sqrt(gamma ** 2 * s + o)
    return max(0.0, lead * kappa_sigma - penalty)


def matrix_cone_re_bound(s: int, o: int, c: float, gamma: float, n: int, p: int,
                         varrho_s: float, lambda_min_s: float, sigma_max_a: float = 0.0,
                         params: BoundParams | None = None) -> float:
    """Matrix analogue of :func:`vector_cone_re_bound` with ``s = |𝒥|``.

    Uses ``γ‖B‖₁,₁ + ‖Θ‖₂,₁ ≤ (1+c)(γ√s + √o)(‖B‖₂,₂ ∨ ‖Θ‖₂,₂)`` on the cone.
    """
    if params is None:
        lead = SPECIAL_LEAD - sigma_max_a / math.sqrt(n)
        a1, a2 = SPECIAL_L1, SPECIAL_THETA
    else:
        lead = c_n(params, n, sigma_max_a)
        a1, a2 = l1_coefficient(params), theta_coefficient(params)
    if lead <= 0:
        return 0.0
    kappa_sigma = min(1.0, math.sqrt(max(lambda_min_s, 0.0)))
    w_b = a1 * varrho_s * math.sqrt(math.log(p) / n) / gamma
    w_t = a2 * math.sqrt(math.log(n) / n)
    penalty = max(w_b, w_t) * (1.0 + c) * (gamma * math.sqrt(s) + math.sqrt(o))
    return max(0.0, lead * kappa_sigma - penalty)


# -------------------------------------------------------------------- audit


@dataclass(frozen=True)
class AuditRow:
    name: str
    computed: float
    paper_value: float
    direction_ok: bool
    note: str = ""


def constants_audit(params: BoundParams = REFERENCE_PARAMS) -> list[AuditRow]:
    """Recompute the rounded constants from the general formulas.

    Each row holds the computed value, the published rounded value and
    whether the rounding goes in the direction that keeps the published
    statement valid (a smaller lead constant, larger penalty coefficients,
    a slower exponential rate, a larger ``n`` gate).
    """
    lead = c_n(params, SPECIAL_N_MIN)
    l1 = l1_coefficient(params)
    th = theta_coefficient(params)
    rate = exponent_rate(params)
    nm = n_min(params)
    nm_real = n_min_real(params)
    rows = [
        AuditRow("lead_constant_at_n208", lead, SPECIAL_LEAD, lead >= SPECIAL_LEAD),
        AuditRow("lead_constant_limit", c_infinity(params), SPECIAL_LEAD, c_infinity(params) >= SPECIAL_LEAD),
        AuditRow("l1_coefficient", l1, SPECIAL_L1, l1 <= SPECIAL_L1),
        AuditRow("theta_coefficient", th, SPECIAL_THETA, th <= SPECIAL_THETA),
        AuditRow("exponent_rate", rate, SPECIAL_RATE, rate >= SPECIAL_RATE),
        AuditRow("n_min", float(nm), float(SPECIAL_N_MIN), nm <= SPECIAL_N_MIN,
                 note="discrepancy" if nm != SPECIAL_N_MIN else ""),
        AuditRow("n_min_real", nm_real, float(SPECIAL_N_MIN), nm_real <= SPECIAL_N_MIN,
                 note="discrepancy" if math.ceil(nm_real) != SPECIAL_N_MIN else ""),
        AuditRow("re_constant_vs_prior", SPECIAL_LEAD, PRIOR_RE_CONSTANT, SPECIAL_LEAD > PRIOR_RE_CONSTANT),
    ]
    return rows


# ------------------------------------------------------------ lemma bounds


def lemma_aux1_bound(n: int, p: int, t: float, r1: float, varrho_s: float) -> float:
    """High-probability lower bound ``3/4 − t − r₁ϱ√(2 log p / n)`` on ``inf_{V₁(r₁)} ‖X_R^{(n)} b‖₂``."""
    if n < 10:
        raise InvalidInputError("the bound requires n >= 10")
    return 0.75 - t - r1 * varrho_s * math.sqrt(2.0 * math.log(p) / n)


def lemma_aux2_bound(n: int, p: int, r1: float, r2: float, varrho_s: float) -> float:
    """Bound on ``E sup_{V(r₁,r₂)} θᵀX_R^{(n)} b``: ``r₁ϱ√(2 log p/n) + r₂√(2 log n/n)``."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return r1 * varrho_s * math.sqrt(2.0 * math.log(p) / n) + r2 * math.sqrt(2.0 * math.log(n) / n)


def t_epsilon(params: BoundParams, n: int, p: int, r1: float, r2: float, varrho_s: float) -> float:
    if n < 10:
        raise InvalidInputError("t_epsilon requires n >= 10")
    eps = params.epsilon
    return (1.0 - (0.75 - eps) / SQRT2 * (1.0 - math.exp(-n * eps ** 2 / 2.0))
            + (2.0 + params.alpha * SQRT2) * r1 * varrho_s * math.sqrt(math.log(p) / n)
            + params.beta * r2 * math.sqrt(2.0 * math.log(n) / n))
