import math

import numpy as np
import pytest

from recert import bounds as bd
from recert.core import InvalidInputError
from recert.design import CovarianceSpec

P = bd.REFERENCE_PARAMS


# ---------------------------------------------------------------- parameters


def test_bound_params_validation():
    for eps in (0.0, 0.75, 0.9, -0.1):
        with pytest.raises(InvalidInputError):
            bd.BoundParams(eps, 20, 20, 7.5, 0.02)
    for field in ("alpha", "beta", "sigma", "tau"):
        kw = dict(epsilon=0.19, alpha=20.0, beta=20.0, sigma=7.5, tau=0.02)
        kw[field] = 0.0
        with pytest.raises(InvalidInputError):
            bd.BoundParams(**kw)


def test_mu_rho_examples():
    mu, _ = bd.mu_rho(bd.BoundParams(0.75 - 1e-15, 1, 1, 1, 1))
    assert mu == pytest.approx(1.0, abs=1e-12)
    mu, rho = bd.mu_rho(P)
    assert mu == pytest.approx(1 - 0.56 / math.sqrt(2), rel=1e-12)
    assert mu == pytest.approx(0.60402, abs=1e-5)
    assert rho == pytest.approx(1.156, rel=1e-12)


def test_c_n_examples():
    assert bd.c_n(P, 208) == pytest.approx(0.2410, abs=5e-4)
    assert bd.c_n(P, 208) >= 0.24
    assert bd.c_n(P, 10 ** 9) == pytest.approx(0.2518, abs=5e-5)
    assert bd.c_infinity(P) == pytest.approx(bd.c_n(P, 10 ** 9), abs=1e-12)
    n = 500
    assert bd.c_n(P, n, 0.1 * math.sqrt(n)) == pytest.approx(bd.c_n(P, n) - 0.1, abs=1e-14)
    with pytest.raises(InvalidInputError):
        bd.c_n(P, 0)


def test_coefficients():
    assert bd.l1_coefficient(P) == pytest.approx(1.156 * (2 + 20 * math.sqrt(2)), rel=1e-12)
    assert bd.l1_coefficient(P) == pytest.approx(35.02, abs=0.02)
    assert bd.theta_coefficient(P) == pytest.approx(32.70, abs=0.01)
    assert 1 / bd.exponent_rate(P) == pytest.approx(296.4, abs=0.1)
    assert bd.n_min_real(P) == pytest.approx(205.4, abs=0.05)
    assert bd.n_min(P) == 206


def test_failure_probability_monotone():
    ns = [1, 10, 100, 208, 1000, 5000]
    vals = [bd.failure_probability(P, n) for n in ns]
    assert all(0 <= v <= 1 for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    taus = [0.01, 0.02, 0.1, 0.5, 1.0]
    vals = [bd.failure_probability(bd.BoundParams(0.19, 20, 20, 7.5, t), 1000) for t in taus]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert bd.special_failure_probability(2048) == pytest.approx(2 * math.exp(-2048 / 297), rel=1e-12)


def test_bound_report():
    r = bd.bound_report(P, 300)
    assert r.sample_size_ok and r.n_min == 206
    assert r.failure_probability == pytest.approx(2 * math.exp(-bd.exponent_rate(P) * 300), rel=1e-12)
    assert not bd.bound_report(P, 100).sample_size_ok


# ---------------------------------------------------------------- pointwise RHS


def _random_points(rng, K, p, n):
    b = rng.standard_normal((K, p)) * (rng.random((K, p)) < 0.3)
    t = rng.standard_normal((K, n)) * (rng.random((K, n)) < 0.1)
    return b, t


def test_rhs_zero_point():
    I = np.eye(5)
    assert bd.general_vector_rhs(P, 400, 5, 1.0, 0.0, np.zeros(5), np.zeros(400), I).value == 0
    assert bd.special_vector_rhs(400, 5, 1.0, 0.0, np.zeros(5), np.zeros(400), I).value == 0


def test_special_rhs_b_zero():
    n, p = 400, 5
    t = np.random.default_rng(0).standard_normal(n)
    got = bd.special_vector_rhs(n, p, 1.0, 0.0, np.zeros(p), t, np.eye(p)).value
    want = 0.24 * np.linalg.norm(t) - 33 * np.abs(t).sum() * math.sqrt(math.log(n) / n)
    assert got == pytest.approx(want, rel=1e-12)


def test_general_rhs_unit_sparse_vector():
    p, n = 8, 10 ** 6
    e1 = np.eye(p)[0]
    got = bd.general_vector_rhs(P, n, p, 1.0, 0.0, e1, np.zeros(n), np.eye(p)).value
    want = bd.c_n(P, n) - bd.l1_coefficient(P) * math.sqrt(math.log(p) / n)
    assert got == pytest.approx(want, rel=1e-12)


def test_general_equals_special_formula_with_unrounded_coefficients():
    rng = np.random.default_rng(1)
    n, p = 300, 12
    sig = CovarianceSpec.ar1(p, 0.4).to_matrix()
    b, t = _random_points(rng, 20, p, n)
    smax = 3.0
    got = bd.general_vector_rhs(P, n, p, 1.3, smax, b, t, sig).value
    nb = np.sqrt(np.einsum("ki,ij,kj->k", b, sig, b) + (t ** 2).sum(1))
    want = (bd.c_n(P, n, smax) * nb
            - bd.l1_coefficient(P) * 1.3 * np.abs(b).sum(1) * math.sqrt(math.log(p) / n)
            - bd.theta_coefficient(P) * np.abs(t).sum(1) * math.sqrt(math.log(n) / n))
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14)


def test_special_dominated_by_general():
    rng = np.random.default_rng(2)
    for n, p in ((208, 16), (512, 64), (4096, 8)):
        sig = CovarianceSpec.ar1(p, 0.3).to_matrix()
        b, t = _random_points(rng, 500, p, n)
        for smax in (0.0, 0.5):
            s = bd.special_vector_rhs(n, p, 1.0, smax, b, t, sig).value
            g = bd.general_vector_rhs(P, n, p, 1.0, smax, b, t, sig).value
            assert np.all(s <= g + 1e-12)
            B = rng.standard_normal((20, p, p)) * (rng.random((20, p, p)) < 0.2)
            T = rng.standard_normal((20, n, p)) * (rng.random((20, n, 1)) < 0.05)
            sm = bd.special_matrix_rhs(n, p, 1.0, smax, B, T, sig).value
            gm = bd.general_matrix_rhs(P, n, p, 1.0, smax, B, T, sig).value
            assert np.all(sm <= gm + 1e-12)


def test_rhs_outside_cone_is_finite():
    b = np.array([0.0, 0.0, 100.0])
    t = np.ones(300)
    v = bd.special_vector_rhs(300, 3, 1.0, 0.0, b, t, np.eye(3)).value
    assert math.isfinite(v)


def test_sample_size_flag():
    assert not bd.special_vector_rhs(100, 2, 1.0, 0.0, np.ones(2), np.ones(100), np.eye(2)).sample_size_ok
    assert bd.special_vector_rhs(208, 2, 1.0, 0.0, np.ones(2), np.ones(208), np.eye(2)).sample_size_ok
    assert not bd.general_vector_rhs(P, 205, 2, 1.0, 0.0, np.ones(2), np.ones(205), np.eye(2)).sample_size_ok
    assert bd.general_vector_rhs(P, 206, 2, 1.0, 0.0, np.ones(2), np.ones(206), np.eye(2)).sample_size_ok


def test_rhs_dimension_errors():
    with pytest.raises(InvalidInputError):
        bd.special_vector_rhs(10, 3, 1.0, 0.0, np.ones(2), np.ones(10), np.eye(3))
    with pytest.raises(InvalidInputError):
        bd.special_matrix_rhs(10, 3, 1.0, 0.0, np.ones((3, 2)), np.ones((10, 3)), np.eye(3))


def test_rhs_deterministic():
    rng = np.random.default_rng(3)
    b, t = _random_points(rng, 50, 6, 250)
    v1 = bd.general_vector_rhs(P, 250, 6, 1.0, 0.2, b, t, np.eye(6)).value
    v2 = bd.general_vector_rhs(P, 250, 6, 1.0, 0.2, b, t, np.eye(6)).value
    np.testing.assert_array_equal(v1, v2)


def test_matrix_rhs_reductions():
    n, p = 400, 4
    sig = CovarianceSpec.ar1(p, 0.5).to_matrix()
    rng = np.random.default_rng(4)
    b = rng.standard_normal(p)
    B = np.zeros((p, p))
    B[:, 2] = b
    got = bd.special_matrix_rhs(n, p, 1.0, 0.0, B, np.zeros((n, p)), sig).value
    want = bd.special_vector_rhs(n, p, 1.0, 0.0, b, np.zeros(n), sig).value
    assert got == pytest.approx(want, rel=1e-12)
    T = rng.standard_normal((n, p))
    got = bd.special_matrix_rhs(n, p, 1.0, 0.0, np.zeros((p, p)), T, sig).value
    l21 = np.linalg.norm(T, axis=1).sum()
    want = 0.24 * np.linalg.norm(T) - 33 * l21 * math.sqrt(math.log(n) / n)
    assert got == pytest.approx(want, rel=1e-12)


def test_column_aggregation_chain():
    # Column-wise vector bounds aggregate to at least the matrix bound:
    # matrix_rhs <= sqrt(sum_j (vector_rhs_j)_+^2).
    rng = np.random.default_rng(5)
    n, p = 300, 5
    sig = CovarianceSpec.ar1(p, 0.3).to_matrix()
    for _ in range(300):
        scale_b = rng.choice([0.0, 0.1, 1.0])
        B = scale_b * rng.standard_normal((p, p)) * (rng.random((p, p)) < 0.5)
        T = rng.standard_normal((n, p)) * (rng.random((n, 1)) < rng.choice([0.01, 0.1, 1.0]))
        m = bd.special_matrix_rhs(n, p, 1.0, 0.0, B, T, sig).value
        cols = bd.special_vector_rhs(n, p, 1.0, 0.0, B.T, T.T, sig).value
        agg = math.sqrt((np.maximum(cols, 0.0) ** 2).sum())
        assert m <= agg + 1e-10 * (1 + abs(m))


def test_t_epsilon_limit_and_lower_bound():
    small = bd.BoundParams(1e-4, 20, 20, 7.5, 0.02)
    assert bd.t_epsilon(small, 10 ** 12, 2, 0.0, 0.0, 1.0) == pytest.approx(1 - 3 / (4 * math.sqrt(2)), abs=1e-4)
    assert 1 - 3 / (4 * math.sqrt(2)) == pytest.approx(0.4697, abs=1e-4)
    rng = np.random.default_rng(6)
    for _ in range(200):
        prm = bd.BoundParams(rng.uniform(0.01, 0.74), rng.uniform(1, 50), rng.uniform(1, 50),
                             rng.uniform(1, 10), rng.uniform(0.01, 1))
        mu, _ = bd.mu_rho(prm)
        n = int(rng.integers(10, 10 ** 5))
        te = bd.t_epsilon(prm, n, int(rng.integers(2, 1000)), rng.uniform(0, 10), rng.uniform(0, 10), 1.0)
        assert te >= mu - 1e-12


def test_t_epsilon_matches_general_rhs():
    # RHS / ‖[Σ^{1/2}b; θ]‖ = 1 − ρ t_ε(‖b‖₁/‖·‖, ‖θ‖₁/‖·‖) − 1/(2α) − 1/(2β) − σ_max/√n
    rng = np.random.default_rng(7)
    n, p = 500, 9
    sig = CovarianceSpec.ar1(p, 0.2).to_matrix()
    for _ in range(50):
        prm = bd.BoundParams(rng.uniform(0.05, 0.7), rng.uniform(2, 40), rng.uniform(2, 40),
                             rng.uniform(1, 10), rng.uniform(0.01, 0.5))
        _, rho = bd.mu_rho(prm)
        b = rng.standard_normal(p)
        t = rng.standard_normal(n) * (rng.random(n) < 0.05)
        smax = rng.uniform(0, 2)
        norm = math.sqrt(b @ sig @ b + t @ t)
        r1, r2 = np.abs(b).sum() / norm, np.abs(t).sum() / norm
        rs = 1.4
        got = bd.general_vector_rhs(prm, n, p, rs, smax, b, t, sig).value / norm
        want = 1 - rho * bd.t_epsilon(prm, n, p, r1, r2, rs) - 1 / (2 * prm.alpha) - 1 / (2 * prm.beta) \
            - smax / math.sqrt(n)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------- corollary


def test_corollary_example_pass():
    v = bd.corollary_check(4, 4, 2.0, 1.1, 0.065, 10 ** 8, 10 ** 8, CovarianceSpec.identity(10 ** 8))
    assert v.condition_value == pytest.approx(36 * 4.2 * math.sqrt(math.log(1e8) / 1e8), rel=1e-12)
    assert v.condition_value == pytest.approx(0.0649, abs=2e-4)
    assert v.c_n == pytest.approx(0.045, abs=1e-6)
    assert v.kappa == 1.0
    assert v.re_constant == pytest.approx(0.045, abs=1e-6)
    assert v.gamma_min == pytest.approx(1.1)
    assert v.passed and v.gamma_ok and v.condition_n_ok


def test_corollary_c_n_zero_fails():
    v = bd.corollary_check(4, 4, 2.0, 1.1, 0.08, 10 ** 8, 10 ** 8, CovarianceSpec.identity(10 ** 8))
    assert v.c_n == pytest.approx(0.0, abs=1e-15)
    assert not v.passed
    assert v.re_constant is None


def test_corollary_gamma_gate():
    v = bd.corollary_check(1, 1, 2.0, 0.5, 0.01, 10 ** 6, 10 ** 6, np.eye(3))
    assert not v.gamma_ok and not v.passed
    assert any("gamma" in r for r in v.reasons)


def test_corollary_branches():
    # ϱ(Σ_S) = 2: at γ = 1.1 the main branch multiplies by ϱ; at γ = 2.2 the alternate drops it.
    cov = CovarianceSpec.diagonal([4.0, 1.0, 1.0])
    n = p = 10 ** 6
    main = bd.corollary_check(1, 1, 2.0, 1.1, 0.05, n, p, cov)
    alt = bd.corollary_check(1, 1, 2.0, 2.2, 0.05, n, p, cov)
    rate = math.sqrt(math.log(n) / n)
    assert not main.alternate_branch_used
    assert main.condition_value == pytest.approx(36 * 2 * (1.1 + 1) * rate)
    assert alt.alternate_branch_used
    assert alt.condition_value == pytest.approx(36 * (2.2 + 1) * rate)


def test_corollary_kappa_and_re_constant():
    cov = np.diag([0.25, 1.0])
    v = bd.corollary_check(1, 1, 2.0, 2.0, 0.05, 10 ** 12, 10 ** 12, cov, cov_E=np.diag([0.0, 1.0]))
    assert v.kappa == pytest.approx(0.5)
    assert v.passed
    assert 0 < v.re_constant <= 0.24 * v.kappa


def test_corollary_singular_sigma():
    with pytest.raises(InvalidInputError):
        bd.corollary_check(1, 1, 2.0, 2.0, 0.01, 1000, 1000, np.diag([1.0, 0.0]))


def test_corollary_spectral_term():
    v0 = bd.corollary_check(4, 4, 2.0, 1.1, 0.065, 10 ** 8, 10 ** 8, CovarianceSpec.identity(5))
    v1 = bd.corollary_check(4, 4, 2.0, 1.1, 0.065, 10 ** 8, 10 ** 8, CovarianceSpec.identity(5),
                            sigma_max_a=0.01 * 1e4)
    assert v1.c_n == pytest.approx(v0.c_n - 0.01)


# ---------------------------------------------------------------- audit


def test_audit_rows():
    rows = {r.name: r for r in bd.constants_audit()}
    assert rows["lead_constant_at_n208"].computed == pytest.approx(0.2410, abs=5e-4)
    assert rows["l1_coefficient"].computed == pytest.approx(35.02, abs=0.02)
    assert rows["theta_coefficient"].computed == pytest.approx(32.70, abs=0.01)
    assert rows["exponent_rate"].computed >= 1 / 297
    assert rows["n_min"].computed == 206 and rows["n_min"].paper_value == 208
    assert rows["n_min"].note == "discrepancy"
    assert rows["re_constant_vs_prior"].direction_ok
    assert all(r.direction_ok for r in rows.values())


# ---------------------------------------------------------------- cone bounds


def test_cone_bounds_basic():
    b = bd.vector_cone_re_bound(1, 1, 2.0, 1.0, 10 ** 7, 10, 1.0, 1.0)
    assert 0 < b < 0.24
    assert bd.vector_cone_re_bound(5, 5, 2.0, 1.0, 300, 10, 1.0, 1.0) == 0.0
    m = bd.matrix_cone_re_bound(1, 1, 2.0, 1.0, 10 ** 9, 10, 1.0, 1.0)
    assert 0 < m < 0.24
    g = bd.vector_cone_re_bound(1, 1, 2.0, 1.0, 10 ** 7, 10, 1.0, 1.0, params=P)
    assert g >= b


def test_cone_bound_is_pointwise_consequence():
    # On cone members the pointwise RHS is at least bound·‖[b; θ]‖. θ is kept
    # sparse, so the RHS is evaluated from its norms at a large n.
    rng = np.random.default_rng(8)
    n, p, s, o, c, gamma = 10 ** 8, 6, 2, 1, 2.0, 0.8
    bound = bd.vector_cone_re_bound(s, o, c, gamma, n, p, 1.0, 1.0)
    assert bound > 0
    for _ in range(500):
        b = np.zeros(p)
        b[:s] = rng.standard_normal(s)
        b[s:] = rng.standard_normal(p - s)
        t = rng.standard_normal(4)
        on = gamma * np.abs(b[:s]).sum() + abs(t[0])
        off = gamma * np.abs(b[s:]).sum() + np.abs(t[1:]).sum()
        shrink = min(1.0, rng.uniform(0, 1) * c * on / off)
        b[s:] *= shrink
        t[1:] *= shrink
        norm = math.sqrt(b @ b + t @ t)
        rhs = (bd.SPECIAL_LEAD * norm
               - bd.SPECIAL_L1 * np.abs(b).sum() * math.sqrt(math.log(p) / n)
               - bd.SPECIAL_THETA * np.abs(t).sum() * math.sqrt(math.log(n) / n))
        assert rhs >= bound * norm - 1e-12


# ---------------------------------------------------------------- lemma bounds


def test_lemma_aux1_bound():
    assert bd.lemma_aux1_bound(100, 5, 0.75, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert bd.lemma_aux1_bound(800, 64, 0.1, 1.0, 1.0) == pytest.approx(
        0.65 - math.sqrt(2 * math.log(64) / 800), rel=1e-12)
    assert bd.lemma_aux1_bound(800, 64, 0.1, 1.0, 1.0) == pytest.approx(0.548, abs=5e-4)
    vals_r = [bd.lemma_aux1_bound(800, 64, 0.1, r, 1.0) for r in (0, 1, 2, 5)]
    vals_t = [bd.lemma_aux1_bound(800, 64, t, 1.0, 1.0) for t in (0.01, 0.1, 0.5)]
    assert vals_r == sorted(vals_r, reverse=True)
    assert vals_t == sorted(vals_t, reverse=True)
    with pytest.raises(InvalidInputError):
        bd.lemma_aux1_bound(9, 5, 0.1, 1.0, 1.0)


def test_lemma_aux2_bound():
    assert bd.lemma_aux2_bound(256, 64, 0.0, 0.0, 1.0) == 0.0
    assert bd.lemma_aux2_bound(256, 64, 1.0, 1.0, 1.0) == pytest.approx(0.3884, abs=1e-4)
    a = bd.lemma_aux2_bound(256, 64, 0.7, 0.0, 1.3) + bd.lemma_aux2_bound(256, 64, 0.0, 0.4, 1.3)
    assert bd.lemma_aux2_bound(256, 64, 0.7, 0.4, 1.3) == pytest.approx(a, rel=1e-14)
    assert bd.lemma_aux2_bound(256, 64, 2.0, 2.0, 1.0) == pytest.approx(
        2 * bd.lemma_aux2_bound(256, 64, 1.0, 1.0, 1.0), rel=1e-14)
