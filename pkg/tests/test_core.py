import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from recert.core import (
    AugmentedMatrixPoint,
    AugmentedPoint,
    ConeSpecMatrix,
    ConeSpecVector,
    InvalidInputError,
    SupportCollection,
    SupportSetVector,
    cone_margin_matrix,
    cone_margin_vector,
    is_cone_member_matrix,
    is_cone_member_vector,
    mixed_norm,
    restrict_matrix,
    restrict_vector,
)


# ---------------------------------------------------------------- mixed norms


def test_mixed_norm_examples():
    assert mixed_norm([[3, 4], [0, 0]], 2, 1) == pytest.approx(5.0)
    assert mixed_norm(np.eye(2), 1, 2) == pytest.approx(np.sqrt(2))
    assert mixed_norm([[1, 2], [3, 4]], 1, 1) == pytest.approx(10.0)


def test_mixed_norm_infinity():
    A = np.array([[1.0, -5.0], [2.0, 2.0]])
    assert mixed_norm(A, np.inf, 1) == pytest.approx(7.0)
    assert mixed_norm(A, 1, np.inf) == pytest.approx(6.0)
    assert mixed_norm(A, np.inf, np.inf) == pytest.approx(5.0)


def test_mixed_norm_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        mixed_norm([[1.0, np.nan]], 2, 2)
    with pytest.raises(InvalidInputError):
        mixed_norm([[1.0, np.inf]], 1, 1)


def test_mixed_norm_frobenius():
    A = np.random.default_rng(0).standard_normal((5, 3))
    assert mixed_norm(A, 2, 2) ** 2 == pytest.approx((A ** 2).sum(), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(arrays(float, (4, 3), elements=st.floats(-10, 10)),
       arrays(float, (4, 3), elements=st.floats(-10, 10)),
       st.sampled_from([1.0, 1.5, 2.0, 3.0, np.inf]),
       st.sampled_from([1.0, 2.0, 4.0, np.inf]))
def test_mixed_norm_triangle(A, B, q1, q2):
    lhs = mixed_norm(A + B, q1, q2)
    rhs = mixed_norm(A, q1, q2) + mixed_norm(B, q1, q2)
    assert lhs <= rhs * (1 + 1e-10) + 1e-12


# ---------------------------------------------------------------- restriction


def test_restrict_vector_examples():
    b = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(restrict_vector(b, {1, 3}), [1, 0, 3])
    np.testing.assert_array_equal(restrict_vector(b, set()), [0, 0, 0])
    np.testing.assert_array_equal(restrict_vector(b, {1, 2, 3}), b)


def test_restrict_vector_out_of_range():
    with pytest.raises(InvalidInputError):
        restrict_vector([1.0, 2.0], {3})
    with pytest.raises(InvalidInputError):
        restrict_vector([1.0, 2.0], {0})


def test_restrict_vector_exact_split():
    rng = np.random.default_rng(1)
    b = rng.standard_normal(7)
    S = {1, 4, 6}
    comp = set(range(1, 8)) - S
    np.testing.assert_array_equal(restrict_vector(b, S) + restrict_vector(b, comp), b)


def test_restrict_matrix_examples():
    I2 = np.eye(2)
    np.testing.assert_array_equal(restrict_matrix(I2, SupportCollection([{1}, {2}])), I2)
    np.testing.assert_array_equal(restrict_matrix(I2, SupportCollection([set(), set()])), np.zeros((2, 2)))
    np.testing.assert_array_equal(restrict_matrix(np.ones((2, 2)), SupportCollection([{2}, {1}])),
                                  [[0, 1], [1, 0]])


def test_restrict_matrix_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        restrict_matrix(np.eye(3), SupportCollection([{1}, {2}]))


def test_restrict_matrix_disjoint_split():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((4, 4))
    J = SupportCollection([{1, 2}, set(), {4}, {1, 2, 3, 4}])
    on = restrict_matrix(A, J)
    off = restrict_matrix(A, J.complement())
    np.testing.assert_array_equal(on + off, A)
    assert not np.any((on != 0) & (off != 0))
    assert J.size == 7


# ---------------------------------------------------------------- supports and specs


def test_support_sets_deduplicate_and_validate():
    sup = SupportSetVector([1, 1, 2], [3], p=3, n=4)
    assert sup.s == 2 and sup.o == 1
    with pytest.raises(InvalidInputError):
        SupportSetVector([4], [], p=3, n=4)
    with pytest.raises(InvalidInputError):
        SupportSetVector([], [5], p=3, n=4)
    with pytest.raises(InvalidInputError):
        SupportCollection([{1}, {3}])


def test_cone_spec_validation():
    with pytest.raises(InvalidInputError):
        ConeSpecVector.build({1}, set(), 2, 2, c=0.0, gamma=1.0)
    with pytest.raises(InvalidInputError):
        ConeSpecVector.build({1}, set(), 2, 2, c=2.0, gamma=-1.0)
    with pytest.raises(InvalidInputError):
        ConeSpecMatrix(SupportCollection([{1}]), set(), 2, c=2.0, gamma=0.0)
    # c in (0, 1] is accepted; c > 1 is the intended regime.
    assert ConeSpecVector.build({1}, set(), 2, 2, c=0.5, gamma=1.0).c == 0.5


def test_augmented_point_types():
    with pytest.raises(InvalidInputError):
        AugmentedPoint(np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(InvalidInputError):
        AugmentedMatrixPoint(np.zeros((2, 2)), np.zeros((3, 3)))
    pt = AugmentedPoint([3.0, 0.0], [4.0])
    assert pt.norm() == pytest.approx(5.0)
    with pytest.raises(ValueError):
        pt.b[0] = 1.0


# ---------------------------------------------------------------- cone margins


def test_cone_margin_vector_examples():
    spec = ConeSpecVector.build({1}, set(), p=2, n=2, c=2.0, gamma=1.0)
    pt = AugmentedPoint([1.0, 0.0], [0.0, 0.0])
    assert cone_margin_vector(pt, spec) == pytest.approx(2.0)
    assert is_cone_member_vector(pt, spec)
    pt = AugmentedPoint([0.0, 1.0], [0.0, 0.0])
    assert cone_margin_vector(pt, spec) == pytest.approx(-1.0)
    assert not is_cone_member_vector(pt, spec)
    spec = ConeSpecVector.build({1}, {1}, p=2, n=2, c=2.0, gamma=1.0)
    pt = AugmentedPoint([1.0, 1.0], [0.5, 0.0])
    assert cone_margin_vector(pt, spec) == pytest.approx(2.0)
    assert is_cone_member_vector(pt, spec)


def test_cone_margin_vector_dimension_mismatch():
    spec = ConeSpecVector.build({1}, set(), p=2, n=2, c=2.0, gamma=1.0)
    with pytest.raises(InvalidInputError):
        cone_margin_vector(AugmentedPoint([1.0, 0.0, 0.0], [0.0, 0.0]), spec)


def test_zero_point_is_member_of_every_cone():
    spec = ConeSpecVector.build(set(), set(), p=2, n=2, c=2.0, gamma=1.0)
    pt = AugmentedPoint(np.zeros(2), np.zeros(2))
    assert cone_margin_vector(pt, spec) == 0.0
    assert is_cone_member_vector(pt, spec)


def test_cone_margin_matrix_examples():
    J = SupportCollection([{1}, set()])
    spec = ConeSpecMatrix(J, set(), n=3, c=2.0, gamma=1.0)
    pt = AugmentedMatrixPoint(np.ones((2, 2)), np.zeros((3, 2)))
    assert cone_margin_matrix(pt, spec) == pytest.approx(-1.0)
    # B supported on J, Θ = 0.
    pt = AugmentedMatrixPoint([[2.0, 0.0], [0.0, 0.0]], np.zeros((3, 2)))
    assert cone_margin_matrix(pt, spec) >= 0
    assert is_cone_member_matrix(pt, spec)
    # B = 0 and Θ rows only outside O.
    spec = ConeSpecMatrix(J, {1}, n=3, c=2.0, gamma=1.0)
    T = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 0.0]])
    pt = AugmentedMatrixPoint(np.zeros((2, 2)), T)
    assert cone_margin_matrix(pt, spec) == pytest.approx(-6.0)
    assert not is_cone_member_matrix(pt, spec)


def test_cone_margin_matrix_dimension_mismatch():
    spec = ConeSpecMatrix(SupportCollection([{1}, set()]), set(), n=3, c=2.0, gamma=1.0)
    with pytest.raises(InvalidInputError):
        cone_margin_matrix(AugmentedMatrixPoint(np.ones((2, 2)), np.zeros((4, 2))), spec)


# ---------------------------------------------------------------- properties


def _random_collection(rng, p):
    return SupportCollection([set(np.flatnonzero(rng.random(p) < 0.4) + 1) for _ in range(p)])


def test_decomposition_identities_random():
    rng = np.random.default_rng(10)
    for _ in range(200):
        p, n = rng.integers(1, 6), rng.integers(1, 9)
        A = rng.standard_normal((p, p))
        J = _random_collection(rng, p)
        total = mixed_norm(A, 1, 1)
        split = mixed_norm(restrict_matrix(A, J), 1, 1) + mixed_norm(restrict_matrix(A, J.complement()), 1, 1)
        assert split == pytest.approx(total, rel=1e-10)
        T = rng.standard_normal((n, p))
        rows = rng.random(n) < 0.5
        on = np.where(rows[:, None], T, 0.0)
        assert mixed_norm(on, 2, 1) + mixed_norm(T - on, 2, 1) == pytest.approx(mixed_norm(T, 2, 1), rel=1e-10)


def test_zeroing_theta_gives_standard_cone():
    rng = np.random.default_rng(11)
    for _ in range(300):
        p, n = 5, 4
        S = set(np.flatnonzero(rng.random(p) < 0.5) + 1)
        O = set(np.flatnonzero(rng.random(n) < 0.5) + 1)
        c = rng.uniform(1.0, 3.0)
        spec = ConeSpecVector.build(S, O, p, n, c, rng.uniform(0.2, 2.0))
        b = rng.standard_normal(p) * (rng.random(p) < 0.7)
        pt = AugmentedPoint(b, np.zeros(n))
        if is_cone_member_vector(pt, spec):
            mask = spec.supports.s_mask()
            assert np.abs(b[~mask]).sum() <= c * np.abs(b[mask]).sum() * (1 + 1e-12) + 1e-15
