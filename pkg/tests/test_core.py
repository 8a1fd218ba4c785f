import numpy as np
import pytest

from src.core.errors import (ConflictingEntry, DimensionMismatch, IndexOutOfRange, NotOrthogonal,
                             SingularCovariance)
from src.core.tensor import (MeixnerSpec, SymmetricCubicTensor, canonical_tensor, cubic_form,
                             slice_matrix, tensor_from_entries, third_moment, validate_lcc)
from src.core.transforms import apply_affine, check_orthogonal, rotate_tensor, standardize


def test_entries_are_symmetric_under_permutation(canonical):
    for perm in [(0, 0, 2), (0, 2, 0), (2, 0, 0)]:
        assert canonical.lookup(*perm) == 0.5
    assert canonical.lookup(0, 1, 2) == 0.0


def test_tensor_from_entries_matches_canonical():
    t = tensor_from_entries(3, [(0, 0, 2, 0.5), (1, 1, 2, 0.5), (2, 2, 2, 0.5)])
    assert t == canonical_tensor(0.5)


def test_repeated_equal_entries_are_accepted():
    t = tensor_from_entries(3, [(0, 0, 2, 1.0), (2, 0, 0, 1.0)])
    assert t.entries == {(0, 0, 2): 1.0}


def test_conflicting_entries_are_rejected():
    with pytest.raises(ConflictingEntry):
        tensor_from_entries(3, [(0, 0, 2, 1.0), (2, 0, 0, 2.0)])


def test_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        tensor_from_entries(3, [(0, 0, 3, 1.0)])


def test_zero_entries_are_dropped():
    t = tensor_from_entries(2, [(0, 0, 1, 0.0)])
    assert t.entries == {}


def test_slice_matrices(canonical):
    np.testing.assert_array_equal(slice_matrix(canonical, 2), 0.5 * np.eye(3))
    A0 = slice_matrix(canonical, 0)
    expected = np.zeros((3, 3))
    expected[0, 2] = expected[2, 0] = 0.5
    np.testing.assert_array_equal(A0, expected)
    np.testing.assert_array_equal(slice_matrix(SymmetricCubicTensor(3), 1), np.zeros((3, 3)))


@pytest.mark.parametrize("v,expected", [
    ((0.0, 0.0, 1.0), 0.5),
    ((0.0, 0.0, 0.0), 0.0),
    ((1.0, 1.0, 1.0), 3.5),
])
def test_cubic_form_canonical(canonical, v, expected):
    assert cubic_form(canonical, v) == pytest.approx(expected, abs=1e-15)


def test_cubic_form_dimension_mismatch(canonical):
    with pytest.raises(DimensionMismatch):
        cubic_form(canonical, [1.0, 2.0])


def test_third_moment_is_twice_alpha(canonical):
    assert third_moment(canonical, 2, 0, 0) == 1.0
    assert third_moment(canonical, 0, 1, 2) == 0.0


def test_rotation_identity_is_noop(canonical):
    assert rotate_tensor(canonical, np.eye(3)) == canonical


def test_rotation_about_third_axis_keeps_canonical(canonical):
    c, s = np.cos(0.7), np.sin(0.7)
    U = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(rotate_tensor(canonical, U).dense, canonical.dense, atol=1e-14)


def test_relabeling_moves_the_axis(canonical):
    P = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    rotated = rotate_tensor(canonical, P)
    rng = np.random.default_rng(3)
    for s in rng.standard_normal((5, 3)):
        expected = 3 * 0.5 * s[0] * (s[1] ** 2 + s[2] ** 2) + 0.5 * s[0] ** 3
        assert cubic_form(rotated, s) == pytest.approx(expected, rel=1e-12)


def test_rotation_contract(canonical, random_rotation):
    U = random_rotation(11)
    rotated = rotate_tensor(canonical, U)
    s = np.array([0.3, -1.2, 0.8])
    assert cubic_form(rotated, s) == pytest.approx(cubic_form(canonical, U.T @ s), rel=1e-12)


def test_non_orthogonal_rejected(canonical):
    with pytest.raises(NotOrthogonal):
        rotate_tensor(canonical, np.diag([1.0, 1.0, 1.1]))
    with pytest.raises(NotOrthogonal):
        check_orthogonal([[1.0, 1e-6], [0.0, 1.0]])


def test_validate_lcc_passes_for_normalized(canonical_spec):
    report = validate_lcc(canonical_spec)
    assert report.passed
    assert report.checks['alpha_symmetric']


def test_validate_lcc_reports_violations(canonical):
    spec = MeixnerSpec.build(canonical, beta=[[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    report = validate_lcc(spec)
    assert not report.passed
    assert "beta is not symmetric" in report.violations

    spec = MeixnerSpec.build(canonical, beta=np.diag([2.0, 1.0, 1.0]))
    assert validate_lcc(spec, normalized=False).passed
    assert not validate_lcc(spec).passed


def test_spec_shape_checks(canonical):
    with pytest.raises(DimensionMismatch):
        MeixnerSpec.build(canonical, beta=np.eye(2))
    with pytest.raises(DimensionMismatch):
        MeixnerSpec.build(canonical, mean=[0.0, 0.0])


def test_standardize_whitens():
    mean = np.array([1.0, -2.0])
    cov = np.array([[4.0, 1.0], [1.0, 3.0]])
    W, s = standardize(mean, cov)
    np.testing.assert_allclose(W @ cov @ W.T, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(apply_affine(W, s, mean), np.zeros(2), atol=1e-12)


def test_standardize_singular():
    with pytest.raises(SingularCovariance):
        standardize([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])


def test_validate_lcc_flags_negative_eigenvalue(canonical):
    spec = MeixnerSpec.build(canonical, beta=np.diag([1.0, 1.0, -0.1]))
    report = validate_lcc(spec, normalized=False)
    assert not report.passed
    assert report.checks['beta_symmetric']
    assert report.checks['beta_psd'] is False
    assert any("positive semidefinite" in v for v in report.violations)
