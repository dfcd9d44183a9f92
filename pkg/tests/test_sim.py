import numpy as np
import pytest

from sigfactor.core import DimensionError, SigFactorError
from sigfactor.sim import SimSpec, two_signature_spec, simulate_poisson


def _uniform_spec(m=4, n=5, scale=10.0, seed=0):
    h = np.full((m, 2), 1.0 / m)
    return SimSpec(h, np.full((2, n), scale), seed)


def test_zero_exposures_give_zero_counts():
    """W = 0 means nothing to draw."""
    h = np.full((3, 1), 1.0 / 3)
    catalog = simulate_poisson(SimSpec(h, np.zeros((1, 4)), seed=1))
    np.testing.assert_array_equal(catalog.matrix, np.zeros((3, 4)))


def test_counts_are_non_negative_integers():
    """Every simulated entry is a whole, non-negative count."""
    v = simulate_poisson(two_signature_spec(seed=2)).matrix
    assert np.all(v >= 0)
    np.testing.assert_array_equal(v, np.round(v))


def test_sample_mean_matches_poisson_mean():
    """Averaged over a large catalog, counts are within four standard errors of the mean."""
    spec = _uniform_spec(m=50, n=400, scale=6.0, seed=3)
    v = simulate_poisson(spec).matrix
    mu = float(spec.mean[0, 0])
    stderr = np.sqrt(mu / v.size)
    assert abs(v.mean() - mu) < 4 * stderr


def test_same_seed_same_catalog():
    """The seed fixes the draw; another seed changes it."""
    a = simulate_poisson(two_signature_spec(seed=5)).matrix
    b = simulate_poisson(two_signature_spec(seed=5)).matrix
    c = simulate_poisson(two_signature_spec(seed=6)).matrix
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_example_values():
    """Two signatures over six channels and three exposure groups of ten samples."""
    spec = two_signature_spec()
    np.testing.assert_allclose(spec.h[:, 0], np.array([2, 2, 1, 1, 0, 0]) / 6)
    np.testing.assert_allclose(spec.h[:, 1], np.array([0, 0, 0, 1, 1, 1]) / 3)
    assert spec.w.shape == (2, 30)
    np.testing.assert_array_equal(spec.w[:, 0], [180, 20])
    np.testing.assert_array_equal(spec.w[:, 15], [100, 100])
    np.testing.assert_array_equal(spec.w[:, 29], [20, 180])
    np.testing.assert_allclose(spec.mean.sum(axis=0), 200.0)


def test_signature_order_does_not_change_the_mean():
    """Permuting signatures together with exposure rows leaves H W unchanged."""
    h = np.array([[0.5, 0.25], [0.25, 0.25], [0.25, 0.5]])
    w = np.array([[8.0, 16.0, 4.0], [2.0, 0.0, 32.0]])
    plain = SimSpec(h, w, seed=1)
    swapped = SimSpec(h[:, ::-1], w[::-1], seed=1)
    np.testing.assert_array_equal(plain.mean, swapped.mean)
    np.testing.assert_array_equal(simulate_poisson(plain).matrix, simulate_poisson(swapped).matrix)


def test_column_sums_concentrate_around_total_exposure():
    """Each sample's mutation count is close to the sum of its exposures."""
    h = np.full((10, 1), 0.1)
    v = simulate_poisson(SimSpec(h, np.full((1, 200), 10_000.0), seed=9)).matrix
    totals = v.sum(axis=0)
    assert np.all(np.abs(totals - 10_000.0) < 5 * np.sqrt(10_000.0))


def test_labels_are_passed_through():
    """Explicit feature labels and sample ids end up on the catalog."""
    catalog = simulate_poisson(_uniform_spec(m=2, n=2), feature_labels=["a", "b"],
                               sample_ids=["x", "y"])
    assert catalog.feature_labels == ("a", "b")
    assert catalog.sample_ids == ("x", "y")


def test_spec_rejects_unnormalised_signatures():
    """Signature columns must sum to one."""
    with pytest.raises(SigFactorError, match="do not sum to 1"):
        SimSpec(np.array([[0.5], [0.4]]), np.ones((1, 3)))


def test_spec_rejects_shape_mismatch():
    """H columns must match W rows."""
    with pytest.raises(DimensionError):
        SimSpec(np.full((2, 2), 0.5), np.ones((3, 4)))


def test_spec_rejects_negative_exposure():
    """Exposures are non-negative."""
    with pytest.raises(SigFactorError, match="negative"):
        SimSpec(np.full((2, 1), 0.5), np.array([[1.0, -1.0]]))
