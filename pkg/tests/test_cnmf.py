import math

import numpy as np
import pytest

from sigfactor.cnmf import ConvexFactors, cnmf_fit, cnmf_update
from sigfactor.core import DimensionError, FitConfig, Method, default_init, frobenius_loss
from sigfactor.refit import nnls

# =======================================
# cnmf_update
# =======================================

def test_update_scalar_fixed_point():
    """V=[2], W1=[1], W2=[1] reconstructs exactly and stays put."""
    w1, w2 = cnmf_update(np.array([[1.0]]), np.array([[1.0]]), np.array([[4.0]]))
    assert w1[0, 0] == pytest.approx(1.0, rel=1e-12)
    assert w2[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_update_scalar_hand_computation():
    """V=[2], W1=[0.5], W2=[1] gives W1' = 0.5 * sqrt(2)."""
    w1, _ = cnmf_update(np.array([[0.5]]), np.array([[1.0]]), np.array([[4.0]]))
    assert w1[0, 0] == pytest.approx(0.5 * math.sqrt(2.0), rel=1e-12)


def test_update_loss_is_non_increasing(rng):
    """200 sweeps on a random 6 x 10 catalog never increase the loss."""
    v = rng.uniform(0, 10, size=(6, 10))
    gram = v.T @ v
    w1, w2 = default_init(10, 10, 2, seed=4)
    previous = frobenius_loss(v, v @ w1 @ w2)
    for _ in range(200):
        w1, w2 = cnmf_update(w1, w2, gram)
        current = frobenius_loss(v, v @ w1 @ w2)
        assert current <= previous * (1 + 1e-10)
        previous = current


def test_update_rejects_inconsistent_shapes():
    """The Gram matrix must be N x N."""
    with pytest.raises(DimensionError):
        cnmf_update(np.ones((10, 2)), np.ones((2, 10)), np.ones((6, 6)))


def test_convex_factors_validate_shapes():
    """W1 and W2 must share K and N."""
    with pytest.raises(DimensionError):
        ConvexFactors(np.ones((10, 2)), np.ones((3, 10)))

# =======================================
# cnmf_fit
# =======================================

def test_fit_basis_lies_in_data_cone(example_catalog):
    """Every signature is a non-negative combination of catalog columns."""
    v = example_catalog.matrix
    model = cnmf_fit(v, FitConfig(k=2, max_iters=500, seed=2))
    assert model.method is Method.CNMF
    np.testing.assert_allclose(model.h, v @ model.mixing, rtol=1e-12)
    for col in model.h.T:
        w = nnls(v, col)
        assert np.linalg.norm(v @ w - col) <= 1e-6 * np.linalg.norm(col)


def test_fit_is_deterministic(example_catalog):
    """Same seed, same output."""
    config = FitConfig(k=2, max_iters=300, seed=5)
    a = cnmf_fit(example_catalog.matrix, config)
    b = cnmf_fit(example_catalog.matrix, config)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.w, b.w)


def test_fit_trace_is_monotone(example_catalog):
    """The recorded loss trace never increases beyond the relative slack."""
    trace = cnmf_fit(example_catalog.matrix, FitConfig(k=2, max_iters=2000, seed=1)).loss_trace
    assert np.all(trace[1:] <= trace[:-1] * (1 + 1e-10))


def test_fit_parameter_count(example_catalog):
    """A convex fit estimates 2KN parameters."""
    model = cnmf_fit(example_catalog.matrix, FitConfig(k=2, max_iters=10))
    assert model.n_parameters == 2 * 2 * 30


def test_fit_accepts_explicit_init(example_catalog):
    """An explicit (W1_0, W2_0) replaces the seeded draw."""
    w1, w2 = default_init(30, 30, 2, seed=77)
    explicit = cnmf_fit(example_catalog.matrix, FitConfig(k=2, max_iters=20), init=(w1, w2))
    seeded = cnmf_fit(example_catalog.matrix, FitConfig(k=2, max_iters=20, seed=77))
    np.testing.assert_array_equal(explicit.w, seeded.w)


@pytest.mark.slow
def test_fit_exact_convex_structure():
    """Columns copied from two positive profiles are fitted exactly with K=2.

    Every column is a pure copy of one profile, so the profiles themselves lie
    in the data cone and an exact convex factorization exists.
    """
    a = np.array([5.0, 4.0, 3.0, 2.0, 1.0, 1.0])
    b = np.array([1.0, 1.0, 2.0, 3.0, 4.0, 6.0])
    v = np.column_stack([a] * 4 + [b] * 4)
    model = cnmf_fit(v, FitConfig(k=2, seed=0))
    assert model.final_loss < 1e-6 * v.mean()
