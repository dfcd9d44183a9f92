import logging

import numpy as np
import pytest

from sigfactor import refit
from sigfactor.core import DegenerateInputError, DimensionError, frobenius_loss
from sigfactor.refit import held_out_error, nnls, refit_weights

# =======================================
# nnls
# =======================================

def test_nnls_identity_basis():
    """With H = I the solution is the clipped target."""
    w = nnls(np.eye(3), np.array([1.0, -2.0, 3.0]))
    np.testing.assert_allclose(w, [1.0, 0.0, 3.0], atol=1e-12)


def test_nnls_single_column_projection():
    """H = [1, 1]^T and v = [1, 3]^T gives w = 2."""
    w = nnls(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]))
    assert w[0] == pytest.approx(2.0, rel=1e-12)


def test_nnls_rejects_zero_column():
    """A basis with an all-zero column is degenerate."""
    with pytest.raises(DegenerateInputError, match="degenerate basis"):
        nnls(np.array([[1.0, 0.0], [2.0, 0.0]]), np.array([1.0, 1.0]))


def test_nnls_rejects_length_mismatch():
    """Column length must equal the number of basis rows."""
    with pytest.raises(DimensionError):
        nnls(np.ones((4, 2)), np.ones(3))


def test_nnls_satisfies_kkt_conditions(rng):
    """w >= 0, gradient >= 0 and complementary slackness on 1000 random problems."""
    h = rng.uniform(0, 1, size=(96, 5))
    for _ in range(1000):
        v = rng.uniform(0, 1, size=96)
        w = nnls(h, v)
        grad = h.T @ (h @ w - v)
        scale = 1e-8 * (1 + np.linalg.norm(h.T @ v))
        assert np.all(w >= 0)
        assert np.all(grad >= -scale)
        assert np.all(np.abs(w * grad) <= scale * (1 + w.max()))


def test_nnls_recovers_exact_weights(rng):
    """Targets built as H w with w >= 0 are solved to 1e-8."""
    h = rng.uniform(0, 1, size=(96, 5))
    for _ in range(100):
        w_true = rng.uniform(0, 10, size=5)
        np.testing.assert_allclose(nnls(h, h @ w_true), w_true, atol=1e-8)

# =======================================
# refit_weights and test_error
# =======================================

def test_refit_weights_shape(rng):
    """One weight column per test sample."""
    h = rng.uniform(0, 1, size=(6, 2))
    assert refit_weights(h, rng.uniform(0, 5, size=(6, 7))).shape == (2, 7)


def test_refit_weights_rejects_row_mismatch():
    """The test block must have as many rows as the basis."""
    with pytest.raises(DimensionError):
        refit_weights(np.ones((6, 2)), np.ones((5, 3)))


def test_error_is_zero_inside_the_cone(rng):
    """Test samples that are non-negative combinations of H have zero error."""
    h = rng.uniform(0, 1, size=(6, 2))
    v_test = h @ rng.uniform(0, 5, size=(2, 4))
    assert refit.test_error(h, v_test) == pytest.approx(0.0, abs=1e-10)


def test_error_single_signature_hand_computation():
    """H = [1, 0]^T and v = [[3], [4]] leaves the residual 4 over 2 entries."""
    assert refit.test_error(np.array([[1.0], [0.0]]), np.array([[3.0], [4.0]])) == pytest.approx(2.0)


def test_error_matches_grid_search_for_one_signature(rng):
    """For K=1 the refit error is the minimum over a fine grid of w >= 0."""
    h = rng.uniform(0.1, 1, size=(6, 1))
    v_test = rng.uniform(0, 5, size=(6, 1))
    grid_best = min(frobenius_loss(v_test, h * w) for w in np.linspace(0, 50, 2001))
    w_star = max(float(h[:, 0] @ v_test[:, 0] / (h[:, 0] @ h[:, 0])), 0.0)
    err = refit.test_error(h, v_test)
    assert err <= grid_best + 1e-12
    assert err == pytest.approx(frobenius_loss(v_test, h * w_star), rel=1e-9)


def test_error_invariant_under_signature_permutation(rng):
    """Reordering the columns of H does not change the error."""
    h = rng.uniform(0, 1, size=(6, 3))
    v_test = rng.uniform(0, 5, size=(6, 5))
    assert refit.test_error(h[:, [2, 0, 1]], v_test) == pytest.approx(refit.test_error(h, v_test), rel=1e-10)


def test_error_bounded_by_zero_weights(rng):
    """The refit error never exceeds the error of predicting all zeros."""
    h = rng.uniform(0, 1, size=(6, 2))
    v_test = rng.uniform(0, 5, size=(6, 5))
    err = refit.test_error(h, v_test)
    assert 0.0 <= err <= frobenius_loss(v_test, np.zeros_like(v_test)) + 1e-12


def test_nnls_solver_failure_is_a_library_error(monkeypatch):
    """A solver that gives up is reported as a SigFactor error, not a RuntimeError."""
    def _gives_up(*args, **kwargs):
        raise RuntimeError("too many iterations")
    monkeypatch.setattr(refit, "_scipy_nnls", _gives_up)
    with pytest.raises(DegenerateInputError, match="NNLS did not converge"):
        nnls(np.eye(2), np.ones(2))

# =======================================
# held_out_error
# =======================================

def test_held_out_error_matches_test_error_on_full_basis(rng):
    """Without zero columns it is the plain test error."""
    h = rng.uniform(0, 1, size=(6, 3))
    v_test = rng.uniform(0, 5, size=(6, 4))
    assert held_out_error(h, v_test) == refit.test_error(h, v_test)


def test_held_out_error_drops_zero_signatures(rng, caplog):
    """An all-zero column is skipped with a warning instead of failing the refit."""
    h = rng.uniform(0, 1, size=(6, 3))
    v_test = rng.uniform(0, 5, size=(6, 4))
    with_zero = np.column_stack([h[:, 0], np.zeros(6), h[:, 1:]])
    with caplog.at_level(logging.WARNING, logger="sigfactor.refit"):
        err = held_out_error(with_zero, v_test)
    assert err == pytest.approx(refit.test_error(h, v_test), rel=1e-12)
    assert "[1]" in caplog.text


def test_held_out_error_with_no_signature_left(rng):
    """Only zero columns: the reconstruction is the zero matrix."""
    v_test = rng.uniform(0, 5, size=(6, 4))
    assert held_out_error(np.zeros((6, 2)), v_test) == pytest.approx(
        frobenius_loss(v_test, np.zeros_like(v_test)))


def test_held_out_error_rejects_row_mismatch():
    """The test block still has to match the basis."""
    with pytest.raises(DimensionError):
        held_out_error(np.zeros((6, 2)), np.ones((5, 3)))
