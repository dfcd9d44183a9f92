"""Refitting exposures of held-out samples against a fixed signature matrix."""
from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import nnls as _scipy_nnls

from .core import DegenerateInputError, DimensionError, frobenius_loss

logger: logging.Logger = logging.getLogger(__name__)


def _check_basis(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise DimensionError(f"basis must be 2-d, got shape {h.shape}")
    zero_cols = np.flatnonzero(~np.any(h != 0, axis=0))
    if zero_cols.size:
        raise DegenerateInputError(f"degenerate basis: column(s) {zero_cols.tolist()} are all zero")
    return h


def nnls(h: np.ndarray, v_col: np.ndarray) -> np.ndarray:
    """argmin_{w >= 0} ||h w - v_col||_2 (Lawson-Hanson active set)."""
    h = _check_basis(h)
    v_col = np.asarray(v_col, dtype=np.float64).ravel()
    if v_col.shape[0] != h.shape[0]:
        raise DimensionError(f"basis has {h.shape[0]} rows but column has {v_col.shape[0]}")
    try:
        w, _ = _scipy_nnls(h, v_col, maxiter=50 * h.shape[1])
    except RuntimeError as e:
        raise DegenerateInputError(f"NNLS did not converge: {e}") from e
    return np.maximum(w, 0.0)


def refit_weights(h: np.ndarray, v_test: np.ndarray) -> np.ndarray:
    """Column-wise NNLS; returns the K x N_test exposure matrix."""
    h = _check_basis(h)
    v_test = np.asarray(v_test, dtype=np.float64)
    if v_test.ndim != 2 or v_test.shape[0] != h.shape[0]:
        raise DimensionError(f"basis is {h.shape} but test block is {v_test.shape}")
    w = np.empty((h.shape[1], v_test.shape[1]))
    for j in range(v_test.shape[1]):
        w[:, j] = nnls(h, v_test[:, j])
    return w


def test_error(h: np.ndarray, v_test: np.ndarray) -> float:
    """Average Frobenius loss of ``v_test`` against its NNLS reconstruction on ``h``."""
    w = refit_weights(h, v_test)
    return frobenius_loss(v_test, np.asarray(h, dtype=np.float64) @ w)


# Keep pytest from collecting the function above when it is imported into a test module.
test_error.__test__ = False


def held_out_error(h: np.ndarray, v_test: np.ndarray) -> float:
    """``test_error`` over the non-zero columns of ``h``.

    A signature that a fit drove to zero adds nothing to any reconstruction,
    so it is dropped with a warning rather than failing the refit. With no
    non-zero column left the reconstruction is the zero matrix.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise DimensionError(f"basis must be 2-d, got shape {h.shape}")
    live = np.any(h != 0, axis=0)
    if live.all():
        return test_error(h, v_test)
    logger.warning("Refitting without all-zero signature column(s) %s",
                   np.flatnonzero(~live).tolist())
    if not live.any():
        v_test = np.asarray(v_test, dtype=np.float64)
        if v_test.ndim != 2 or v_test.shape[0] != h.shape[0]:
            raise DimensionError(f"basis is {h.shape} but test block is {v_test.shape}")
        return frobenius_loss(v_test, np.zeros_like(v_test))
    return test_error(h[:, live], v_test)

