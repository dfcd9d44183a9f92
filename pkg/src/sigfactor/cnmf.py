"""Convex NMF, V ~ V W1 W2.

Basis vectors H = V W1 are non-negative combinations of the data columns.
The updates only touch V through its Gram matrix G = V^T V, which is computed
once per fit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import (EPS_DENOM, DimensionError, FactorModel, FitConfig, Method,
                   NonNegMatrix, as_nonneg, check_not_degenerate, default_init,
                   frobenius_loss, iterate_until_converged)

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConvexFactors:
    """Column-mixing weights W1 (N x K) and sample weights W2 (K x N)."""
    w1: NonNegMatrix
    w2: NonNegMatrix

    def __post_init__(self):
        w1 = as_nonneg(self.w1, "w1")
        w2 = as_nonneg(self.w2, "w2")
        if w1.shape[1] != w2.shape[0] or w1.shape[0] != w2.shape[1]:
            raise DimensionError(f"w1 is {w1.shape} but w2 is {w2.shape}")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    def basis(self, v: np.ndarray) -> np.ndarray:
        return v @ self.w1


def cnmf_update(w1: np.ndarray, w2: np.ndarray, gram: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One sweep of the convex multiplicative updates, W1 first, then W2 with the new W1."""
    n, k = w1.shape
    if w2.shape != (k, n) or gram.shape != (n, n):
        raise DimensionError(f"inconsistent shapes: w1 {w1.shape}, w2 {w2.shape}, gram {gram.shape}")

    gw1 = gram @ w1
    w1_new = w1 * np.sqrt((gram @ w2.T) / (gw1 @ (w2 @ w2.T) + EPS_DENOM))

    gw1 = gram @ w1_new
    w2_new = w2 * np.sqrt(gw1.T / ((w1_new.T @ gw1) @ w2 + EPS_DENOM))
    return w1_new, w2_new


def cnmf_fit(v: np.ndarray, config: FitConfig,
             init: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> FactorModel:
    """Fit convex NMF to ``v``.

    Args:
        v: Non-negative M x N catalog matrix.
        config: Fit settings; K must not exceed min(M, N).
        init: Optional explicit (W1_0, W2_0) of shapes N x K and K x N.

    Returns:
        FactorModel with h = V W1, w = W2 and ``mixing`` = W1.
    """
    v = as_nonneg(v, "v")
    config.checked_for(v)
    check_not_degenerate(v)
    m, n = v.shape

    if init is None:
        w1, w2 = default_init(n, n, config.k, config.seed)
    else:
        start = ConvexFactors(init[0], init[1])
        if start.w1.shape != (n, config.k):
            raise DimensionError(f"initial w1 is {start.w1.shape}, expected {(n, config.k)}")
        w1, w2 = start.w1, start.w2

    gram = v.T @ v
    logger.debug("C-NMF fit: %dx%d, k=%d, seed=%d", m, n, config.k, config.seed)
    (w1, w2), trace, converged = iterate_until_converged(
        sweep=lambda state: cnmf_update(state[0], state[1], gram),
        loss=lambda state: frobenius_loss(v, (v @ state[0]) @ state[1]),
        state=(w1, w2),
        config=config,
        label=f"cnmf k={config.k}",
    )
    return FactorModel(Method.CNMF, v @ w1, w2, trace, converged, len(trace), mixing=w1)
