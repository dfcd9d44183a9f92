"""Standard NMF, V ~ H W, fitted with Lee-Seung multiplicative updates on the Frobenius loss."""
from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from .core import (EPS_DENOM, DimensionError, FactorModel, FitConfig, Method,
                   as_nonneg, check_not_degenerate, default_init, frobenius_loss,
                   iterate_until_converged)

logger: logging.Logger = logging.getLogger(__name__)


def nmf_update(h: np.ndarray, w: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One multiplicative sweep: H first, then W using the fresh H."""
    m, k = h.shape
    if w.shape[0] != k or v.shape != (m, w.shape[1]):
        raise DimensionError(f"inconsistent shapes: h {h.shape}, w {w.shape}, v {v.shape}")

    h_new = h * (v @ w.T) / (h @ (w @ w.T) + EPS_DENOM)
    w_new = w * (h_new.T @ v) / ((h_new.T @ h_new) @ w + EPS_DENOM)
    return h_new, w_new


def nmf_fit(v: np.ndarray, config: FitConfig,
            init: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> FactorModel:
    """Fit NMF to ``v``.

    Args:
        v: Non-negative M x N catalog matrix.
        config: Fit settings; K must not exceed min(M, N).
        init: Optional explicit (H0, W0); by default both are uniform [0, 1)
            drawn from ``config.seed``.

    Returns:
        FactorModel with the per-sweep loss trace.
    """
    v = as_nonneg(v, "v")
    config.checked_for(v)
    check_not_degenerate(v)
    m, n = v.shape

    if init is None:
        h0, w0 = default_init(m, n, config.k, config.seed)
    else:
        h0, w0 = as_nonneg(init[0], "h0"), as_nonneg(init[1], "w0")
        if h0.shape != (m, config.k) or w0.shape != (config.k, n):
            raise DimensionError(
                f"initial factors {h0.shape}, {w0.shape} do not match {m}x{n} with k={config.k}")

    logger.debug("NMF fit: %dx%d, k=%d, seed=%d", m, n, config.k, config.seed)
    (h, w), trace, converged = iterate_until_converged(
        sweep=lambda state: nmf_update(state[0], state[1], v),
        loss=lambda state: frobenius_loss(v, state[0] @ state[1]),
        state=(h0, w0),
        config=config,
        label=f"nmf k={config.k}",
    )
    return FactorModel(Method.NMF, h, w, trace, converged, len(trace))
