"""AE-NMF: a bias-free, linear, single-hidden-layer autoencoder with non-negative weights.

The reconstruction is V_hat = V W_enc W_dec, which is exactly the convex NMF
model with W1 = W_enc and W2 = W_dec. Training is full-batch Adam on
0.5 * ||V - V_hat||_F^2; loss traces report the averaged Frobenius loss like
the other fitters.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .core import (DimensionError, FactorModel, FitConfig, Method, NonNegScheme,
                   as_nonneg, check_not_degenerate, default_init, frobenius_loss,
                   iterate_until_converged)

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AdamState:
    """Moment accumulators for one parameter matrix."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param, dtype=np.float64), np.zeros_like(param, dtype=np.float64))


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns the new parameter and state."""
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise DimensionError(f"param {param.shape}, grad {grad.shape} and state {state.m.shape} differ")

    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_param, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True, eq=False)
class AeParams:
    """Raw encoder (N x K) and decoder (K x N) weights. Biases are fixed at zero."""
    w_enc: np.ndarray
    w_dec: np.ndarray

    def __post_init__(self):
        w_enc = np.asarray(self.w_enc, dtype=np.float64)
        w_dec = np.asarray(self.w_dec, dtype=np.float64)
        if w_enc.ndim != 2 or w_dec.shape != (w_enc.shape[1], w_enc.shape[0]):
            raise DimensionError(f"w_enc is {w_enc.shape} but w_dec is {w_dec.shape}")
        object.__setattr__(self, "w_enc", w_enc)
        object.__setattr__(self, "w_dec", w_dec)


def _effective(w: np.ndarray, scheme: NonNegScheme) -> np.ndarray:
    if scheme is NonNegScheme.FP_ABS:
        return np.abs(w)
    if scheme is NonNegScheme.FP_PG:
        return np.maximum(w, 0.0)
    # PG and ABS keep the stored weights non-negative after every step.
    return w


def effective_weights(params: AeParams, scheme: NonNegScheme) -> Tuple[np.ndarray, np.ndarray]:
    """Non-negative (encoder, decoder) weights actually used in the forward pass."""
    scheme = NonNegScheme(scheme)
    return _effective(params.w_enc, scheme), _effective(params.w_dec, scheme)


def forward(v: np.ndarray, params: AeParams, scheme: NonNegScheme) -> np.ndarray:
    """Reconstruction V W_enc W_dec with identity activations and no biases."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != params.w_enc.shape[0]:
        raise DimensionError(f"v is {v.shape} but w_enc is {params.w_enc.shape}")
    w_enc, w_dec = effective_weights(params, scheme)
    return (v @ w_enc) @ w_dec


def _chain(grad_effective: np.ndarray, raw: np.ndarray, scheme: NonNegScheme) -> np.ndarray:
    # Subgradient at zero is taken as 0 for both |.| and ReLU.
    if scheme is NonNegScheme.FP_ABS:
        return grad_effective * np.sign(raw)
    if scheme is NonNegScheme.FP_PG:
        return grad_effective * (raw > 0)
    return grad_effective


def loss_and_gradient(v: np.ndarray, params: AeParams, scheme: NonNegScheme,
                      gram: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """Objective 0.5 * ||V - V_hat||_F^2 and its gradients w.r.t. the raw weights.

    With R = V^T (V_hat - V) = G W_e W_d - G the effective-weight gradients are
    R W_d^T and W_e^T R; they are then pushed through the scheme's weight map.
    """
    scheme = NonNegScheme(scheme)
    v = np.asarray(v, dtype=np.float64)
    if gram is None:
        gram = v.T @ v
    w_enc, w_dec = effective_weights(params, scheme)

    residual = (v @ w_enc) @ w_dec - v
    objective = 0.5 * float(np.sum(residual * residual))

    r = (gram @ w_enc) @ w_dec - gram
    grad_enc = _chain(r @ w_dec.T, params.w_enc, scheme)
    grad_dec = _chain(w_enc.T @ r, params.w_dec, scheme)
    return objective, grad_enc, grad_dec


def _project(w: np.ndarray, scheme: NonNegScheme) -> np.ndarray:
    if scheme is NonNegScheme.PG:
        return np.maximum(w, 0.0)
    if scheme is NonNegScheme.ABS:
        return np.abs(w)
    return w


def aenmf_fit(v: np.ndarray, config: FitConfig,
              init: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> FactorModel:
    """Train AE-NMF on ``v`` with Adam.

    Args:
        v: Non-negative M x N catalog matrix.
        config: Fit settings; ``learning_rate`` and ``nonneg_scheme`` apply here.
        init: Optional explicit (W_enc0, W_dec0) of shapes N x K and K x N.
            The default draws the same matrices C-NMF would draw for this seed.

    Returns:
        FactorModel with h = V |W_enc|, w = |W_dec| (effective weights) and
        ``mixing`` = effective W_enc.
    """
    v = as_nonneg(v, "v")
    config.checked_for(v)
    check_not_degenerate(v)
    m, n = v.shape
    scheme = config.nonneg_scheme
    if scheme is NonNegScheme.PG:
        logger.info("PG scheme can zero-lock whole encoder/decoder vectors")

    if init is None:
        w_enc0, w_dec0 = default_init(n, n, config.k, config.seed)
    else:
        w_enc0, w_dec0 = init
    params = AeParams(_project(np.array(w_enc0, dtype=np.float64), scheme),
                      _project(np.array(w_dec0, dtype=np.float64), scheme))
    if params.w_enc.shape != (n, config.k):
        raise DimensionError(f"initial w_enc is {params.w_enc.shape}, expected {(n, config.k)}")

    gram = v.T @ v
    lr = config.learning_rate

    def sweep(state):
        p, s_enc, s_dec = state
        _, g_enc, g_dec = loss_and_gradient(v, p, scheme, gram)
        w_enc, s_enc = adam_step(p.w_enc, g_enc, s_enc, lr)
        w_dec, s_dec = adam_step(p.w_dec, g_dec, s_dec, lr)
        return AeParams(_project(w_enc, scheme), _project(w_dec, scheme)), s_enc, s_dec

    logger.debug("AE-NMF fit: %dx%d, k=%d, scheme=%s, lr=%g, seed=%d",
                 m, n, config.k, scheme.value, lr, config.seed)
    (params, _, _), trace, converged = iterate_until_converged(
        sweep=sweep,
        loss=lambda state: frobenius_loss(v, forward(v, state[0], scheme)),
        state=(params, AdamState.zeros_like(params.w_enc), AdamState.zeros_like(params.w_dec)),
        config=config,
        label=f"aenmf k={config.k}",
    )
    w_enc, w_dec = effective_weights(params, scheme)
    return FactorModel(Method.AENMF, v @ w_enc, w_dec, trace, converged, len(trace), mixing=w_enc)
