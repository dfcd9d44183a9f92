"""Synthetic Poisson catalogs."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (DimensionError, MutationCatalog, NonNegMatrix, SigFactorError,
                   as_nonneg, rng_for)

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimSpec:
    """Signatures H (M x K, columns summing to 1), expected exposures W (K x N) and a seed."""
    h: NonNegMatrix
    w: NonNegMatrix
    seed: int = 0

    def __post_init__(self):
        h = as_nonneg(self.h, "h")
        w = as_nonneg(self.w, "w")
        if h.shape[1] != w.shape[0]:
            raise DimensionError(f"h is {h.shape} but w is {w.shape}")
        sums = h.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-12)
        if bad.size:
            raise SigFactorError(f"signature column(s) {bad.tolist()} do not sum to 1: {sums[bad].tolist()}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w", w)

    @property
    def mean(self) -> np.ndarray:
        return self.h @ self.w


def simulate_poisson(spec: SimSpec, feature_labels: Optional[Sequence[str]] = None,
                     sample_ids: Optional[Sequence[str]] = None) -> MutationCatalog:
    """Draw v_ij ~ Poisson((H W)_ij) independently, seeded by ``spec.seed``."""
    counts = rng_for(spec.seed).poisson(spec.mean).astype(np.float64)
    logger.debug("Simulated %dx%d catalog, %d mutations", *counts.shape, int(counts.sum()))
    return MutationCatalog.from_matrix(counts, feature_labels, sample_ids)


def two_signature_spec(seed: int = 0) -> SimSpec:
    """Two signatures over six mutation types and 30 samples in three exposure groups.

    h1 = (2, 2, 1, 1, 0, 0) / 6 and h2 = (0, 0, 0, 1, 1, 1) / 3; samples 1-10
    have exposures (180, 20), samples 11-20 (100, 100) and 21-30 (20, 180).
    """
    h = np.array([
        [2, 2, 1, 1, 0, 0],
        [0, 0, 0, 1, 1, 1],
    ], dtype=np.float64).T / np.array([6.0, 3.0])
    groups = [(180.0, 20.0), (100.0, 100.0), (20.0, 180.0)]
    w = np.hstack([np.tile(np.array(g)[:, None], (1, 10)) for g in groups])
    return SimSpec(h, w, seed)
