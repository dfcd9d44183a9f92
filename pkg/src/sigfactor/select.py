"""Choosing the number of signatures.

Bootstrap test errors are sampled per replicate, method and K; a paired
Wilcoxon test between consecutive K decides where the error stops changing;
the per-method choices are combined into one K for all methods.

Note on the stopping rule: the written pseudocode of the procedure returns K
at the first *significant* test, which would almost always give K = 2. The
prose description is implemented instead: scan upwards and stop at the first
K whose test against K + 1 is *not* significant.
"""
from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from .core import (DegenerateInputError, DimensionError, FitConfig, Method,
                   MutationCatalog, SigFactorError, child_seed, rng_for)
from .fit import fit_model
from .refit import held_out_error

logger: logging.Logger = logging.getLogger(__name__)

ALL_METHODS: Tuple[Method, ...] = (Method.NMF, Method.CNMF, Method.AENMF)

# Largest number of non-zero differences handled by the exact null distribution.
EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True, eq=False)
class BootstrapErrors:
    """Test errors indexed [replicate, K - 2, model]."""
    values: np.ndarray
    k_max: int
    models: Tuple[Method, ...] = ALL_METHODS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        expected = (values.shape[0], self.k_max - 1, len(self.models))
        if values.ndim != 3 or values.shape != expected:
            raise DimensionError(f"bootstrap tensor has shape {values.shape}, expected {expected}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "models", tuple(Method(m) for m in self.models))

    @property
    def nsims(self) -> int:
        return self.values.shape[0]

    @property
    def ks(self) -> range:
        return range(2, self.k_max + 1)

    def for_model(self, method: Method) -> np.ndarray:
        """nsims x (k_max - 1) matrix of errors for one method."""
        return self.values[:, :, self.models.index(Method(method))]

    def to_frame(self) -> pd.DataFrame:
        """Long format: replicate (1-based), k, model, test_error."""
        records = [
            {"replicate": i + 1, "k": k, "model": method.value, "test_error": self.values[i, k - 2, m]}
            for i in range(self.nsims)
            for m, method in enumerate(self.models)
            for k in self.ks
        ]
        return pd.DataFrame.from_records(records, columns=["replicate", "k", "model", "test_error"])

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "BootstrapErrors":
        models = tuple(Method(m) for m in dict.fromkeys(df["model"]))
        k_max = int(df["k"].max())
        nsims = int(df["replicate"].max())
        values = np.full((nsims, k_max - 1, len(models)), np.nan)
        for row in df.itertuples(index=False):
            values[int(row.replicate) - 1, int(row.k) - 2, models.index(Method(row.model))] = row.test_error
        return cls(values, k_max, models)


def draw_bootstrap_split(n: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Training indices (with replacement, duplicates kept) and the out-of-bag test indices."""
    rng = rng_for(seed)
    while True:
        train = rng.integers(0, n, size=n)
        test = np.setdiff1d(np.arange(n), train)
        if test.size:
            return train, test
        logger.debug("Bootstrap draw left no out-of-bag samples; redrawing")


def _replicate_errors(v: np.ndarray, k_max: int, models: Sequence[Method],
                      config: FitConfig, replicate_seed: int) -> np.ndarray:
    train_idx, test_idx = draw_bootstrap_split(v.shape[1], replicate_seed)
    v_train, v_test = v[:, train_idx], v[:, test_idx]
    out = np.empty((k_max - 1, len(models)))
    for m, method in enumerate(models):
        for k in range(2, k_max + 1):
            # Same init seed for every method at a given (replicate, K).
            cfg = replace(config, k=k, seed=child_seed(replicate_seed, k))
            model = fit_model(method, v_train, cfg)
            out[k - 2, m] = held_out_error(model.h, v_test)
    return out


def bootstrap_test_errors(
        catalog: MutationCatalog,
        k_max: int,
        nsims: int,
        config: FitConfig,
        master_seed: int,
        models: Sequence[Method] = ALL_METHODS,
        threads: int = 1,
        progress: bool = False,
) -> BootstrapErrors:
    """Sample test errors over ``nsims`` bootstrap splits for K = 2..k_max.

    Every replicate draws N training columns with replacement and tests on
    the out-of-bag columns; all models and all K of a replicate share that
    split. Each replicate is seeded from (master_seed, replicate), so the
    result does not depend on ``threads``.
    """
    v = catalog.matrix
    m, n = v.shape
    if n < 10:
        raise DegenerateInputError(f"bootstrap needs at least 10 samples, got {n}")
    if k_max < 2:
        raise SigFactorError(f"k_max must be >= 2, got {k_max}")
    if k_max > min(m, n):
        raise SigFactorError(f"k_max={k_max} exceeds min(M, N) = {min(m, n)}")
    if nsims < 1:
        raise SigFactorError(f"nsims must be >= 1, got {nsims}")
    models = tuple(Method(x) for x in models)

    logger.info("Bootstrap: %d replicates, K = 2..%d, models %s, %d thread(s)",
                nsims, k_max, [x.value for x in models], threads)
    values = np.empty((nsims, k_max - 1, len(models)))
    seeds = [child_seed(master_seed, i) for i in range(nsims)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {
            executor.submit(_replicate_errors, v, k_max, models, config, seed): i
            for i, seed in enumerate(seeds)
        }
        for future in tqdm(concurrent.futures.as_completed(futures), total=nsims,
                           desc="bootstrap", disable=not progress):
            values[futures[future]] = future.result()
    return BootstrapErrors(values, k_max, models)


def wilcoxon_paired(x: Sequence[float], y: Sequence[float]) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped and ties get mid-ranks. Up to 25 remaining
    pairs the p-value comes from the exact null distribution over all sign
    assignments; above that from the normal approximation with tie and
    continuity corrections.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"paired samples differ in shape: {x.shape} vs {y.shape}")
    d = x - y
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 1.0

    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_WILCOXON_MAX_N:
        # Doubled mid-ranks are integers, so the null distribution of 2 * W+
        # is a polynomial product with integer exponents.
        doubled = np.rint(2 * ranks).astype(np.int64)
        total = int(doubled.sum())
        counts = np.zeros(total + 1, dtype=np.int64)
        counts[0] = 1
        for r in doubled:
            shifted = np.zeros_like(counts)
            shifted[r:] = counts[:total + 1 - r]
            counts = counts + shifted
        observed = abs(2 * int(round(2 * w_plus)) - total)
        support = np.abs(2 * np.arange(total + 1) - total)
        p = counts[support >= observed].sum() / float(2 ** n)
        return float(min(1.0, p))

    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    z = max(abs(w_plus - n * (n + 1) / 4.0) - 0.5, 0.0) / math.sqrt(variance)
    return float(min(1.0, 2.0 * stats.norm.sf(z)))


def choose_k(errors: np.ndarray, p_val: float = 0.05) -> int:
    """Smallest K whose test errors are not significantly different from K + 1's.

    ``errors`` is nsims x (k_max - 1), column j holding K = j + 2. Returns
    k_max when every consecutive test is significant.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.ndim != 2:
        raise DimensionError(f"errors must be nsims x (k_max - 1), got shape {errors.shape}")
    if errors.shape[0] < 5:
        raise SigFactorError(f"choose_k needs at least 5 replicates, got {errors.shape[0]}")
    k_max = errors.shape[1] + 1
    for j in range(errors.shape[1] - 1):
        k = j + 2
        p = wilcoxon_paired(errors[:, j], errors[:, j + 1])
        logger.debug("K=%d vs K=%d: p=%.4g", k, k + 1, p)
        if p >= p_val:
            return k
    return k_max


def combine_k(k_nmf: int, k_cnmf: int, k_aenmf: int) -> int:
    """Weighted average (K_NMF + K_CNMF/2 + K_AENMF/2) / 2, rounded half up."""
    for k in (k_nmf, k_cnmf, k_aenmf):
        if k < 2:
            raise SigFactorError(f"per-method K must be >= 2, got {k}")
    return int(math.floor((k_nmf + 0.5 * k_cnmf + 0.5 * k_aenmf) / 2.0 + 0.5))


def choose_k_all(errors: BootstrapErrors, p_val: float = 0.05) -> Dict[str, int]:
    """Per-method K plus the combined value under key ``"all"`` when all three methods are present."""
    chosen = {method.value: choose_k(errors.for_model(method), p_val) for method in errors.models}
    if all(method in errors.models for method in ALL_METHODS):
        chosen["all"] = combine_k(chosen[Method.NMF.value], chosen[Method.CNMF.value],
                                  chosen[Method.AENMF.value])
    logger.info("Chosen K: %s", chosen)
    return chosen


def t_test_two_sample(x: Sequence[float], y: Sequence[float]) -> float:
    """Welch's two-sided t-test p-value for equal means."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise DegenerateInputError(f"t-test needs at least 2 values per sample, got {x.size} and {y.size}")
    if np.var(x) == 0 and np.var(y) == 0:
        return 1.0 if np.mean(x) == np.mean(y) else 0.0
    return float(stats.ttest_ind(x, y, equal_var=False).pvalue)
