"""Repeated train/test split evaluation and signature consistency across splits."""
from __future__ import annotations

import concurrent.futures
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .core import (FactorModel, FitConfig, Method, MutationCatalog, SigFactorError,
                   child_seed, rng_for)
from .fit import fit_model
from .metrics import pairwise_consistency
from .refit import held_out_error
from .select import t_test_two_sample

logger: logging.Logger = logging.getLogger(__name__)


def draw_holdout_split(n: int, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) indices of a split without replacement."""
    n_test = int(round(n * test_fraction))
    if not 1 <= n_test < n:
        raise SigFactorError(f"test fraction {test_fraction} leaves {n_test} of {n} samples for testing")
    perm = rng_for(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


@dataclass
class SplitEvaluation:
    """Errors per (split, method) plus the fitted models and the splits themselves."""
    table: pd.DataFrame
    models: Dict[Tuple[int, Method], FactorModel] = field(default_factory=dict)
    splits: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def signatures_by_method(self) -> Dict[Method, List[np.ndarray]]:
        out: Dict[Method, List[np.ndarray]] = {}
        for (_, method), model in sorted(self.models.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            out.setdefault(method, []).append(model.h)
        return out


def split_evaluation(
        catalog: MutationCatalog,
        config: FitConfig,
        methods: Sequence[Method] = (Method.NMF, Method.AENMF),
        nsplits: int = 30,
        test_fraction: float = 0.2,
        seed: int = 0,
        threads: int = 1,
        progress: bool = False,
) -> SplitEvaluation:
    """Fit every method on ``nsplits`` random training splits and refit on the held-out samples.

    Methods share the split and the initialisation seed within a split.
    ``config.k`` sets the number of signatures.
    """
    v = catalog.matrix
    n = v.shape[1]
    methods = tuple(Method(m) for m in methods)
    splits = [draw_holdout_split(n, test_fraction, child_seed(seed, s)) for s in range(nsplits)]

    def run(split: int) -> List[Tuple[int, Method, FactorModel, float]]:
        train, test = splits[split]
        cfg = replace(config, seed=child_seed(child_seed(seed, split), config.k))
        out = []
        for method in methods:
            model = fit_model(method, v[:, train], cfg)
            out.append((split, method, model, held_out_error(model.h, v[:, test])))
        return out

    logger.info("Split evaluation: %d splits, test fraction %.2f, k=%d, methods %s",
                nsplits, test_fraction, config.k, [m.value for m in methods])
    results = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        for batch in tqdm(executor.map(run, range(nsplits)), total=nsplits,
                          desc="splits", disable=not progress):
            results.extend(batch)

    table = pd.DataFrame.from_records(
        [{"split": s + 1, "method": m.value, "train_error": model.final_loss, "test_error": err}
         for s, m, model, err in results],
        columns=["split", "method", "train_error", "test_error"])
    return SplitEvaluation(table, {(s, m): model for s, m, model, _ in results}, splits)


def error_summary(table: pd.DataFrame) -> pd.DataFrame:
    """Mean train/test error per method and the ratio to the best method's mean."""
    means = table.groupby("method", sort=True)[["train_error", "test_error"]].mean()
    summary = means.rename(columns={"train_error": "mean_train_error", "test_error": "mean_test_error"})
    summary["train_ratio"] = summary["mean_train_error"] / summary["mean_train_error"].min()
    summary["test_ratio"] = summary["mean_test_error"] / summary["mean_test_error"].min()
    return summary


@dataclass
class ConsistencyReport:
    """Within-method pairwise ACS samples and between-method t-tests on them."""
    samples: Dict[str, np.ndarray]
    p_values: Dict[Tuple[str, str], float]

    def to_dict(self) -> dict:
        return {
            "methods": {
                m: {"mean_acs": float(np.mean(s)) if s.size else None, "n_pairs": int(s.size)}
                for m, s in sorted(self.samples.items())
            },
            "t_tests": [
                {"method_a": a, "method_b": b, "p_value": p}
                for (a, b), p in sorted(self.p_values.items())
            ],
        }


def _nonzero_signatures(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    live = np.any(h != 0, axis=0)
    if not live.all():
        logger.warning("Leaving %d all-zero signature column(s) out of the consistency check",
                       int((~live).sum()))
    return h[:, live]


def consistency_report(signatures_by_method: Mapping[str, Sequence[np.ndarray]]) -> ConsistencyReport:
    """ACS of every pair of signature sets within each method, then Welch t-tests between methods.

    All-zero signature columns carry no direction and are left out; a set
    with nothing left is skipped.
    """
    samples = {}
    for m, sets in signatures_by_method.items():
        live = [s for s in (_nonzero_signatures(h) for h in sets) if s.shape[1]]
        samples[str(getattr(m, "value", m))] = pairwise_consistency(live)
    p_values = {}
    for a, b in itertools.combinations(sorted(samples), 2):
        if samples[a].size < 2 or samples[b].size < 2:
            logger.warning("Skipping t-test %s vs %s: need at least 3 runs per method", a, b)
            continue
        p_values[(a, b)] = t_test_two_sample(samples[a], samples[b])
    return ConsistencyReport(samples, p_values)
