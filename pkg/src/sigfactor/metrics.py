"""Comparing signature sets: cosine similarity, optimal matching, ACS, exposure
distance and PAM consensus clustering."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy.optimize import linear_sum_assignment

from .core import DegenerateInputError, DimensionError, SigFactorError, rng_for

logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchResult:
    """Pairing of every column of A with a distinct column of B."""
    pairs: Tuple[Tuple[int, int], ...]
    per_pair_cosine: Tuple[float, ...]
    acs: float = field(init=False)

    def __post_init__(self):
        if len(self.pairs) != len(self.per_pair_cosine):
            raise DimensionError("pairs and per_pair_cosine differ in length")
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))
        object.__setattr__(self, "per_pair_cosine", tuple(float(c) for c in self.per_pair_cosine))
        object.__setattr__(self, "acs", float(np.mean(self.per_pair_cosine)) if self.pairs else float("nan"))

    def b_index_for(self) -> List[int]:
        """Index into B for each index of A, ordered by A."""
        return [b for _, b in sorted(self.pairs)]


def cosine_similarity(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("undefined cosine: zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _unit_columns(h: np.ndarray, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {h.shape}")
    norms = np.linalg.norm(h, axis=0)
    if np.any(norms == 0):
        raise DegenerateInputError(
            f"undefined cosine: {name} has zero column(s) {np.flatnonzero(norms == 0).tolist()}")
    return h / norms


def cosine_matrix(h_a: np.ndarray, h_b: np.ndarray) -> np.ndarray:
    """All column-pair cosines, shape K_a x K_b."""
    ua, ub = _unit_columns(h_a, "h_a"), _unit_columns(h_b, "h_b")
    if ua.shape[0] != ub.shape[0]:
        raise DimensionError(f"signature sets differ in feature count: {ua.shape} vs {ub.shape}")
    return np.clip(ua.T @ ub, -1.0, 1.0)


def match_signatures(h_a: np.ndarray, h_b: np.ndarray) -> MatchResult:
    """Hungarian matching of the K columns of ``h_a`` into the K~ >= K columns of ``h_b``.

    Maximises the summed cosine similarity (cost 1 - cosine). scipy's
    rectangular solver handles K < K~ directly.
    """
    sims = cosine_matrix(h_a, h_b)
    k_a, k_b = sims.shape
    if k_a > k_b:
        raise SigFactorError(
            f"first signature set has more columns ({k_a}) than the second ({k_b}); swap the arguments")
    rows, cols = linear_sum_assignment(1.0 - sims)
    return MatchResult(tuple(zip(rows.tolist(), cols.tolist())), tuple(sims[rows, cols].tolist()))


def acs(match: MatchResult) -> float:
    """Average cosine similarity over the matched pairs."""
    if not match.pairs:
        raise SigFactorError("cannot average an empty match")
    return float(np.mean(match.per_pair_cosine))


def exposure_distance(w_a: np.ndarray, w_b: np.ndarray, match: MatchResult) -> float:
    """||W_a - W_b'||_F / (K N) with the rows of W_b rearranged by ``match``."""
    w_a = np.asarray(w_a, dtype=np.float64)
    w_b = np.asarray(w_b, dtype=np.float64)
    if w_a.ndim != 2 or w_b.ndim != 2 or w_a.shape[1] != w_b.shape[1]:
        raise DimensionError(f"exposure matrices do not line up: {w_a.shape} vs {w_b.shape}")
    if len(match.pairs) != w_a.shape[0]:
        raise DimensionError(f"match pairs {len(match.pairs)} rows but w_a has {w_a.shape[0]}")
    aligned = w_b[match.b_index_for(), :]
    return float(np.linalg.norm(w_a - aligned) / w_a.size)


def pairwise_consistency(signature_sets: Sequence[np.ndarray]) -> np.ndarray:
    """ACS of every unordered pair of signature sets, in itertools.combinations order."""
    values = []
    for a, b in itertools.combinations(signature_sets, 2):
        if a.shape[1] > b.shape[1]:
            a, b = b, a
        values.append(match_signatures(a, b).acs)
    return np.asarray(values, dtype=np.float64)


# --- PAM ---

class PamResult(NamedTuple):
    medoids: List[int]
    labels: np.ndarray
    cost: float


def _cosine_distances(points: np.ndarray) -> np.ndarray:
    unit = _unit_columns(points.T, "signatures")
    d = np.clip(1.0 - unit.T @ unit, 0.0, 2.0)
    np.fill_diagonal(d, 0.0)
    return d


def _build(d: np.ndarray, k: int) -> List[int]:
    medoids = [int(np.argmin(d.sum(axis=1)))]
    nearest = d[:, medoids[0]].copy()
    while len(medoids) < k:
        gain = np.maximum(nearest[:, None] - d, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        best = int(np.argmax(gain))
        medoids.append(best)
        nearest = np.minimum(nearest, d[:, best])
    return medoids


def _swap(d: np.ndarray, medoids: List[int], tol: float = 1e-12) -> List[int]:
    n = d.shape[0]
    k = len(medoids)
    rows = np.arange(n)
    while True:
        dm = d[:, medoids]
        order = np.argsort(dm, axis=1, kind="stable")
        nearest = order[:, 0]
        d1 = dm[rows, nearest]
        d2 = dm[rows, order[:, 1]] if k > 1 else np.full(n, np.inf)
        current = d1.sum()

        best_delta, best_i, best_o = -tol, None, None
        for i in range(k):
            without_i = np.where(nearest == i, d2, d1)
            delta = np.minimum(without_i[:, None], d).sum(axis=0) - current
            delta[medoids] = np.inf
            o = int(np.argmin(delta))
            if delta[o] < best_delta:
                best_delta, best_i, best_o = delta[o], i, o
        if best_i is None:
            return medoids
        logger.debug("PAM swap medoid %d -> %d (delta %.3g)", medoids[best_i], best_o, best_delta)
        medoids = medoids.copy()
        medoids[best_i] = best_o


def pam_consensus(signatures: Sequence[npt.ArrayLike], k: int, seed: Optional[int] = None,
                  init: str = "build") -> PamResult:
    """k-medoids (PAM) clustering of signatures under cosine distance 1 - S_c.

    Args:
        signatures: The pooled signatures, one M-vector per item.
        k: Number of clusters / consensus signatures.
        seed: Seed for ``init="random"``; unused by the deterministic build step.
        init: ``"build"`` (greedy PAM build) or ``"random"`` initial medoids.

    Returns:
        PamResult with sorted medoid indices, a cluster label per signature
        (index into ``medoids``) and the total within-cluster distance. Ties
        resolve towards the lowest index.
    """
    points = np.asarray(signatures, dtype=np.float64)
    if points.ndim != 2:
        raise DimensionError(f"expected a list of equal-length vectors, got shape {points.shape}")
    n = points.shape[0]
    if k < 1 or k > n:
        raise SigFactorError(f"cannot form {k} clusters from {n} signatures")

    d = _cosine_distances(points)
    if init == "build":
        medoids = _build(d, k)
    elif init == "random":
        medoids = sorted(rng_for(0 if seed is None else seed).choice(n, size=k, replace=False).tolist())
    else:
        raise SigFactorError(f"unknown PAM init {init!r}")

    medoids = sorted(_swap(d, medoids))
    dm = d[:, medoids]
    labels = np.argmin(dm, axis=1)
    cost = float(dm[np.arange(n), labels].sum())
    return PamResult(medoids, labels, cost)
