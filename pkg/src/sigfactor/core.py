"""Shared types for the factorization engines.

Everything is oriented features-by-samples: a catalog V is M x N, signatures
H are M x K and exposures W are K x N. Matrices are plain float64 numpy
arrays validated through :func:`as_nonneg`.
"""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import numpy.typing as npt
import pandas as pd

logger: logging.Logger = logging.getLogger(__name__)

NonNegMatrix = npt.NDArray[np.float64]
"""Dense 2-d float64 array with every entry >= 0."""

# Guards the denominators of the multiplicative updates.
EPS_DENOM = 1e-16

T = TypeVar("T")


class SigFactorError(ValueError):
    """Base class for all errors raised by sigfactor."""


class DimensionError(SigFactorError):
    """Matrix shapes do not line up."""


class DegenerateInputError(SigFactorError):
    """Input has no information to work with (all zeros, zero columns, too few samples)."""


class CatalogFormatError(SigFactorError):
    """A catalog or signature file could not be parsed or failed validation."""


class Method(str, enum.Enum):
    NMF = "nmf"
    CNMF = "cnmf"
    AENMF = "aenmf"


class NonNegScheme(str, enum.Enum):
    """How AE-NMF keeps its weights non-negative.

    ``PG`` and ``ABS`` act on the stored weights after every optimizer step
    (projection onto the orthant, absolute value). ``FP_PG`` and ``FP_ABS``
    leave the stored weights free and apply ReLU / absolute value in the
    forward pass.
    """
    PG = "pg"
    FP_PG = "fp_pg"
    ABS = "abs"
    FP_ABS = "fp_abs"


def as_nonneg(array: npt.ArrayLike, name: str = "matrix") -> NonNegMatrix:
    """Validate and freeze a non-negative 2-d matrix.

    Returns a read-only float64 copy. Raises :class:`DimensionError` for
    anything that is not a non-empty 2-d array and :class:`SigFactorError`
    for negative or non-finite entries.
    """
    out = np.array(array, dtype=np.float64, copy=True)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-d matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise SigFactorError(f"{name} contains non-finite values")
    if np.any(out < 0):
        i, j = np.argwhere(out < 0)[0]
        raise SigFactorError(f"{name} has a negative entry {out[i, j]} at ({i}, {j})")
    out.setflags(write=False)
    return out


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "matrices") -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def frobenius_loss(v: np.ndarray, v_hat: np.ndarray) -> float:
    """Average Frobenius distance ||V - V_hat||_F / (M * N)."""
    v = np.asarray(v, dtype=np.float64)
    v_hat = np.asarray(v_hat, dtype=np.float64)
    check_same_shape(v, v_hat, "v and v_hat")
    if v.ndim != 2:
        raise DimensionError(f"expected 2-d matrices, got shape {v.shape}")
    return float(np.linalg.norm(v - v_hat) / v.size)


# --- Seeded randomness ---

def child_seed(master: int, stream: int) -> int:
    """Derive an independent 64-bit seed for ``stream`` from ``master``.

    Mixing goes through numpy's SeedSequence so the result is stable across
    platforms and numpy versions.
    """
    seq = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, int(stream)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int) -> np.random.Generator:
    """PCG64 generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def init_uniform(rows: int, cols: int, seed: int) -> NonNegMatrix:
    """Matrix of i.i.d. uniform [0, 1) entries, a pure function of its arguments."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"cannot draw a {rows}x{cols} matrix")
    return rng_for(seed).random((rows, cols))


def default_init(rows: int, n: int, k: int, seed: int) -> Tuple[NonNegMatrix, NonNegMatrix]:
    """Initial (rows x K, K x N) factors for a fit seeded with ``seed``.

    The left factor comes from stream 0 and the right factor from stream 1,
    so NMF's initial W and the convex methods' initial W2 coincide under a
    shared seed.
    """
    left = init_uniform(rows, k, child_seed(seed, 0))
    right = init_uniform(k, n, child_seed(seed, 1))
    return left, right


def sbs96_labels() -> List[str]:
    """The 96 single-base-substitution contexts in COSMIC order, e.g. ``A[C>A]A``."""
    substitutions = ["C>A", "C>G", "C>T", "T>A", "T>C", "T>G"]
    bases = "ACGT"
    return [f"{five}[{sub}]{three}"
            for sub, five, three in itertools.product(substitutions, bases, bases)]


# --- Catalog ---

@dataclass(frozen=True, eq=False)
class MutationCatalog:
    """Count matrix V (features x samples) with its labels."""
    matrix: NonNegMatrix
    feature_labels: Tuple[str, ...]
    sample_ids: Tuple[str, ...]

    def __post_init__(self):
        matrix = as_nonneg(self.matrix, "catalog")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "feature_labels", tuple(str(x) for x in self.feature_labels))
        object.__setattr__(self, "sample_ids", tuple(str(x) for x in self.sample_ids))

        m, n = matrix.shape
        if len(self.feature_labels) != m or len(self.sample_ids) != n:
            raise DimensionError(
                f"catalog is {m}x{n} but has {len(self.feature_labels)} feature labels "
                f"and {len(self.sample_ids)} sample ids")
        for kind, labels in (("feature label", self.feature_labels), ("sample id", self.sample_ids)):
            seen = set()
            for label in labels:
                if label in seen:
                    raise CatalogFormatError(f"duplicate {kind} {label!r}")
                seen.add(label)
        if not np.all(matrix == np.round(matrix)):
            logger.warning("Catalog contains non-integer counts; continuing with real values")

    @classmethod
    def from_matrix(cls, matrix: npt.ArrayLike,
                    feature_labels: Optional[Sequence[str]] = None,
                    sample_ids: Optional[Sequence[str]] = None) -> "MutationCatalog":
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"catalog must be 2-d, got shape {arr.shape}")
        m, n = arr.shape
        if feature_labels is None:
            feature_labels = sbs96_labels() if m == 96 else [f"F{i + 1}" for i in range(m)]
        if sample_ids is None:
            sample_ids = [f"S{j + 1}" for j in range(n)]
        return cls(arr, tuple(feature_labels), tuple(sample_ids))

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "MutationCatalog":
        """Build from a features-by-samples DataFrame (index = feature labels)."""
        return cls(df.to_numpy(dtype=np.float64), tuple(df.index), tuple(df.columns))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.array(self.matrix), index=list(self.feature_labels),
                            columns=list(self.sample_ids))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def subset(self, columns: Sequence[int]) -> "MutationCatalog":
        """Catalog restricted to the given (distinct) sample columns, in order."""
        columns = list(columns)
        return MutationCatalog(self.matrix[:, columns], self.feature_labels,
                               tuple(self.sample_ids[j] for j in columns))


# --- Fitting ---

@dataclass(frozen=True)
class FitConfig:
    """Settings shared by the three fitters.

    ``learning_rate`` and ``nonneg_scheme`` only matter for AE-NMF.
    """
    k: int
    max_iters: int = 500_000
    rel_tol: float = 1e-10
    seed: int = 0
    learning_rate: float = 1e-4
    nonneg_scheme: NonNegScheme = NonNegScheme.FP_ABS

    def __post_init__(self):
        object.__setattr__(self, "nonneg_scheme", NonNegScheme(self.nonneg_scheme))
        if self.k < 1:
            raise SigFactorError(f"k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise SigFactorError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise SigFactorError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.learning_rate > 0:
            raise SigFactorError(f"learning_rate must be > 0, got {self.learning_rate}")

    def checked_for(self, v: np.ndarray) -> "FitConfig":
        """Raise unless K fits the catalog shape; returns self for chaining."""
        m, n = v.shape
        if self.k > min(m, n):
            raise SigFactorError(f"k={self.k} exceeds min(M, N) = {min(m, n)} for a {m}x{n} catalog")
        return self

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "max_iters": self.max_iters,
            "rel_tol": self.rel_tol,
            "seed": self.seed,
            "learning_rate": self.learning_rate,
            "nonneg_scheme": self.nonneg_scheme.value,
        }


@dataclass(frozen=True, eq=False)
class FactorModel:
    """A fitted factorization V ~ H W.

    For the convex methods ``mixing`` holds W1 (N x K) so that H = V W1.
    """
    method: Method
    h: NonNegMatrix
    w: NonNegMatrix
    loss_trace: np.ndarray
    converged: bool
    iters_run: int
    mixing: Optional[NonNegMatrix] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        h = as_nonneg(self.h, "h")
        w = as_nonneg(self.w, "w")
        if h.shape[1] != w.shape[0]:
            raise DimensionError(f"h is {h.shape} but w is {w.shape}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w", w)
        trace = np.array(self.loss_trace, dtype=np.float64)
        trace.setflags(write=False)
        object.__setattr__(self, "loss_trace", trace)
        if self.mixing is not None:
            object.__setattr__(self, "mixing", as_nonneg(self.mixing, "mixing"))

    @property
    def k(self) -> int:
        return self.h.shape[1]

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1]) if self.loss_trace.size else float("nan")

    @property
    def n_parameters(self) -> int:
        """Number of estimated parameters: K(M+N) for NMF, 2KN for the convex methods."""
        m, k = self.h.shape
        n = self.w.shape[1]
        if self.method is Method.NMF:
            return k * (m + n)
        return 2 * k * n

    def reconstruction(self) -> np.ndarray:
        return self.h @ self.w

    def summary(self) -> dict:
        return {
            "method": self.method.value,
            "k": self.k,
            "final_loss": self.final_loss,
            "iterations": self.iters_run,
            "converged": bool(self.converged),
        }


def check_not_degenerate(v: np.ndarray) -> None:
    if not np.any(v > 0):
        raise DegenerateInputError("degenerate input: catalog has no positive entry")


def iterate_until_converged(
        sweep: Callable[[T], T],
        loss: Callable[[T], float],
        state: T,
        config: FitConfig,
        label: str,
) -> Tuple[T, List[float], bool]:
    """Apply ``sweep`` until the relative loss change drops below ``config.rel_tol``.

    The first sweep never terminates the loop. Returns the final state, the
    per-sweep loss trace and whether the tolerance was reached.
    """
    previous = loss(state)
    trace: List[float] = []
    converged = False
    for it in range(1, config.max_iters + 1):
        state = sweep(state)
        current = loss(state)
        trace.append(current)
        if not np.isfinite(current):
            logger.warning("%s: loss became non-finite at iteration %d", label, it)
            break
        if it > 1:
            if previous == 0.0 or abs(current - previous) / previous < config.rel_tol:
                converged = True
                break
        previous = current

    if converged:
        logger.debug("%s: converged after %d iterations, loss %.6g", label, len(trace), trace[-1])
    else:
        logger.warning("%s: no convergence within %d iterations (loss %.6g)",
                       label, len(trace), trace[-1] if trace else float("nan"))
    return state, trace, converged
