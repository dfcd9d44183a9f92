"""Reading and writing catalogs, signature tables, run directories and manifests.

Tables are tab-separated with a header row; the first column holds the row
labels. Numbers are written in their shortest round-trip form (integral
values without a decimal point) so reading a written file is lossless.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import __version__
from .core import (CatalogFormatError, FactorModel, MutationCatalog, SigFactorError,
                   sbs96_labels)
from .sim import SimSpec

logger: logging.Logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FEATURES_BY_SAMPLES = "features-by-samples"
SAMPLES_BY_FEATURES = "samples-by-features"
ORIENTATIONS = (FEATURES_BY_SAMPLES, SAMPLES_BY_FEATURES)


def format_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


def write_table(df: pd.DataFrame, path: PathLike, index_label: str = "") -> None:
    """Write a numeric labelled table as TSV with round-trip number formatting."""
    out = df.map(format_number)
    out.to_csv(path, sep="\t", index_label=index_label, lineterminator="\n")


def _to_float(cell: str) -> float:
    # float() is correctly rounded, so shortest-repr output reads back exactly.
    try:
        return float(cell)
    except ValueError:
        return np.nan


def _parse_table(path: PathLike) -> pd.DataFrame:
    """Parse a labelled numeric TSV into a float DataFrame, reporting bad cells precisely."""
    path = Path(path)
    if not path.is_file():
        raise CatalogFormatError(f"{path}: no such file")
    text = path.read_text()
    numbered = [(no, line) for no, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if len(numbered) < 2:
        raise CatalogFormatError(f"{path}: expected a header row and at least one data row")

    lines = [line for _, line in numbered]
    width = lines[0].count("\t") + 1
    for lineno, line in numbered[1:]:
        fields = line.count("\t") + 1
        if fields != width:
            raise CatalogFormatError(f"{path}: line {lineno} has {fields} fields, header has {width}")

    raw = pd.read_csv(io.StringIO("\n".join(lines)), sep="\t", header=None, dtype=str,
                      keep_default_na=False)
    columns = [c.strip() for c in raw.iloc[0, 1:]]
    if len(set(columns)) != len(columns):
        dupes = sorted({c for c in columns if columns.count(c) > 1})
        raise CatalogFormatError(f"{path}: duplicate column labels {dupes}")
    labels = [r.strip() for r in raw.iloc[1:, 0]]
    if len(set(labels)) != len(labels):
        dupes = sorted({r for r in labels if labels.count(r) > 1})
        raise CatalogFormatError(f"{path}: duplicate row labels {dupes}")

    cells = raw.iloc[1:, 1:]
    values = cells.map(_to_float)
    bad = np.argwhere(values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=np.float64)))
    if bad.size:
        i, j = bad[0]
        raise CatalogFormatError(
            f"{path}: non-numeric value {cells.iat[i, j]!r} at row {labels[i]!r} "
            f"(line {numbered[i + 1][0]}), column {columns[j]!r}")
    matrix = values.to_numpy(dtype=np.float64)
    return pd.DataFrame(matrix, index=labels, columns=columns)


def load_catalog(path: PathLike, orientation: str = FEATURES_BY_SAMPLES) -> MutationCatalog:
    """Read a catalog TSV; transposes when the file is samples-by-features."""
    if orientation not in ORIENTATIONS:
        raise SigFactorError(f"unknown orientation {orientation!r}; use one of {ORIENTATIONS}")
    df = _parse_table(path)
    if orientation == SAMPLES_BY_FEATURES:
        df = df.T
    negative = np.argwhere(df.to_numpy() < 0)
    if negative.size:
        i, j = negative[0]
        raise CatalogFormatError(
            f"{path}: negative value {df.iat[i, j]} at feature {df.index[i]!r}, sample {df.columns[j]!r}")
    fractional = np.argwhere(df.to_numpy() != np.round(df.to_numpy()))
    if fractional.size:
        i, j = fractional[0]
        raise CatalogFormatError(
            f"{path}: non-integer count {float(df.iat[i, j])} at feature {df.index[i]!r}, sample {df.columns[j]!r}")
    catalog = MutationCatalog.from_frame(df)
    logger.info("Loaded %dx%d catalog from %s", *catalog.shape, path)
    return catalog


def write_catalog(catalog: MutationCatalog, path: PathLike) -> None:
    write_table(catalog.to_frame(), path, index_label="Type")


def read_matrix(path: PathLike) -> pd.DataFrame:
    return _parse_table(path)


@dataclass(frozen=True, eq=False)
class CosmicCatalog:
    """Reference signatures: 96 SBS contexts x S signatures."""
    feature_labels: Tuple[str, ...]
    signatures: np.ndarray
    names: Tuple[str, ...]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.signatures, index=list(self.feature_labels), columns=list(self.names))


def load_cosmic(path: PathLike) -> CosmicCatalog:
    """Read a COSMIC-style signature file ("Type" column plus one column per signature)."""
    df = _parse_table(path)
    if df.shape[0] != 96:
        raise CatalogFormatError(f"{path}: expected 96 SBS contexts, got {df.shape[0]}")
    if np.any(df.to_numpy() < 0):
        raise CatalogFormatError(f"{path}: signature probabilities must be non-negative")
    sums = df.sum(axis=0)
    for name, total in sums.items():
        if not 0.99 <= total <= 1.01:
            raise CatalogFormatError(f"{path}: signature {name} sums to {total:.4f}, expected 1")
    logger.info("Loaded %d reference signatures from %s", df.shape[1], path)
    return CosmicCatalog(tuple(df.index), df.to_numpy(), tuple(df.columns))


def load_sim_spec(path: PathLike, seed: Optional[int] = None) -> Tuple[SimSpec, List[str]]:
    """Read a JSON simulation spec.

    The file holds ``w`` (K x N nested lists) and either ``h`` (M x K nested
    lists) or ``cosmic`` (path to a reference file, relative to the spec) plus
    ``signatures`` (names to take from it). Optional keys: ``feature_labels``
    and ``seed`` (overridden by ``seed`` when given). Reference signatures are
    renormalised to sum to exactly 1.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CatalogFormatError(f"{path}: cannot read simulation spec ({e})") from e

    if "w" not in doc:
        raise CatalogFormatError(f"{path}: simulation spec needs 'w'")
    labels = doc.get("feature_labels")
    if "h" in doc:
        h = np.asarray(doc["h"], dtype=np.float64)
    elif "cosmic" in doc:
        cosmic = load_cosmic(path.parent / doc["cosmic"])
        names = doc.get("signatures") or list(cosmic.names)
        missing = [s for s in names if s not in cosmic.names]
        if missing:
            raise CatalogFormatError(f"{path}: signatures {missing} not in {doc['cosmic']}")
        h = cosmic.signatures[:, [cosmic.names.index(s) for s in names]]
        h = h / h.sum(axis=0)
        labels = labels or list(cosmic.feature_labels)
    else:
        raise CatalogFormatError(f"{path}: simulation spec needs 'h' or 'cosmic'")

    spec = SimSpec(h, np.asarray(doc["w"], dtype=np.float64),
                   seed if seed is not None else int(doc.get("seed", 0)))
    if labels is None:
        labels = sbs96_labels() if spec.h.shape[0] == 96 else [f"F{i + 1}" for i in range(spec.h.shape[0])]
    return spec, list(labels)


# --- Run directories ---

def file_digest(path: PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce the outputs of one command invocation."""
    command: str
    config: Dict
    seed: int
    inputs: Dict[str, str] = field(default_factory=dict)
    fits: List[Dict] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    version: str = __version__

    @classmethod
    def for_inputs(cls, command: str, config: Dict, seed: int,
                   inputs: Sequence[PathLike] = ()) -> "RunManifest":
        return cls(command, config, seed, {str(p): file_digest(p) for p in inputs})

    def write(self, path: PathLike) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: PathLike) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def signature_names(k: int) -> List[str]:
    return [f"Sig{i + 1}" for i in range(k)]


def normalized_factors(model: FactorModel) -> Tuple[np.ndarray, np.ndarray]:
    """Signatures scaled to sum to 1 with the scale folded into the exposures."""
    scale = model.h.sum(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return model.h / scale, model.w * scale[:, None]


def save_run(out_dir: PathLike, model: FactorModel, catalog: MutationCatalog,
             manifest: RunManifest, raw: bool = False) -> None:
    """Write signatures.tsv, exposures.tsv, loss_trace.csv and manifest.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = (model.h, model.w) if raw else normalized_factors(model)
    names = signature_names(model.k)

    write_table(pd.DataFrame(h, index=list(catalog.feature_labels), columns=names),
                out_dir / "signatures.tsv", index_label="Type")
    write_table(pd.DataFrame(w, index=names, columns=list(catalog.sample_ids)),
                out_dir / "exposures.tsv", index_label="Signature")
    trace = pd.DataFrame({"iteration": np.arange(1, model.loss_trace.size + 1),
                          "loss": [format_number(x) for x in model.loss_trace]})
    trace.to_csv(out_dir / "loss_trace.csv", index=False, lineterminator="\n")

    manifest.fits.append(model.summary() | {"normalized": not raw})
    manifest.outputs.extend(["signatures.tsv", "exposures.tsv", "loss_trace.csv", "manifest.json"])
    manifest.write(out_dir / "manifest.json")
    logger.info("Wrote %s run (k=%d) to %s", model.method.value, model.k, out_dir)


@dataclass(frozen=True, eq=False)
class RunRecord:
    """A run directory read back from disk."""
    path: Path
    signatures: pd.DataFrame
    exposures: pd.DataFrame
    manifest: RunManifest

    @property
    def method(self) -> str:
        fits = self.manifest.fits
        return fits[0]["method"] if fits else "unknown"


def load_run(run_dir: PathLike) -> RunRecord:
    run_dir = Path(run_dir)
    for name in ("signatures.tsv", "exposures.tsv", "manifest.json"):
        if not (run_dir / name).is_file():
            raise CatalogFormatError(f"{run_dir}: missing {name}; not a run directory")
    return RunRecord(run_dir, read_matrix(run_dir / "signatures.tsv"),
                     read_matrix(run_dir / "exposures.tsv"),
                     RunManifest.read(run_dir / "manifest.json"))
