import numpy as np
import pandas as pd
import pytest

from sigfactor.core import MutationCatalog, sbs96_labels
from sigfactor.io import write_table
from sigfactor.sim import two_signature_spec, simulate_poisson


@pytest.fixture
def rng():
    """A fixed generator for building test inputs."""
    return np.random.default_rng(20240611)


@pytest.fixture
def example_catalog():
    """The two-signature, six-channel, 30-sample Poisson example."""
    return simulate_poisson(two_signature_spec(seed=7))


@pytest.fixture
def small_catalog(rng):
    """A 6 x 12 Poisson catalog with enough samples for bootstrapping."""
    counts = rng.poisson(rng.uniform(5, 50, size=(6, 12))).astype(float)
    return MutationCatalog.from_matrix(counts)


@pytest.fixture
def reference_signatures():
    """Six synthetic 96-channel reference signatures named SBS1..SBS6.

    Each one puts most of its mass on a different substitution class, which
    keeps them well separated under cosine similarity.
    """
    gen = np.random.default_rng(96)
    sigs = gen.uniform(0.0, 0.05, size=(96, 6))
    for s in range(6):
        sigs[16 * s:16 * (s + 1), s] += gen.uniform(0.5, 1.0, size=16)
    sigs /= sigs.sum(axis=0)
    return pd.DataFrame(sigs, index=sbs96_labels(), columns=[f"SBS{i + 1}" for i in range(6)])


@pytest.fixture
def cosmic_file(tmp_path, reference_signatures):
    """The synthetic reference signatures written in COSMIC layout."""
    path = tmp_path / "cosmic.tsv"
    write_table(reference_signatures, path, index_label="Type")
    return path
