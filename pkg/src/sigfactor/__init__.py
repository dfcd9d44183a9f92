# src/sigfactor/__init__.py

# Define the package version first; submodules read it for run manifests
__version__ = "0.1.0"

from .aenmf import aenmf_fit
from .cnmf import cnmf_fit
from .core import (FactorModel, FitConfig, Method, MutationCatalog, NonNegScheme,
                   SigFactorError, frobenius_loss)
from .metrics import acs, match_signatures, pam_consensus
from .nmf import nmf_fit
from .refit import refit_weights

__all__ = [
    'FactorModel', 'FitConfig', 'Method', 'MutationCatalog', 'NonNegScheme', 'SigFactorError',
    'aenmf_fit', 'acs', 'cnmf_fit', 'frobenius_loss', 'match_signatures', 'nmf_fit',
    'pam_consensus', 'refit_weights',
]
