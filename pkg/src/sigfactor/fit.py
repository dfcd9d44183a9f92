"""Dispatch a fit by method name."""
from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .aenmf import aenmf_fit
from .cnmf import cnmf_fit
from .core import FactorModel, FitConfig, Method
from .nmf import nmf_fit

FITTERS: Dict[Method, Callable[..., FactorModel]] = {
    Method.NMF: nmf_fit,
    Method.CNMF: cnmf_fit,
    Method.AENMF: aenmf_fit,
}


def fit_model(method: Method, v: np.ndarray, config: FitConfig,
              init: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> FactorModel:
    return FITTERS[Method(method)](v, config, init=init)
