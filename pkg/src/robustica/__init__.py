"""Deflationary ICA by exact line search of the kurtosis contrast.

The main entry points are :func:`extract_one` (one source) and
:func:`extract_all` (deflationary separation of several sources).
"""
from .contrast import kurtosis, kurtosis_gradient, moment4, moment4_gradient
from .deflation import Separation, extract_all, orthogonalize, prewhiten, regress_deflate
from .exceptions import (ConfigError, DegenerateContrastError, DegenerateDirectionError,
                         DegenerateError, DimensionError, RankDeficientError)
from .extraction import (ExtractionConfig, ExtractionReport, StepPolynomial, extract_one,
                         os_coefficients, select_root)
from .metrics import circularity_ratio, flops_for, smse
from .signals import MixingModel, extractor_output, mix, sample_mean

__version__ = "0.1.0"
