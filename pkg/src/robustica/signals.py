"""Signal blocks, the instantaneous mixing model and sample statistics.

A signal block is a 2-D numpy array laid out channels x samples: row ``k``
holds the ``T`` samples of channel ``k``.  Real- and complex-valued blocks
are handled by the same code; the regime is simply the array dtype.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "as_block",
    "is_complex",
    "make_rng",
    "MixingModel",
    "mix",
    "sample_mean",
    "extractor_output",
    "center",
    "givens",
]


def as_block(x, name="block"):
    """Validate ``x`` as an L x T signal block and return it as an ndarray.

    Integer and boolean input is promoted to float64.  A 1-D array is taken
    as a single channel.
    """
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise DimensionError(name, "(L, T)", arr.shape)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(name, "(L >= 1, T >= 1)", arr.shape)
    if not np.iscomplexobj(arr):
        arr = arr.astype(np.float64, copy=False)
    else:
        arr = arr.astype(np.complex128, copy=False)
    return arr


def is_complex(x):
    return np.iscomplexobj(x)


def make_rng(seed, *stream):
    """Counter-based generator keyed by ``seed`` and an optional stream path.

    ``make_rng(s, trial)`` gives an independent reproducible stream per
    trial, which is what lets Monte-Carlo runs be split across processes.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class MixingModel:
    """``x = H s + n`` with isotropic white noise of power ``noise_power``."""

    H: np.ndarray
    noise_power: float = 0.0

    def __post_init__(self):
        H = np.asarray(self.H)
        if H.ndim != 2:
            raise DimensionError("mixing matrix", "(L, K)", H.shape)
        if H.shape[1] > H.shape[0]:
            raise DimensionError("mixing matrix", "(L, K) with K <= L", H.shape)
        if self.noise_power < 0:
            raise ValueError("noise_power must be nonnegative")
        object.__setattr__(self, "H", H)

    @property
    def n_sensors(self):
        return self.H.shape[0]

    @property
    def n_sources(self):
        return self.H.shape[1]

    @property
    def snr(self):
        """trace(H H^H) / (sigma^2 L); infinite for the noiseless model."""
        if self.noise_power == 0:
            return np.inf
        return np.real(np.trace(self.H @ self.H.conj().T)) / (self.noise_power * self.n_sensors)


def mix(model, sources, rng_seed=0):
    """Return ``H s + n``.

    Noise is drawn from ``make_rng(rng_seed)`` only when the model is noisy;
    it is circular complex Gaussian whenever the output is complex.
    """
    s = as_block(sources, "sources")
    if s.shape[0] != model.n_sources:
        raise DimensionError("sources", (model.n_sources, "T"), s.shape)
    x = model.H @ s
    if model.noise_power > 0:
        rng = make_rng(rng_seed)
        sigma = np.sqrt(model.noise_power)
        if np.iscomplexobj(x):
            n = (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)) * (sigma / np.sqrt(2))
        else:
            n = sigma * rng.standard_normal(x.shape)
        x = x + n
    return x


def sample_mean(values, func=None):
    """Sample average of ``func(values)`` along the sample axis.

    This is the only expectation estimator used in the package: a plain
    1/T mean, no bias correction.
    """
    v = np.asarray(values)
    if func is not None:
        v = func(v)
    return v.mean(axis=-1)


def extractor_output(w, x):
    """Extractor output ``y_t = w^H x_t`` for every sample of the block."""
    w = np.asarray(w)
    if w.ndim != 1 or w.shape[0] != x.shape[0]:
        raise DimensionError("extracting vector", (x.shape[0],), w.shape)
    return w.conj() @ x


def center(x):
    """Remove the per-channel sample mean (never applied implicitly)."""
    x = as_block(x)
    return x - x.mean(axis=1, keepdims=True)


def givens(theta):
    """2 x 2 rotation ``[[cos, -sin], [sin, cos]]``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])
