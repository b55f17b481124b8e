"""Kurtosis and fourth-order moment contrasts and their gradients.

Complex gradients use the convention ``grad = d/dw_r + j d/dw_i``, so the
first-order change of a real function ``f`` along ``u`` is
``Re(grad^H u)``.  On real data every formula reduces to the ordinary real
gradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateContrastError
from .signals import extractor_output

#: output powers below this are treated as zero
POWER_FLOOR = 1e-300


@dataclass(frozen=True)
class ContrastValue:
    """Sample moments of an extractor output ``y``.

    Keeping the raw moments lets callers rebuild the kurtosis (or the moment
    criterion) without going back to the samples.
    """

    power: float          # E|y|^2
    pseudo_power: complex  # E y^2
    abs4: float           # E|y|^4

    @property
    def moment4(self):
        return self.abs4

    @property
    def kurtosis(self):
        p2 = self.power * self.power
        return (self.abs4 - 2.0 * p2 - abs(self.pseudo_power) ** 2) / p2


def output_moments(y):
    """:class:`ContrastValue` of an output sequence ``y``."""
    y = np.asarray(y)
    m2 = (y.real ** 2 + y.imag ** 2) if np.iscomplexobj(y) else y * y
    power = float(m2.mean())
    if not power >= POWER_FLOOR:
        raise DegenerateContrastError(f"extractor output power {power:.3g} is zero")
    pseudo = (y * y).mean()
    return ContrastValue(power=power, pseudo_power=pseudo, abs4=float((m2 * m2).mean()))


def kurtosis(w, x):
    """Normalized fourth-order cumulant of ``y = w^H x``.

    Returns the full :class:`ContrastValue`; use ``.kurtosis`` for the
    number.  Raises :class:`DegenerateContrastError` if ``y`` vanishes.
    """
    return output_moments(extractor_output(w, x))


def moment4(w, x):
    """E|w^H x|^4 (no normalization; homogeneous of degree 4 in ``w``)."""
    y = extractor_output(w, x)
    m2 = np.abs(y) ** 2
    return float((m2 * m2).mean())


def kurtosis_gradient(w, x, y=None, return_scale=False):
    """Gradient of the kurtosis contrast with respect to ``w``.

    ``y`` may be supplied when the output has already been computed.  With
    ``return_scale`` the magnitude of the largest cancelling term is returned
    as well; a gradient many orders of magnitude below it is round-off.
    """
    if y is None:
        y = extractor_output(w, x)
    T = x.shape[1]
    yc = y.conj()
    m2 = (y * yc).real
    power = m2.mean()
    if not power >= POWER_FLOOR:
        raise DegenerateContrastError(f"extractor output power {power:.3g} is zero")
    abs4 = (m2 * m2).mean()
    pseudo = (y * y).mean()
    e_m2ycx = x @ (m2 * yc) / T       # E{|y|^2 y* x}
    e_yx = x @ y / T                  # E{y x}
    e_ycx = x @ yc / T                # E{y* x}
    t2 = e_yx * np.conj(pseudo)
    t3 = (abs4 - abs(pseudo) ** 2) * e_ycx / power
    grad = (4.0 / power ** 2) * (e_m2ycx - t2 - t3)
    if return_scale:
        scale = 4.0 / power ** 2 * max(np.linalg.norm(e_m2ycx), np.linalg.norm(t2), np.linalg.norm(t3))
        return grad, scale
    return grad


def moment4_gradient(w, x):
    """Gradient of E|y|^4: ``4 E{x y* |y|^2}`` (``4 E{x (w^T x)^3}`` if real)."""
    y = extractor_output(w, x)
    yc = y.conj()
    return 4.0 * (x @ ((y * yc).real * yc)) / x.shape[1]
