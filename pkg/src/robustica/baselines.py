"""Kurtosis-based FastICA variants used as reference methods.

All of them assume prewhitened observations.  Each step function returns
the raw update; orthogonalization against earlier extracting vectors and
normalization are applied by :func:`run_baseline`.
"""
from __future__ import annotations

import numpy as np

from .contrast import output_moments
from .exceptions import (ConfigError, DegenerateContrastError,
                         DegenerateDirectionError, DimensionError)
from .extraction import ExtractionConfig, ExtractionReport, counted_iterations
from .metrics import per_iteration_flops
from .signals import as_block, extractor_output

KINDS = ("fastica_real", "fastica_complex_circular", "nc_fastica", "km_fixed_point")

_ALIASES = {
    "fastica": None,  # resolved by regime
    "fastica_real": "fastica_real",
    "fastica_complex_circular": "fastica_complex_circular",
    "fastica_complex": "fastica_complex_circular",
    "nc_fastica": "nc_fastica",
    "nc-fastica": "nc_fastica",
    "kmf": "km_fixed_point",
    "km-f": "km_fixed_point",
    "km_fixed_point": "km_fixed_point",
}


def resolve_kind(kind, complex_):
    try:
        k = _ALIASES[kind]
    except KeyError:
        raise ConfigError(f"unknown baseline {kind!r}") from None
    if k is None:
        k = "fastica_complex_circular" if complex_ else "fastica_real"
    if k == "fastica_real" and complex_:
        raise ConfigError("fastica_real only accepts real-valued blocks")
    return k


def fastica_real_step(w, x):
    """``w - E{x (w^T x)^3} / 3``."""
    y = w @ x
    return w - (x @ (y * y * y)) / (3.0 * x.shape[1])


def fastica_complex_step(w, x):
    """``w - E{x y^* |y|^2} / 2`` (valid for circular sources only)."""
    y = extractor_output(w, x)
    yc = y.conj()
    return w - (x @ ((y * yc).real * yc)) / (2.0 * x.shape[1])


def pseudo_covariance(x):
    """Sample ``E{x x^T}`` (no conjugation)."""
    return x @ x.T / x.shape[1]


def nc_fastica_step(w, x, pseudo_cov=None):
    """``w - E{|y|^2 y^* x}/2 + C_x E{y^*2} w^* / 2``."""
    if pseudo_cov is None:
        pseudo_cov = pseudo_covariance(x)
    T = x.shape[1]
    y = extractor_output(w, x)
    yc = y.conj()
    e_yc2 = np.mean(yc * yc)
    return w - (x @ ((y * yc).real * yc)) / (2.0 * T) + 0.5 * e_yc2 * (pseudo_cov @ w.conj())


def km_fixed_point_step(w, x):
    """``E{|y|^2 y^* x} - 2 E{|y|^2} E{y^* x} - E{y^*2} E{y x}``."""
    T = x.shape[1]
    y = extractor_output(w, x)
    yc = y.conj()
    m2 = (y * yc).real
    return (x @ (m2 * yc)) / T - 2.0 * m2.mean() * (x @ yc) / T - np.mean(yc * yc) * (x @ y) / T


def _kurt_or_nan(y):
    try:
        return output_moments(y).kurtosis
    except DegenerateContrastError:
        return float("nan")


def run_baseline(kind, x, w0, config=None, orthogonal_to=None, pseudo_cov=None):
    """Iterate a baseline update with orthogonalization, normalization and stopping test.

    Returns an :class:`ExtractionReport` with the same conventions as the
    RobustICA engine; ``contrast_trajectory`` records the kurtosis for
    information only and ``mu_trajectory`` stays empty.
    """
    from .deflation import orthogonalize

    cfg = config or ExtractionConfig()
    x = as_block(x)
    L, T = x.shape
    kind = resolve_kind(kind, np.iscomplexobj(x))
    if kind == "nc_fastica" and pseudo_cov is None:
        pseudo_cov = pseudo_covariance(x)
    step = {
        "fastica_real": fastica_real_step,
        "fastica_complex_circular": fastica_complex_step,
        "nc_fastica": lambda w, x: nc_fastica_step(w, x, pseudo_cov),
        "km_fixed_point": km_fixed_point_step,
    }[kind]
    w = np.asarray(w0, dtype=np.complex128 if np.iscomplexobj(x) or np.iscomplexobj(w0) else np.float64)
    if w.shape != (L,):
        raise DimensionError("initial extracting vector", (L,), w.shape)
    if orthogonal_to is not None:
        w = orthogonalize(w, orthogonal_to)
    w = w / np.linalg.norm(w)
    per_it = per_iteration_flops(kind, np.iscomplexobj(x), L, T)
    tol = cfg.stop_tolerance(T)

    def report(w, passes, reason, traj):
        n = counted_iterations(passes, reason == "converged")
        return ExtractionReport(final_w=w, iterations=n, passes=passes, contrast_trajectory=traj,
                                mu_trajectory=[], stop_reason=reason, flops=n * per_it,
                                algorithm=kind, flops_per_iteration=per_it)

    traj = [_kurt_or_nan(extractor_output(w, x))]
    for n in range(1, cfg.max_iterations + 1):
        w_new = step(w, x)
        if orthogonal_to is not None:
            try:
                w_new = orthogonalize(w_new, orthogonal_to)
            except DegenerateDirectionError:
                return report(w, n - 1, "degenerate", traj)
        nrm = np.linalg.norm(w_new)
        if not (np.isfinite(nrm) and nrm > 0):
            return report(w, n - 1, "degenerate", traj)
        w_new = w_new / nrm
        th = abs(1.0 - abs(np.vdot(w, w_new)))
        w = w_new
        traj.append(_kurt_or_nan(extractor_output(w, x)))
        if th < tol:
            return report(w, n, "converged", traj)
    return report(w, cfg.max_iterations, "max_iterations", traj)
