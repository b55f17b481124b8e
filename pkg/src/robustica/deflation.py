"""Prewhitening and deflation: extracting several sources one at a time."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import baselines
from .exceptions import (ConfigError, DegenerateContrastError,
                         DegenerateDirectionError, RankDeficientError)
from .extraction import ExtractionConfig, extract_one, parse_sign
from .metrics import FlopLedger, prewhitening_flops, setup_flops
from .signals import as_block, extractor_output, make_rng

MODES = ("orthogonalization", "regression")
_MODE_ALIASES = {"ortho": "orthogonalization", "orthogonalization": "orthogonalization",
                 "regression": "regression", "reg": "regression"}
#: attempts with a fresh random start after a degenerate extraction
MAX_RETRIES = 3


@dataclass(frozen=True)
class Prewhitener:
    """Linear map to whitened coordinates and its reconstruction inverse."""

    transform: np.ndarray  # K x L
    reverse: np.ndarray    # L x K

    @property
    def retained_dimension(self):
        return self.transform.shape[0]

    def apply(self, x):
        return self.transform @ x


def prewhiten(x, k=None):
    """Whiten ``x`` through its economy SVD.

    Returns ``(Prewhitener, z)`` where ``z`` is k x T with identity sample
    covariance (1/T normalization, no centering).
    """
    x = as_block(x)
    L, T = x.shape
    k = L if k is None else int(k)
    if not 1 <= k <= L:
        raise ValueError(f"target dimension {k} outside [1, {L}]")
    U, s, Vh = np.linalg.svd(x, full_matrices=False)
    rank = int(np.sum(s > s[0] * max(L, T) * np.finfo(float).eps)) if s[0] > 0 else 0
    if rank < k:
        raise RankDeficientError(k, rank)
    scale = np.sqrt(T)
    transform = (scale / s[:k])[:, None] * U[:, :k].conj().T
    reverse = U[:, :k] * (s[:k] / scale)
    return Prewhitener(transform=transform, reverse=reverse), scale * Vh[:k]


def orthogonalize(w, basis):
    """Gram-Schmidt ``w - B B^H w`` against the orthonormal columns of ``B``.

    Raises :class:`DegenerateDirectionError` if nothing is left of ``w``.
    """
    w = np.asarray(w)
    if basis is None or basis.shape[1] == 0:
        return w
    nrm = np.linalg.norm(w)
    out = w - basis @ (basis.conj().T @ w)
    if np.linalg.norm(out) < 0.5 * nrm:
        # second pass restores orthogonality lost to cancellation
        out = out - basis @ (basis.conj().T @ out)
    if not np.linalg.norm(out) >= 1e-12 * max(nrm, 1e-300):
        raise DegenerateDirectionError("vector lies in the span of the previous extracting vectors")
    return out


def regress_deflate(x, s_hat):
    """Remove the MMSE contribution of ``s_hat`` from every channel of ``x``.

    Returns ``(h_hat, x - h_hat s_hat)`` with ``h_hat = E{x s_hat^*} / E|s_hat|^2``.
    """
    x = as_block(x)
    s_hat = np.asarray(s_hat)
    p = np.mean(np.abs(s_hat) ** 2)
    if not p > 1e-300:
        raise DegenerateContrastError("estimated source has zero power")
    h = (x @ s_hat.conj()) / (x.shape[1] * p)
    return h, x - np.outer(h, s_hat)


@dataclass
class Separation:
    """Result of :func:`extract_all`.

    ``sources`` holds the estimates row by row in extraction order;
    ``mixing`` the regression estimates of the corresponding mixing columns
    (observation coordinates).  ``extracting`` maps observations to source
    estimates (``sources ~ extracting^H x``) in orthogonalization mode and is
    None in regression mode, where later estimates come from deflated data.
    """

    sources: np.ndarray
    reports: list
    mixing: np.ndarray
    extracting: np.ndarray | None
    prewhitener: Prewhitener | None
    flops: FlopLedger
    mode: str
    algorithm: str

    @property
    def iterations(self):
        return [r.iterations for r in self.reports]


def _random_start(rng, n, complex_):
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def extract_all(x, n_sources=None, algorithm="robustica", deflation="regression", prewhiten_data=False,
                config=None, signs=None, assume_white=False):
    """Extract ``n_sources`` components one after another.

    Parameters
    ----------
    x : ndarray, L x T
        Observations.
    algorithm : str
        ``robustica`` or a baseline (``fastica``, ``nc_fastica``, ``kmf``).
    deflation : str
        ``orthogonalization`` (alias ``ortho``) or ``regression``.
    prewhiten_data : bool
        Whiten with :func:`prewhiten` to ``n_sources`` dimensions first.
    signs : sequence, optional
        Per-source kurtosis sign targets (``'+'``, ``'-'`` or ``'any'``);
        sources past the end of the list use ``config.kurtosis_sign``.
    assume_white : bool
        Declare unwhitened input as already white (e.g. an orthogonal or
        unitary noiseless mixture).  Baselines refuse to run otherwise.
    """
    x = as_block(x)
    cfg = config or ExtractionConfig()
    mode = _MODE_ALIASES.get(deflation)
    if mode is None:
        raise ConfigError(f"unknown deflation mode {deflation!r}")
    algo = algorithm.replace("-", "_").lower()
    is_robust = algo == "robustica"
    complex_ = np.iscomplexobj(x)
    if not is_robust:
        baselines.resolve_kind(algo, complex_)
        if not (prewhiten_data or assume_white):
            raise ConfigError(f"{algorithm} requires prewhitened data (enable prewhitening or assume_white)")
        if mode != "orthogonalization":
            raise ConfigError(f"{algorithm} only supports deflationary orthogonalization")
    L, T = x.shape
    n = L if n_sources is None else int(n_sources)
    if not 1 <= n <= L:
        raise ValueError(f"cannot extract {n} sources from {L} channels")

    pw = None
    data = x
    if prewhiten_data:
        pw, data = prewhiten(x, n)
    dim = data.shape[0]
    rng = make_rng(cfg.seed, 0x5EED)
    sign_list = [parse_sign(s) for s in (signs or [])]
    pseudo_cov = baselines.pseudo_covariance(data) if algo in ("nc_fastica",) else None

    W = np.zeros((dim, 0), dtype=data.dtype)
    work = data
    estimates, reports, mixing = [], [], []
    for k in range(n):
        sign = sign_list[k] if k < len(sign_list) else cfg.kurtosis_sign
        run_cfg = ExtractionConfig(max_iterations=cfg.max_iterations, eta=cfg.eta, tolerance=cfg.tolerance,
                                   kurtosis_sign=sign, normalize_gradient=cfg.normalize_gradient,
                                   init=cfg.init, seed=cfg.seed)
        basis = W if mode == "orthogonalization" and W.shape[1] else None
        if cfg.init == "canonical":
            w0 = np.zeros(dim, dtype=data.dtype)
            w0[k % dim] = 1.0
        else:
            w0 = _random_start(rng, dim, complex_)
        rep = None
        for attempt in range(MAX_RETRIES + 1):
            try:
                if is_robust:
                    rep = extract_one(work, w0, run_cfg, orthogonal_to=basis)
                else:
                    rep = baselines.run_baseline(algo, work, w0, run_cfg, orthogonal_to=basis,
                                                 pseudo_cov=pseudo_cov)
            except (DegenerateDirectionError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                rep = None
            if rep is not None and rep.stop_reason != "degenerate":
                break
            w0 = _random_start(rng, dim, complex_)
        if rep is None:
            raise DegenerateDirectionError(f"could not find a valid start for source {k}")
        w = rep.final_w
        s_hat = extractor_output(w, work)
        estimates.append(s_hat)
        reports.append(rep)
        if mode == "regression":
            h_hat, work = regress_deflate(work, s_hat)
            if pw is not None:
                h_hat = pw.reverse @ h_hat
        else:
            W = np.column_stack([W, w])
            h_hat = regress_deflate(x, s_hat)[0]
        mixing.append(h_hat)

    S = np.array(estimates)
    ledger = FlopLedger(
        per_iteration=reports[0].flops_per_iteration,
        per_source=tuple(r.flops for r in reports),
        prewhitening=prewhitening_flops(complex_, n, T) if pw is not None else 0,
        setup=setup_flops(algo, complex_, dim, T),
    )
    H_hat = np.array(mixing).T
    extracting = None
    if mode == "orthogonalization":
        extracting = pw.transform.conj().T @ W if pw is not None else W
    return Separation(sources=S, reports=reports, mixing=H_hat, extracting=extracting, prewhitener=pw,
                      flops=ledger, mode=mode, algorithm=algo)
