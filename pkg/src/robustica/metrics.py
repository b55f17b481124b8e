"""Separation quality and cost metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateContrastError, DimensionError
from .signals import as_block

#: dB value reported for an exact (zero-error) match
DB_FLOOR = -300.0


def to_db(v):
    with np.errstate(divide="ignore"):
        return np.maximum(10.0 * np.log10(v), DB_FLOOR)


@dataclass(frozen=True)
class SmseResult:
    """Greedy source/estimate pairing with per-pair SMSE.

    ``per_pair`` holds ``(source, estimate, smse_db)`` in selection order.
    """

    per_pair: list
    average: float
    matrix: np.ndarray = field(repr=False)

    @property
    def average_db(self):
        return float(to_db(self.average))

    @property
    def pairing(self):
        """``pairing[k]`` is the estimate index matched to source ``k``."""
        out = [-1] * self.matrix.shape[0]
        for k, l, _ in self.per_pair:
            out[k] = l
        return out


def smse_matrix(sources, estimates):
    """All pairwise E|s_k - alpha s_hat_l|^2 with the optimal alpha.

    Rows are sources, columns estimates.  Sources are assumed unit power, so
    the values read directly as relative errors.  Zero-power estimates give
    ``inf`` in their column.
    """
    s = as_block(sources, "sources")
    e = as_block(estimates, "estimates")
    if s.shape[1] != e.shape[1]:
        raise DimensionError("estimates", ("K'", s.shape[1]), e.shape)
    # entrywise means rather than a matmul: BLAS rounding depends on the column
    # position, which would break exact invariance under permutation
    cross = np.mean(s[:, None, :] * e[None, :, :].conj(), axis=2)   # E{s_k s_hat_l^*}
    p_s = np.mean(np.abs(s) ** 2, axis=1)
    p_e = np.mean(np.abs(e) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = p_s[:, None] - np.abs(cross) ** 2 / p_e[None, :]
    m = np.where(p_e[None, :] > 0, np.maximum(m, 0.0), np.inf)
    return m


def smse(sources, estimates):
    """Average signal mean square error after greedy pairing.

    The smallest entry of the pairwise SMSE matrix is selected, its row and
    column are removed and the process repeats.  The linear average over the
    selected pairs is returned; see :attr:`SmseResult.average_db`.
    """
    m = smse_matrix(sources, estimates)
    live = np.ones(m.shape, dtype=bool)
    pairs = []
    for _ in range(min(m.shape)):
        # nanargmin would map masked cells to +inf and tie them with inf entries
        idx = np.flatnonzero(live)
        k, l = np.unravel_index(idx[np.argmin(m.ravel()[idx])], m.shape)
        pairs.append((int(k), int(l), float(to_db(m[k, l]))))
        live[k, :] = False
        live[:, l] = False
    avg = float(np.mean([m[k, l] for k, l, _ in pairs]))
    return SmseResult(per_pair=pairs, average=avg, matrix=m)


def circularity_ratio(s):
    """|E s^2| / E|s|^2: 1 for real-valued or BPSK-like, ~0 for circular."""
    s = np.asarray(s)
    power = np.mean(np.abs(s) ** 2)
    if not power > 0:
        raise DegenerateContrastError("zero-power signal")
    return float(abs(np.mean(s * s)) / power)


# ----------------------------------------------------------------------------
# flop accounting

_PER_SAMPLE = {
    ("robustica", False): lambda L: 5 * L + 12,
    ("robustica", True): lambda L: 18 * L + 22,
    ("fastica", False): lambda L: 2 * L + 2,
    ("fastica", True): lambda L: 8 * L + 4,
    ("nc_fastica", True): lambda L: 8 * L + 4,
    ("kmf", False): lambda L: 14 * L + 5,
    ("kmf", True): lambda L: 14 * L + 5,
}

_ALIASES = {
    "robustica": "robustica",
    "fastica": "fastica",
    "fastica_real": "fastica",
    "fastica_complex_circular": "fastica",
    "nc_fastica": "nc_fastica",
    "nc-fastica": "nc_fastica",
    "kmf": "kmf",
    "km_fixed_point": "kmf",
}


def _canonical(kind, complex_):
    try:
        k = _ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown algorithm {kind!r}") from None
    if k == "nc_fastica" and not complex_:
        k = "fastica"
    return k


def per_iteration_flops(kind, complex_, L, T):
    """Dominant real flops of one iteration on an L x T block."""
    return _PER_SAMPLE[(_canonical(kind, complex_), bool(complex_))](L) * T


def prewhitening_flops(complex_, K, T):
    return (8 if complex_ else 2) * K * K * T


def setup_flops(kind, complex_, L, T):
    """One-off cost charged before the first iteration (pseudo-covariance)."""
    if _canonical(kind, complex_) == "nc_fastica":
        return L * (2 * L + 1) * T
    return 0


@dataclass(frozen=True)
class FlopLedger:
    per_iteration: int
    per_source: tuple
    prewhitening: int = 0
    setup: int = 0

    @property
    def total(self):
        return int(sum(self.per_source) + self.prewhitening + self.setup)

    def per_source_per_sample(self, T):
        return self.total / (len(self.per_source) * T)


def flops_for(kind, complex_, L, T, iterations, prewhitened=False, K=None):
    """Cost model of a deflationary extraction.

    ``iterations`` is a single count applied to every source or a sequence of
    per-source counts.  ``L`` is the dimension the iterations run in (K after
    prewhitening).
    """
    if np.isscalar(iterations):
        n_src = K if K is not None else L
        iterations = [int(iterations)] * n_src
    K = len(iterations) if K is None else K
    per_it = per_iteration_flops(kind, complex_, L, T)
    return FlopLedger(
        per_iteration=per_it,
        per_source=tuple(per_it * int(n) for n in iterations),
        prewhitening=prewhitening_flops(complex_, K, T) if prewhitened else 0,
        setup=setup_flops(kind, complex_, L, T),
    )
