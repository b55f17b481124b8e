"""Single-source extraction by exact line search of the kurtosis.

Each iteration takes the kurtosis gradient ``g`` at the current extracting
vector ``w`` and finds the step ``mu`` maximizing ``|K(w + mu g)|`` (or
``sign * K`` when a kurtosis sign is targeted).  Along the line the contrast
is the rational function ``P(mu) / Q(mu)^2 - 2`` whose derivative has the
quartic ``p(mu) = P'Q - 2PQ'`` as numerator, so the global line maximum is
one of the real parts of the roots of ``p``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import quartic
from .contrast import kurtosis_gradient, output_moments
from .exceptions import (DegenerateContrastError, DegenerateDirectionError,
                         DegeneratePolynomialError, DimensionError)
from .metrics import per_iteration_flops
from .signals import as_block, extractor_output

#: candidates whose score is within this relative margin of the best are tied
TIE_RTOL = 1e-11
#: gradients below this fraction of their largest term are treated as zero
STATIONARY_RTOL = 1e-12


def parse_sign(sign):
    """Map ``None``/'any'/'+'/'-'/0/1/-1 to 0, +1 or -1."""
    if sign is None:
        return 0
    if isinstance(sign, str):
        s = sign.strip().lower()
        table = {"any": 0, "": 0, "0": 0, "+": 1, "+1": 1, "pos": 1, "positive": 1,
                 "-": -1, "-1": -1, "neg": -1, "negative": -1}
        if s not in table:
            raise ValueError(f"bad kurtosis sign {sign!r}")
        return table[s]
    if sign not in (0, 1, -1):
        raise ValueError(f"bad kurtosis sign {sign!r}")
    return int(sign)


@dataclass(frozen=True)
class KurtosisStats:
    """Sample means entering the step polynomial.

    With ``a = y^2``, ``b = g^2``, ``c = y g`` and ``d = Re(y g^*)``.
    """

    e_abs_a_sq: float     # E|a|^2
    e_a: complex          # E a
    e_abs_a_d: float      # E|a| d
    e_c: complex          # E c
    e_d_sq: float         # E d^2
    e_abs_a_abs_b: float  # E|a||b|
    e_b: complex          # E b
    e_abs_b_d: float      # E|b| d
    e_abs_b_sq: float     # E|b|^2
    e_abs_a: float        # E|a|
    e_d: float            # E d
    e_abs_b: float        # E|b|


def kurtosis_stats(y, g):
    y = np.asarray(y)
    g = np.asarray(g)
    if y.shape != g.shape:
        raise ValueError(f"output and direction sequences differ in shape: {y.shape} vs {g.shape}")
    if y.size < 5:
        warnings.warn(f"only {y.size} samples: fourth-order statistics are unreliable", RuntimeWarning,
                      stacklevel=3)
    abs_a = (y * y.conj()).real
    abs_b = (g * g.conj()).real
    d = (y * g.conj()).real
    return KurtosisStats(
        e_abs_a_sq=float(np.mean(abs_a * abs_a)),
        e_a=np.mean(y * y),
        e_abs_a_d=float(np.mean(abs_a * d)),
        e_c=np.mean(y * g),
        e_d_sq=float(np.mean(d * d)),
        e_abs_a_abs_b=float(np.mean(abs_a * abs_b)),
        e_b=np.mean(g * g),
        e_abs_b_d=float(np.mean(abs_b * d)),
        e_abs_b_sq=float(np.mean(abs_b * abs_b)),
        e_abs_a=float(np.mean(abs_a)),
        e_d=float(np.mean(d)),
        e_abs_b=float(np.mean(abs_b)),
    )


def step_coefficients(h, i):
    """Coefficients a_0..a_4 of ``p = P'Q - 2PQ'`` from those of P and Q."""
    h0, h1, h2, h3, h4 = h
    i0, i1, i2 = i
    return np.array([
        -2 * h0 * i1 + h1 * i0,
        -4 * h0 * i2 - h1 * i1 + 2 * h2 * i0,
        -3 * h1 * i2 + 3 * h3 * i0,
        -2 * h2 * i2 + h3 * i1 + 4 * h4 * i0,
        -h3 * i2 + 2 * h4 * i1,
    ])


@dataclass(frozen=True)
class StepPolynomial:
    """Contrast along a line, ``K(mu) = P(mu)/Q(mu)^2 - 2``, and ``p``."""

    h: np.ndarray   # P, ascending powers, degree 4
    i: np.ndarray   # Q, ascending powers, degree 2
    a: np.ndarray   # p, ascending powers, degree 4

    def P(self, mu):
        return np.polynomial.polynomial.polyval(mu, self.h)

    def Q(self, mu):
        return np.polynomial.polynomial.polyval(mu, self.i)

    def p(self, mu):
        return np.polynomial.polynomial.polyval(mu, self.a)

    def kurtosis(self, mu):
        q = self.Q(mu)
        return self.P(mu) / (q * q) - 2.0

    def slope(self, mu):
        """dK/dmu = p(mu) / Q(mu)^3."""
        return self.p(mu) / self.Q(mu) ** 3


def os_coefficients(y, g):
    """Build the step polynomial for output ``y`` and direction output ``g``.

    ``g`` is the per-sample output of the search direction, ``g^H x``, so
    that the output at ``w + mu g`` is ``y + mu g``.
    """
    st = kurtosis_stats(y, g)
    h = np.array([
        st.e_abs_a_sq - abs(st.e_a) ** 2,
        4 * st.e_abs_a_d - 4 * (st.e_a * np.conj(st.e_c)).real,
        4 * st.e_d_sq + 2 * st.e_abs_a_abs_b - 4 * abs(st.e_c) ** 2 - 2 * (st.e_a * np.conj(st.e_b)).real,
        4 * st.e_abs_b_d - 4 * (st.e_b * np.conj(st.e_c)).real,
        st.e_abs_b_sq - abs(st.e_b) ** 2,
    ])
    i = np.array([st.e_abs_a, 2 * st.e_d, st.e_abs_b])
    return StepPolynomial(h=h, i=i, a=step_coefficients(h, i))


def select_root(sp, candidates, sign=0):
    """Best step among ``candidates`` (and 0) by ``|K|`` or ``sign * K``.

    ``candidates`` is a :class:`~robustica.quartic.RootSet` or an iterable of
    real steps.  Near-ties go to the smallest ``|mu|``; candidates where
    ``Q`` vanishes are skipped.
    """
    if isinstance(candidates, quartic.RootSet):
        candidates = candidates.real_candidates
    sign = parse_sign(sign)
    mus = np.unique(np.concatenate([[0.0], np.asarray(list(candidates), dtype=float)]))
    mus = mus[np.isfinite(mus)]
    q = sp.Q(mus)
    ok = q > 1e-300 * max(1.0, sp.i[0])
    mus, q = mus[ok], q[ok]
    if mus.size == 0:
        raise DegenerateContrastError("no admissible step candidate")
    k = sp.P(mus) / (q * q) - 2.0
    score = np.abs(k) if sign == 0 else sign * k
    finite = np.isfinite(score)
    if not finite.any():
        raise DegenerateContrastError("contrast is not finite at any candidate")
    mus, score = mus[finite], score[finite]
    best = score.max()
    tied = score >= best - TIE_RTOL * max(1.0, abs(best))
    return float(mus[tied][np.argmin(np.abs(mus[tied]))])


@dataclass
class ExtractionConfig:
    """Settings of one extraction run.

    The stopping threshold is ``eta / T`` unless ``tolerance`` is given.
    ``eta = 0`` disables the test, giving exactly ``max_iterations``
    iterations.
    """

    max_iterations: int = 1000
    eta: float = 0.5e-6
    tolerance: float | None = None
    kurtosis_sign: int = 0
    normalize_gradient: bool = True
    init: str = "canonical"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 <= self.eta < 1:
            raise ValueError("eta must lie in [0, 1)")
        if self.init not in ("canonical", "random"):
            raise ValueError(f"unknown init policy {self.init!r}")
        self.kurtosis_sign = parse_sign(self.kurtosis_sign)

    def stop_tolerance(self, T):
        return self.tolerance if self.tolerance is not None else self.eta / T


@dataclass
class ExtractionReport:
    """Trace of one extraction.

    ``iterations`` counts the updates needed to reach the returned vector:
    when the stopping test fires, the pass that detected convergence moved
    ``w`` by less than the tolerance and is not counted (at least one
    iteration is always reported).  ``passes`` is the raw loop count.
    """

    final_w: np.ndarray
    iterations: int
    passes: int
    contrast_trajectory: list
    mu_trajectory: list
    stop_reason: str
    flops: int
    algorithm: str = "robustica"
    kurtosis_sign: int = 0
    flops_per_iteration: int = 0

    @property
    def final_kurtosis(self):
        return self.contrast_trajectory[-1] if self.contrast_trajectory else float("nan")

    @property
    def sign_mismatch(self):
        """Targeted extraction ended on a contrast of the wrong sign."""
        return bool(self.kurtosis_sign and np.sign(self.final_kurtosis) != self.kurtosis_sign)

    def csv_rows(self):
        rows = [(0, "", self.contrast_trajectory[0] if self.contrast_trajectory else "", 0)]
        for n, k in enumerate(self.contrast_trajectory[1:], 1):
            mu = self.mu_trajectory[n - 1] if n - 1 < len(self.mu_trajectory) else ""
            rows.append((n, mu, k, n * self.flops_per_iteration))
        return rows

    def write_csv(self, fh):
        fh.write("iteration,mu,kurtosis,flops\n")
        for row in self.csv_rows():
            fh.write(",".join("" if v == "" else repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")

    def to_log(self):
        lines = [f"algorithm={self.algorithm} sign={self.kurtosis_sign:+d} stop={self.stop_reason} "
                 f"iterations={self.iterations} passes={self.passes} flops={self.flops}"]
        for n, mu, k, fl in self.csv_rows():
            lines.append(f"iter={n} mu={mu if mu == '' else format(mu, '.6g')} kurtosis={k:.10g} flops={fl}")
        if self.sign_mismatch:
            lines.append("warning: final kurtosis sign differs from the target")
        return "\n".join(lines)


def project_out(v, basis):
    """``v - B B^H v`` for a matrix ``B`` with orthonormal columns."""
    if basis is None or basis.shape[1] == 0:
        return v
    return v - basis @ (basis.conj().T @ v)


def counted_iterations(passes, converged):
    return max(1, passes - 1) if converged else passes


def extract_one(x, w0, config=None, orthogonal_to=None):
    """Extract one source from ``x`` starting at ``w0``.

    ``orthogonal_to`` is an optional matrix with orthonormal columns (the
    previously found extracting vectors) that the solution must stay
    orthogonal to.  The search direction is projected onto the orthogonal
    complement before the line search, so the step is optimal within the
    admissible subspace; the updated vector is orthogonalized again after
    the step to remove round-off.
    """
    from .deflation import orthogonalize

    cfg = config or ExtractionConfig()
    x = as_block(x)
    L, T = x.shape
    w = np.asarray(w0)
    w = w.astype(np.complex128 if np.iscomplexobj(w) or np.iscomplexobj(x) else np.float64)
    if w.shape != (L,):
        raise DimensionError("initial extracting vector", (L,), w.shape)
    if orthogonal_to is not None:
        w = orthogonalize(w, orthogonal_to)
    nrm = np.linalg.norm(w)
    if not nrm > 0:
        raise ValueError("initial extracting vector must be nonzero")
    w = w / nrm

    per_it = per_iteration_flops("robustica", np.iscomplexobj(x), L, T)
    tol = cfg.stop_tolerance(T)
    sign = cfg.kurtosis_sign

    def report(w, passes, reason, traj, mus):
        n = counted_iterations(passes, reason == "converged")
        return ExtractionReport(final_w=w, iterations=n, passes=passes, contrast_trajectory=traj,
                                mu_trajectory=mus, stop_reason=reason, flops=n * per_it,
                                algorithm="robustica", kurtosis_sign=sign, flops_per_iteration=per_it)

    y = extractor_output(w, x)
    try:
        traj = [output_moments(y).kurtosis]
    except DegenerateContrastError:
        return report(w, 0, "degenerate", [], [])
    mus = []
    for n in range(1, cfg.max_iterations + 1):
        grad, scale = kurtosis_gradient(w, x, y, return_scale=True)
        g = project_out(grad, orthogonal_to)
        # the component along w is zero by scale invariance; drop its round-off
        g = g - w * np.vdot(w, g)
        gn = np.linalg.norm(g)
        if not np.isfinite(gn):
            return report(w, n - 1, "degenerate", traj, mus)
        if gn <= STATIONARY_RTOL * scale:
            # stationary point within the admissible subspace
            mus.append(0.0)
            traj.append(traj[-1])
            return report(w, n, "converged", traj, mus)
        if cfg.normalize_gradient:
            g = g / gn
        gy = extractor_output(g, x)
        sp = os_coefficients(y, gy)
        try:
            cands = quartic.solve(sp.a).real_candidates
        except DegeneratePolynomialError:
            cands = ()          # contrast constant along the line
        try:
            mu = select_root(sp, cands, sign)
        except DegenerateContrastError:
            return report(w, n - 1, "degenerate", traj, mus)
        w_new = w + mu * g
        if orthogonal_to is not None:
            try:
                w_new = orthogonalize(w_new, orthogonal_to)
            except DegenerateDirectionError:
                return report(w, n - 1, "degenerate", traj, mus)
        w_new = w_new / np.linalg.norm(w_new)
        th = abs(1.0 - abs(np.vdot(w, w_new)))
        y_new = extractor_output(w_new, x)
        try:
            traj.append(output_moments(y_new).kurtosis)
        except DegenerateContrastError:
            return report(w, n - 1, "degenerate", traj, mus)
        w, y = w_new, y_new
        mus.append(mu)
        if th < tol:
            return report(w, n, "converged", traj, mus)
    return report(w, cfg.max_iterations, "max_iterations", traj, mus)
