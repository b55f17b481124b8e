"""Closed-form roots of real polynomials of degree at most four.

Quartics go through Ferrari's resolvent cubic, cubics through Cardano's
formula and quadratics through the cancellation-free form of the usual
formula.  Everything runs in complex arithmetic so that one code path
covers every discriminant sign; each root then gets a single Newton
correction against the (effective-degree) polynomial.  Roots of very
different magnitudes are resolved by also solving the reversed polynomial
and deflating one extreme root at a time.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneratePolynomialError

#: |a_k| <= DEMOTE_RTOL * max|a| makes a_k count as zero for the leading term
DEMOTE_RTOL = 1e-12
#: real parts closer than this are merged in ``real_candidates``
DEDUP_ATOL = 1e-10

_OMEGA = complex(-0.5, np.sqrt(3.0) / 2.0)


@dataclass(frozen=True)
class RootSet:
    roots: tuple = ()
    real_candidates: tuple = field(default=())

    @property
    def degree(self):
        return len(self.roots)

    @property
    def empty(self):
        """True when the polynomial was a nonzero constant (no candidates)."""
        return not self.roots


def effective_degree(coeffs, rtol=DEMOTE_RTOL):
    a = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(a))
    if scale == 0.0 or not np.isfinite(scale):
        if scale == 0.0:
            raise DegeneratePolynomialError("all polynomial coefficients are zero")
        raise ValueError("polynomial coefficients must be finite")
    deg = len(a) - 1
    while deg > 0 and abs(a[deg]) <= rtol * scale:
        deg -= 1
    return deg


def _cbrt(z):
    """Principal complex cube root, exact-sign real root for real input."""
    if z.imag == 0.0:
        return complex(np.cbrt(z.real))
    return z ** (1.0 / 3.0)


def _quadratic(b, c):
    # x^2 + b x + c
    sq = cmath.sqrt(b * b - 4.0 * c)
    u = b + sq if abs(b + sq) >= abs(b - sq) else b - sq
    if u == 0:
        return [0j, 0j]
    q = -0.5 * u
    return [q, c / q]


def _cubic(a, b, c):
    # x^3 + a x^2 + b x + c via depressed t^3 + p t + q
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = cmath.sqrt((q / 2.0) ** 2 + (p / 3.0) ** 3)
    v = -q / 2.0 + disc if abs(-q / 2.0 + disc) >= abs(-q / 2.0 - disc) else -q / 2.0 - disc
    u = _cbrt(complex(v))
    if u == 0:
        t = [0j, 0j, 0j]
    else:
        t = []
        for k in range(3):
            uk = u * _OMEGA ** k
            t.append(uk - p / (3.0 * uk))
    return [r - shift for r in t]


def _quartic(b, c, d, e):
    # x^4 + b x^3 + c x^2 + d x + e, x = t - b/4, t^4 + p t^2 + q t + r
    shift = b / 4.0
    b2 = b * b
    p = c - 3.0 * b2 / 8.0
    q = d - b * c / 2.0 + b2 * b / 8.0
    r = e - b * d / 4.0 + b2 * c / 16.0 - 3.0 * b2 * b2 / 256.0
    m = 0j
    if q != 0.0:
        # resolvent m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0
        m = max(_cubic(p, p * p / 4.0 - r, -q * q / 8.0), key=abs)
    if m == 0:
        t = []
        for z in _quadratic(p, r):
            s = cmath.sqrt(z)
            t.extend([s, -s])
    else:
        s = cmath.sqrt(2.0 * m)
        half = p / 2.0 + m
        k = q / (2.0 * s)
        t = _quadratic(-s, half + k) + _quadratic(s, half - k)
    return [x - shift for x in t]


def _horner(coeffs, z):
    """p(z) and p'(z) for ascending ``coeffs``."""
    val, der = 0j, 0j
    for a in reversed(coeffs):
        der = der * z + val
        val = val * z + a
    return val, der


def _polish(coeffs, z):
    val, der = _horner(coeffs, z)
    if der == 0 or val == 0:
        return z
    cand = z - val / der
    if abs(_horner(coeffs, cand)[0]) <= abs(val):
        return cand
    return z


def _closed_form(a):
    """Closed-form roots of the polynomial with ascending coefficients ``a``."""
    deg = len(a) - 1
    mon = [v / a[deg] for v in a]
    if deg == 1:
        return [complex(-mon[0])]
    if deg == 2:
        return _quadratic(mon[1], mon[0])
    if deg == 3:
        return _cubic(mon[2], mon[1], mon[0])
    return _quartic(mon[3], mon[2], mon[1], mon[0])


def _root_scale(a):
    """Power of two near Fujiwara's bound on the root magnitudes of ``a``.

    Substituting ``mu = sigma * nu`` brings the roots to order one without
    rounding, which keeps the closed-form steps away from under/overflow.
    """
    n = len(a) - 1
    bound = max(abs(a[k] / a[n]) ** (1.0 / (n - k)) for k in range(n))
    return 2.0 ** round(np.log2(bound)) if bound > 0 else 1.0


def _relative_residual(a, z):
    return abs(_horner(a, z)[0]) / residual_bound(a, z)


def _reciprocal_roots(a):
    """Roots of ``a`` obtained from the reversed polynomial (accurate for small roots)."""
    rev = a[::-1]
    rdeg = effective_degree(rev)
    if rdeg == 0:
        return []
    try:
        with np.errstate(all="ignore"):
            out = [1.0 / z for z in _closed_form(rev[: rdeg + 1])]
    except (OverflowError, ZeroDivisionError):
        return []
    return [z for z in out if cmath.isfinite(z)]


def _long_divide(a, f):
    """Quotient of ascending ``a`` by ascending ``f`` (remainder dropped)."""
    a = list(a)
    n = len(a) - len(f) + 1
    q = [0.0] * n
    for k in range(n - 1, -1, -1):
        q[k] = a[k + len(f) - 1] / f[-1]
        for j, fj in enumerate(f):
            a[k + j] -= q[k] * fj
    return q


def _divide(a, factor, from_top):
    """Quotient of ``a`` by ``factor`` (ascending coefficients, exact division assumed).

    Dividing from the top is stable for small roots, from the bottom (the
    same division on reversed coefficients) for large ones.
    """
    if from_top or factor[0] == 0.0:
        return _long_divide(a, factor)
    return _long_divide(a[::-1], factor[::-1])[::-1]


def _deflating_roots(a):
    """Roots of ``a`` (nonzero constant and leading terms), one extreme root at a time.

    The shift in Ferrari's and Cardano's reductions wipes out roots that are
    tiny next to the others, while the reversed polynomial resolves exactly
    those.  The largest direct root and the smallest reciprocal root are
    therefore both accurate; the better of the two (or its conjugate pair)
    is divided out and the rest solved the same way.
    """
    zeros = 0
    while a[zeros] == 0.0:
        zeros += 1
    if zeros:
        return [0j] * zeros + _deflating_roots(a[zeros:])
    deg = len(a) - 1
    if deg == 0:
        return []
    if deg <= 2:
        return _closed_form(a)
    candidates = [(max(_closed_form(a), key=abs), False)]
    small = _reciprocal_roots(a)
    # a demoted reversed polynomial means roots closer to zero exist; its
    # smallest root is then not extreme and dividing it out is unstable
    if len(small) == deg:
        candidates.append((min(small, key=abs), True))
    root, from_top = min(candidates, key=lambda c: _relative_residual(a, _polish(a, c[0])))
    root = _polish(a, root)
    if abs(root.imag) > 1e-12 * abs(root):
        found = [root, root.conjugate()]
        factor = [abs(root) ** 2, -2.0 * root.real, 1.0]
    else:
        found = [complex(root.real)]
        factor = [-root.real, 1.0]
    rest = _divide(a, factor, from_top)
    return found + _deflating_roots(rest)


def solve(coeffs):
    """Roots of ``sum(coeffs[k] * mu**k)`` for ``len(coeffs) <= 5``.

    Leading coefficients below ``DEMOTE_RTOL * max|a|`` are dropped, so a
    numerically vanishing quartic term turns the problem into a cubic and so
    on.  A nonzero constant yields an empty :class:`RootSet`; an all-zero
    polynomial raises :class:`DegeneratePolynomialError`.  Exactly vanishing
    low-order coefficients give exact zero roots.
    """
    a = [float(v) for v in coeffs]
    if len(a) > 5:
        raise ValueError("degree > 4 is not supported")
    deg = effective_degree(a)
    if deg == 0:
        return RootSet()
    a = a[: deg + 1]
    zeros = 0
    while a[zeros] == 0.0:
        zeros += 1
    roots = [0j] * zeros
    if zeros < deg:
        core = a[zeros:]
        sigma = _root_scale(core)
        scaled = [v * sigma ** k for k, v in enumerate(core)]
        top = max(abs(v) for v in scaled)
        scaled = [v / top for v in scaled]
        roots += [_polish(core, complex(z) * sigma) for z in _deflating_roots(scaled)]
    roots = tuple(roots)
    return RootSet(roots=roots, real_candidates=dedup_real(roots))


def dedup_real(roots, atol=DEDUP_ATOL):
    out = []
    for x in sorted(z.real for z in roots):
        if not out or x - out[-1] > atol:
            out.append(x)
    return tuple(out)


def residual_bound(coeffs, root):
    """Tolerance on |p(root)| accepted for a computed root."""
    return 1e-8 * max(abs(float(v)) for v in coeffs) * max(1.0, abs(root)) ** 4
