"""Synthetic scenarios: source constellations and random mixing matrices."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .exceptions import ConfigError
from .signals import MixingModel, givens, make_rng

SOURCE_KINDS = ("uniform", "bpsk", "qam4", "gaussian")
MIXING_KINDS = ("identity", "givens", "orthogonal", "unitary", "general")


def make_sources(kind, K, T, rng, complex_=False):
    """K x T zero-mean unit-power i.i.d. sources.

    ``uniform`` is uniform on [-sqrt 3, sqrt 3]; in the complex regime its
    real and imaginary parts are independent uniforms scaled to unit total
    power.  ``bpsk`` is +-1 in both regimes, which makes it the canonical
    non-circular source when stored as complex.  ``qam4`` is the circular
    constellation (+-1 +-j)/sqrt 2 and is always complex.
    """
    if kind == "uniform":
        if complex_:
            s = rng.uniform(-np.sqrt(3), np.sqrt(3), (2, K, T)) / np.sqrt(2)
            return s[0] + 1j * s[1]
        return rng.uniform(-np.sqrt(3), np.sqrt(3), (K, T))
    if kind == "bpsk":
        s = rng.choice(np.array([-1.0, 1.0]), size=(K, T))
        return s.astype(np.complex128) if complex_ else s
    if kind == "qam4":
        b = rng.choice(np.array([-1.0, 1.0]), size=(2, K, T))
        return (b[0] + 1j * b[1]) / np.sqrt(2)
    if kind == "gaussian":
        if complex_:
            return (rng.standard_normal((K, T)) + 1j * rng.standard_normal((K, T))) / np.sqrt(2)
        return rng.standard_normal((K, T))
    raise ConfigError(f"unknown source kind {kind!r}")


def random_orthogonal(n, rng):
    """Haar orthogonal matrix: QR of a Gaussian matrix with positive diag(R)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def make_mixing(kind, L, K, rng):
    if kind == "identity":
        return np.eye(L, K)
    if kind == "givens":
        if (L, K) != (2, 2):
            raise ConfigError("givens mixing needs K = L = 2")
        return givens(rng.uniform(0.0, 2 * np.pi))
    if kind == "orthogonal":
        return random_orthogonal(L, rng)[:, :K]
    if kind == "unitary":
        return random_unitary(L, rng)[:, :K]
    if kind == "general":
        return rng.standard_normal((L, K))
    raise ConfigError(f"unknown mixing kind {kind!r}")


@dataclass(frozen=True)
class Scenario:
    sources: str = "uniform"
    K: int = 2
    L: int | None = None
    T: int = 50
    mixing: str = "givens"
    complex: bool | None = None
    snr_db: float | None = None
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.sources not in SOURCE_KINDS:
            raise ConfigError(f"unknown source kind {self.sources!r}")
        if self.mixing not in MIXING_KINDS:
            raise ConfigError(f"unknown mixing kind {self.mixing!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.K < 1 or self.T < 1 or self.n_sensors < self.K:
            raise ConfigError(f"invalid dimensions K={self.K} L={self.L} T={self.T}")

    @property
    def n_sensors(self):
        return self.K if self.L is None else self.L

    @property
    def is_complex(self):
        """Complex regime: explicit flag, else unitary mixing or QAM sources."""
        if self.complex is not None:
            return bool(self.complex)
        return self.mixing == "unitary" or self.sources == "qam4"

    @property
    def noise_power(self):
        # SNR = trace(H H^H) / (sigma^2 L) = 1 / sigma^2 for orthonormal H with K = L
        return 0.0 if self.snr_db is None else 10.0 ** (-self.snr_db / 10.0)

    @property
    def white_mixture(self):
        """Mixing with orthonormal columns: the noiseless observations are already white."""
        return self.mixing in ("identity", "givens", "orthogonal", "unitary")


def generate(sc, trial):
    """Sources and mixing model of one trial; deterministic in (seed, trial)."""
    if not 0 <= trial < sc.trials:
        raise ValueError(f"trial {trial} outside [0, {sc.trials})")
    rng = make_rng(sc.seed, trial)
    H = make_mixing(sc.mixing, sc.n_sensors, sc.K, rng)
    s = make_sources(sc.sources, sc.K, sc.T, rng, sc.is_complex)
    if sc.is_complex:
        H = H.astype(np.complex128)
    return s, MixingModel(H=H, noise_power=sc.noise_power)


def noise_seed(sc, trial):
    """Seed for the observation noise of a trial (separate from the source stream)."""
    return int(make_rng(sc.seed, trial, 1).integers(0, 2 ** 63))


# ----------------------------------------------------------------------------
# key = value configuration files

def read_keyvalue(path):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns ``{key: (value, lineno)}``.  Raises :class:`ConfigError` with the
    offending line number on malformed lines or duplicate keys.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError("empty key", line=lineno)
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", line=lineno)
            out[key] = (value, lineno)
    return out


def _convert(name, typ, value, lineno):
    try:
        if typ is bool:
            v = value.lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if value.lower() in ("none", ""):
            return None
        return typ(value)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}", line=lineno) from None


_SCENARIO_TYPES = {"sources": str, "K": int, "L": int, "T": int, "mixing": str, "complex": bool,
                   "snr_db": float, "trials": int, "seed": int}


def scenario_from_mapping(entries, **overrides):
    """Build a :class:`Scenario` from ``read_keyvalue`` output (unknown keys ignored)."""
    kw = {}
    for f in fields(Scenario):
        if f.name in entries:
            value, lineno = entries[f.name]
            v = _convert(f.name, _SCENARIO_TYPES[f.name], value, lineno)
            if v is None and f.name not in ("L", "complex", "snr_db"):
                raise ConfigError(f"missing value for {f.name}", line=lineno)
            if f.name == "trials" and v < 1:
                raise ConfigError("trials must be at least 1", line=lineno)
            kw[f.name] = v
    kw.update(overrides)
    return Scenario(**kw)


def load_scenario(path, **overrides):
    return scenario_from_mapping(read_keyvalue(path), **overrides)
