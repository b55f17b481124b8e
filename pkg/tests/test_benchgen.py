import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustica.benchgen import (Scenario, generate, load_scenario, make_mixing, make_sources,
                                noise_seed, random_orthogonal, random_unitary, read_keyvalue)
from robustica.contrast import output_moments


def kurtosis(y):
    return output_moments(y).kurtosis
from robustica.exceptions import ConfigError
from robustica.metrics import circularity_ratio
from robustica.signals import givens, mix


def test_givens_zero_is_identity():
    np.testing.assert_array_equal(givens(0.0), np.eye(2))


@given(theta=st.floats(-10, 10))
def test_givens_is_a_rotation(theta):
    g = givens(theta)
    np.testing.assert_allclose(g.T @ g, np.eye(2), atol=1e-14)
    assert np.linalg.det(g) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 5, 20])
def test_random_orthogonal_and_unitary(n, rng):
    q = random_orthogonal(n, rng)
    np.testing.assert_allclose(q.T @ q, np.eye(n), atol=1e-12)
    u = random_unitary(n, rng)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-12)


def test_givens_mixing_requires_two_by_two(rng):
    with pytest.raises(ConfigError):
        make_mixing("givens", 3, 3, rng)
    with pytest.raises(ConfigError):
        make_mixing("hadamard", 2, 2, rng)


def test_bpsk_statistics(rng):
    s = make_sources("bpsk", 1, 1000, rng)[0]
    assert set(np.unique(s)) == {-1.0, 1.0}
    assert kurtosis(s) == pytest.approx(-2.0, abs=0.01)
    assert circularity_ratio(make_sources("bpsk", 1, 100, rng, complex_=True)[0]) == pytest.approx(1.0)


def test_qam_is_circular(rng):
    T = 4000
    s = make_sources("qam4", 1, T, rng)[0]
    assert np.allclose(np.abs(s), 1.0)
    assert circularity_ratio(s) <= 3 / np.sqrt(T)
    assert kurtosis(s) == pytest.approx(-1.0, abs=0.1)


@pytest.mark.parametrize("kind", ["uniform", "bpsk", "qam4", "gaussian"])
@pytest.mark.parametrize("complex_", [False, True])
def test_unit_power_and_decorrelated(kind, complex_):
    T = 10000
    rng = np.random.default_rng(3)
    s = make_sources(kind, 3, T, rng, complex_)
    p = np.mean(np.abs(s) ** 2, axis=1)
    np.testing.assert_allclose(p, 1.0, atol=3 / np.sqrt(T))
    c = s @ s.conj().T / T
    off = c[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 5 / np.sqrt(T)
    assert np.max(np.abs(np.mean(s, axis=1))) < 5 / np.sqrt(T)


def test_uniform_kurtosis(rng):
    assert kurtosis(make_sources("uniform", 1, 20000, rng)[0]) == pytest.approx(-1.2, abs=0.05)


def test_generation_is_deterministic():
    sc = Scenario(sources="uniform", K=3, T=40, mixing="orthogonal", snr_db=10, trials=5, seed=7)
    for trial in range(5):
        s1, m1 = generate(sc, trial)
        s2, m2 = generate(sc, trial)
        np.testing.assert_array_equal(s1, s2)
        np.testing.assert_array_equal(m1.H, m2.H)
        x1 = mix(m1, s1, rng_seed=noise_seed(sc, trial))
        x2 = mix(m2, s2, rng_seed=noise_seed(sc, trial))
        np.testing.assert_array_equal(x1, x2)
    a, _ = generate(sc, 0)
    b, _ = generate(sc, 1)
    assert not np.array_equal(a, b)
    c, _ = generate(Scenario(sources="uniform", K=3, T=40, mixing="orthogonal", trials=5, seed=8), 0)
    assert not np.array_equal(a, c)


def test_trial_range_checked():
    sc = Scenario(trials=2)
    with pytest.raises(ValueError):
        generate(sc, 2)


def test_noise_power_from_snr():
    sc = Scenario(sources="bpsk", K=4, T=20000, mixing="orthogonal", snr_db=10, trials=1)
    s, model = generate(sc, 0)
    x = mix(model, s, rng_seed=noise_seed(sc, 0))
    n = x - model.H @ s
    assert np.mean(n ** 2) == pytest.approx(0.1, rel=0.05)
    assert model.snr == pytest.approx(10.0)


def test_complex_regime_inference():
    assert Scenario(mixing="unitary", K=3).is_complex
    assert Scenario(sources="qam4", mixing="identity").is_complex
    assert not Scenario(sources="bpsk", mixing="orthogonal").is_complex
    assert Scenario(sources="bpsk", mixing="orthogonal", complex=True).is_complex
    s, m = generate(Scenario(sources="bpsk", K=3, T=10, mixing="unitary", trials=1), 0)
    assert np.iscomplexobj(s) and np.iscomplexobj(m.H)


@pytest.mark.parametrize("kw", [dict(sources="laplace"), dict(mixing="toeplitz"), dict(trials=0),
                                dict(K=3, L=2), dict(T=0)])
def test_scenario_validation(kw):
    with pytest.raises(ConfigError):
        Scenario(**kw)


def _write(tmp_path, text):
    p = tmp_path / "s.cfg"
    p.write_text(text)
    return p


def test_load_scenario(tmp_path):
    p = _write(tmp_path, "# scenario\nsources = bpsk\nK = 5\nT = 150  # samples\nmixing = orthogonal\n"
                         "snr_db = 20\ntrials = 3\nseed = 11\nunrelated = 1\n")
    sc = load_scenario(p)
    assert sc == Scenario(sources="bpsk", K=5, T=150, mixing="orthogonal", snr_db=20.0, trials=3, seed=11)
    assert load_scenario(p, trials=9).trials == 9


@pytest.mark.parametrize("text, line", [
    ("K = 2\nT 50\n", 2),
    ("K = 2\nK = 3\n", 2),
    ("sources = bpsk\n\nT = fifty\n", 3),
    ("K = 2\ntrials =\n", 2),
    ("K = 2\nT = 50\ntrials = 0\n", 3),
    ("= 4\n", 1),
    ("complex = maybe\n", 1),
])
def test_config_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ConfigError) as info:
        load_scenario(_write(tmp_path, text))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_keyvalue_values_keep_their_line(tmp_path):
    kv = read_keyvalue(_write(tmp_path, "\n# c\na = 1\nb = x = y\n"))
    assert kv == {"a": ("1", 3), "b": ("x = y", 4)}
