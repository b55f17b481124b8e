"""Acceptance suite: one test per criterion, each printing a single
``criterion N: PASS|FAIL ...`` line (also repeated in the terminal summary).

The Monte-Carlo runs are cached per session so the monotonicity criterion
can inspect every trajectory produced by the other experiments.
"""
import functools
import math
from dataclasses import replace

import numpy as np
import pytest

from robustica import quartic
from robustica.benchgen import Scenario
from robustica.cli import resolve_config
from robustica.contrast import kurtosis, kurtosis_gradient, moment4, moment4_gradient, output_moments
from robustica.deflation import extract_all
from robustica.experiments import Experiment, aggregate, load_experiment, parse_method, run
from robustica.extraction import ExtractionConfig, extract_one, os_coefficients, select_root
from robustica.metrics import flops_for, smse
from robustica.signals import givens

from conftest import random_vector, sub_gaussian_mixture
from test_quartic import companion_roots, multiset_distance, p_at

RESULTS = {}
TOTAL_VIOLATIONS = {}


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _track(name, results):
    TOTAL_VIOLATIONS[name] = (sum(r.monotone_violations for r in results), len(results))
    return results


# ---------------------------------------------------------------- cached runs


@functools.lru_cache(maxsize=None)
def givens_runs(T):
    exp = load_experiment(resolve_config(f"givens_T{T}"))
    return _track(f"givens_T{T}", run(exp))


@functools.lru_cache(maxsize=None)
def cost_runs(K, budgets, trials):
    sc = Scenario(sources="bpsk", K=K, T=150, mixing="orthogonal", trials=trials, seed=0)
    methods = tuple(parse_method(m) for m in ("robustica", "pw+robustica", "fastica", "pw+fastica"))
    exp = Experiment(name=f"cost_K{K}", kind="quality_cost", scenario=sc, methods=methods, budgets=budgets)
    return _track(f"cost_K{K}_{trials}", run(exp))


@functools.lru_cache(maxsize=None)
def complex_cost_runs(budgets, trials):
    sc = Scenario(sources="bpsk", K=10, T=150, mixing="unitary", trials=trials, seed=0)
    methods = tuple(parse_method(m) for m in ("robustica", "pw+robustica", "pw+nc_fastica", "pw+kmf"))
    exp = Experiment(name="complex_cost", kind="quality_cost", scenario=sc, methods=methods, budgets=budgets)
    return _track("complex_cost", run(exp))


@functools.lru_cache(maxsize=None)
def unconstrained_k5_runs(trials):
    sc = Scenario(sources="bpsk", K=5, T=150, mixing="orthogonal", trials=trials, seed=0)
    exp = Experiment(name="k5", kind="convergence", scenario=sc, methods=(parse_method("robustica"),),
                     max_iterations=1000)
    return _track("k5_unconstrained", run(exp))


def by_method(results, **match):
    out = {}
    for s in aggregate(results):
        if all(getattr(s, k) == v for k, v in match.items()):
            out[(s.method, s.budget)] = s
    return out


# ---------------------------------------------------------------- 1


GIVENS_BENCH = {50: (-17.5, -11.6, 240), 100: (-21.5, -14.7, 79), 150: (-23.5, -17.0, 20)}


def test_criterion_1_two_source_benchmark():
    ok, parts = True, []
    for T, (rob_max, fast_ref, fast_fails) in GIVENS_BENCH.items():
        s = {x.method: x for x in aggregate(givens_runs(T))}
        rob, fast = s["robustica"], s["fastica"]
        row_ok = (rob.smse_db <= rob_max and rob.iter_mean <= 1.05
                  and (T == 50 or rob.fail_count == 0)
                  and abs(fast.smse_db - fast_ref) <= 2.5
                  and fast_fails / 2 <= fast.fail_count <= 2 * fast_fails)
        ok &= row_ok
        parts.append(f"T={T}: robustica {rob.smse_db:.2f} dB it={rob.iter_mean:.3f} fails={rob.fail_count}, "
                     f"fastica {fast.smse_db:.2f} dB fails={fast.fail_count}")
    assert report(1, ok, "; ".join(parts))


# ---------------------------------------------------------------- 2


def test_criterion_2_single_iteration_two_sources():
    rng = np.random.default_rng(0)
    total = single = 0
    for _ in range(100):
        s = rng.uniform(-np.sqrt(3), np.sqrt(3), (2, 500))
        x = givens(rng.uniform(0, 2 * np.pi)) @ s
        for _ in range(10):
            rep = extract_one(x, rng.standard_normal(2))
            total += 1
            single += rep.iterations == 1
    assert report(2, single == total, f"{single}/{total} runs stopped after one iteration")


# ---------------------------------------------------------------- 3


def _grid_best(sp, sign, mu):
    grid = np.concatenate([np.linspace(-10, 10, 20001), np.geomspace(1e-6, 1e3, 5000),
                           -np.geomspace(1e-6, 1e3, 5000), mu + np.linspace(-1e-3, 1e-3, 2001)])
    q = sp.Q(grid)
    k = sp.P(grid) / (q * q) - 2
    score = np.abs(k) if sign == 0 else sign * k
    return np.nanmax(score)


def test_criterion_3_step_polynomial():
    rng = np.random.default_rng(3)
    worst_a = worst_b = worst_c = 0.0
    n = 0
    for complex_ in (False, True):
        for i in range(1000):
            x = sub_gaussian_mixture(rng, 3, 100, complex_)
            w = random_vector(rng, 3, complex_)
            g = random_vector(rng, 3, complex_)
            y, gy = w.conj() @ x, g.conj() @ x
            sp = os_coefficients(y, gy)
            for mu in rng.uniform(-2, 2, 5):
                k = output_moments(y + mu * gy).kurtosis
                worst_a = max(worst_a, abs(sp.kurtosis(mu) - k) / max(1.0, abs(k)))
            mu, h = rng.uniform(-1, 1), 1e-6
            fd = (output_moments(y + (mu + h) * gy).kurtosis - output_moments(y + (mu - h) * gy).kurtosis) / (2 * h)
            scale = max(abs(fd), 1e-3 * np.max(np.abs(sp.a)) / abs(sp.Q(mu)) ** 3)
            worst_b = max(worst_b, abs(sp.slope(mu) - fd) / scale)
            sign = (0, 1, -1)[i % 3]
            mu_opt = select_root(sp, quartic.solve(sp.a), sign)
            got = abs(sp.kurtosis(mu_opt)) if sign == 0 else sign * sp.kurtosis(mu_opt)
            best = _grid_best(sp, sign, mu_opt)
            worst_c = max(worst_c, (best - got) / max(1.0, abs(best)))
            n += 1
    ok = worst_a <= 1e-8 and worst_b <= 1e-4 and worst_c <= 1e-9
    assert report(3, ok, f"{n} instances: (a) {worst_a:.1e} (b) {worst_b:.1e} "
                         f"(c) grid excess {max(worst_c, 0):.1e}")


# ---------------------------------------------------------------- 4


def test_criterion_4_quartic_solver():
    rng = np.random.default_rng(4)
    worst = 0.0
    residual_ok = True
    for _ in range(1000):
        coeffs = rng.uniform(-10, 10, 5)
        rs = quartic.solve(coeffs)
        worst = max(worst, multiset_distance(rs.roots, companion_roots(coeffs)))
        residual_ok &= all(abs(p_at(coeffs, r)) <= quartic.residual_bound(coeffs, r) for r in rs.roots)
    demoted = 0
    for lead in (1e-14, 1e-16, 0.0):
        for _ in range(100):
            coeffs = rng.uniform(-10, 10, 5)
            coeffs[4] = lead
            rs = quartic.solve(coeffs)
            demoted += rs.degree == 3
            residual_ok &= all(abs(p_at(coeffs, r)) <= quartic.residual_bound(coeffs, r) for r in rs.roots)
    ok = worst <= 1e-6 and residual_ok and demoted == 300
    assert report(4, ok, f"max root deviation {worst:.1e}, residual bound held={residual_ok}, "
                         f"{demoted}/300 demoted to cubic")


# ---------------------------------------------------------------- 5


def test_criterion_5_monotone_contrast():
    for T in GIVENS_BENCH:
        givens_runs(T)
    cost_runs(10, COST_BUDGETS, COST_TRIALS)
    complex_cost_runs(COMPLEX_BUDGETS, COMPLEX_TRIALS)
    unconstrained_k5_runs(K5_TRIALS)
    violations = sum(v for v, _ in TOTAL_VIOLATIONS.values())
    runs = sum(n for _, n in TOTAL_VIOLATIONS.values())
    assert report(5, violations == 0, f"{violations} decreases beyond 1e-12 over {runs} runs "
                                      f"({len(TOTAL_VIOLATIONS)} experiments)")


# ---------------------------------------------------------------- 6


def _fd_worst(f, grad, complex_, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal((3, 200)) + (1j * rng.standard_normal((3, 200)) if complex_ else 0)
        w = random_vector(rng, 3, complex_)
        u = random_vector(rng, 3, complex_)
        u /= np.linalg.norm(u)
        h = 1e-5
        fd = (f(w + h * u, x) - f(w - h * u, x)) / (2 * h)
        g = grad(w, x)
        an = float(np.real(np.vdot(u, g)))
        worst = max(worst, abs(fd - an) / max(abs(fd), 1e-3 * np.linalg.norm(g)))
    return worst


def test_criterion_6_gradients():
    worst = {}
    for complex_ in (False, True):
        worst[("kurtosis", complex_)] = _fd_worst(lambda w, x: kurtosis(w, x).kurtosis, kurtosis_gradient,
                                                  complex_, 60 + complex_)
        worst[("moment", complex_)] = _fd_worst(moment4, moment4_gradient, complex_, 70 + complex_)
    ok = max(worst.values()) <= 1e-5
    detail = ", ".join(f"{n}/{'complex' if c else 'real'} {v:.1e}" for (n, c), v in worst.items())
    assert report(6, ok, detail)


# ---------------------------------------------------------------- 7


def test_criterion_7_flops():
    got = [flops_for("robustica", False, 2, T, 1, K=2).total / 2 / 1e3 for T in (50, 100, 150)]
    assert report(7, got == [1.1, 2.2, 3.3], f"RobustICA kflops/source at T=50/100/150: {got}")


# ---------------------------------------------------------------- 8


COST_BUDGETS = (200, 300, 400, 600, 800, 1600, 3200)
COST_TRIALS = 100
K5_TRIALS = 100


def test_criterion_8_quality_cost_shape():
    s = by_method(cost_runs(10, COST_BUDGETS, COST_TRIALS))
    lost = [b for b in COST_BUDGETS if s[("robustica", b)].smse_db >= s[("pw+fastica", b)].smse_db]
    top = COST_BUDGETS[-1]
    floor_gap = abs(s[("pw+robustica", top)].smse_db - s[("pw+fastica", top)].smse_db)
    k5 = aggregate(unconstrained_k5_runs(K5_TRIALS))[0].smse_db
    ok = not lost and floor_gap <= 1.5 and k5 <= -40
    curve = ", ".join(f"{b}: {s[('robustica', b)].smse_db:.1f}/{s[('pw+fastica', b)].smse_db:.1f}"
                      for b in COST_BUDGETS)
    assert report(8, ok, f"K=10 robustica/pw+fastica dB by budget [{curve}]; not dominated at {lost}; "
                         f"pw floors {s[('pw+robustica', top)].smse_db:.2f}/{s[('pw+fastica', top)].smse_db:.2f}"
                         f" (gap {floor_gap:.2f} dB); K=5 unconstrained {k5:.1f} dB")


# ---------------------------------------------------------------- 9


COMPLEX_BUDGETS = (2000, 3000)
COMPLEX_TRIALS = 50


def test_criterion_9_complex_noncircular():
    s = by_method(complex_cost_runs(COMPLEX_BUDGETS, COMPLEX_TRIALS))
    ok, parts = True, []
    for b in COMPLEX_BUDGETS:
        rob = s[("robustica", b)].smse_db
        pw = {m: s[(m, b)].smse_db for m in ("pw+robustica", "pw+nc_fastica", "pw+kmf")}
        ok &= rob <= pw["pw+nc_fastica"] - 1 and rob <= pw["pw+kmf"] - 1
        ok &= max(pw.values()) - min(pw.values()) <= 2
        parts.append(f"budget {b}: robustica {rob:.2f}, " + ", ".join(f"{m} {v:.2f}" for m, v in pw.items()))
    assert report(9, ok, "; ".join(parts))


# ---------------------------------------------------------------- 10


def test_criterion_10_metric_invariance():
    rng = np.random.default_rng(10)
    exact = close = 0
    worst = 0.0
    for i in range(100):
        K, T = int(rng.integers(2, 8)), 100
        complex_ = i % 2 == 1
        s = rng.choice([-1.0, 1.0], (K, T))
        e = (np.eye(K) + 0.3 * rng.standard_normal((K, K))) @ s + 0.05 * rng.standard_normal((K, T))
        if complex_:
            e = e * np.exp(1j * rng.uniform(0, 2 * np.pi, (K, 1)))
        perm = rng.permutation(K)
        ref = smse(s, e).average
        # power-of-two scales leave every floating-point operation exact
        d2 = (2.0 ** rng.integers(-20, 21, K)) * rng.choice([-1.0, 1.0], K)
        exact += smse(s, d2[:, None] * e[perm]).average == ref
        d = 10.0 ** rng.uniform(-3, 3, K) * (np.exp(1j * rng.uniform(0, 2 * np.pi, K)) if complex_ else 1)
        got = smse(s, d[:, None] * e[perm]).average
        worst = max(worst, abs(got - ref) / ref)
        close += math.isclose(got, ref, rel_tol=1e-12)
    ok = exact == 100 and close == 100
    assert report(10, ok, f"{exact}/100 bit-identical under permutation and power-of-two scaling; "
                          f"{close}/100 within 1e-12 under arbitrary scaling (worst {worst:.1e})")
