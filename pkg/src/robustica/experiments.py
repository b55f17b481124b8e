"""Monte-Carlo experiment harness behind the ``robustica run`` command.

An experiment is a scenario (see :mod:`robustica.benchgen`) plus a list of
methods and a sweep.  Four sweep kinds are supported:

``convergence``
    run every method to its stopping test (iteration counts and failure rates).
``quality_cost``
    fixed iterations per source derived from a list of flop budgets
    (flops/source/sample); SMSE versus cost.
``efficiency``
    one flop budget, SMSE versus block length ``T``.
``noise``
    one flop budget, SMSE versus SNR; the non-blind MMSE receiver can be
    listed as method ``mmse`` for reference.

Trials are independent and keyed by ``(seed, trial)``; results are always
sorted canonically so the output does not depend on the number of jobs.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .benchgen import Scenario, generate, noise_seed, read_keyvalue, scenario_from_mapping
from .deflation import extract_all
from .exceptions import ConfigError
from .extraction import ExtractionConfig
from .metrics import per_iteration_flops, prewhitening_flops, setup_flops, smse
from .signals import mix

KINDS = ("convergence", "quality_cost", "efficiency", "noise")
ALGORITHMS = ("robustica", "fastica", "nc_fastica", "kmf", "mmse")
#: per-trial SMSE above this counts as a failed separation
FAIL_DB = -10.0
#: allowed decrease of the monitored contrast between iterations
MONOTONE_ATOL = 1e-12


@dataclass(frozen=True)
class Method:
    name: str
    algorithm: str
    prewhiten: bool
    deflation: str


def parse_method(token, default_deflation="orthogonalization"):
    """``[pw+]algorithm[:deflation]``, e.g. ``pw+fastica`` or ``robustica:regression``."""
    name = token.strip()
    body = name.lower()
    pw = body.startswith("pw+")
    if pw:
        body = body[3:]
    algo, _, defl = body.partition(":")
    algo = algo.replace("-", "_")
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown method {token!r}")
    return Method(name=name, algorithm=algo, prewhiten=pw, deflation=defl or default_deflation)


@dataclass(frozen=True)
class Experiment:
    name: str
    kind: str
    scenario: Scenario
    methods: tuple
    eta: float = 0.5e-6
    max_iterations: int = 1000
    budgets: tuple = ()
    budget: float | None = None
    T_values: tuple = ()
    snr_values: tuple = ()
    init: str = "canonical"

    def settings(self):
        """(T, snr_db, budget) triples swept by the experiment."""
        sc = self.scenario
        if self.kind == "convergence":
            return [(T, sc.snr_db, None) for T in (self.T_values or (sc.T,))]
        if self.kind == "quality_cost":
            return [(T, sc.snr_db, b) for T in (self.T_values or (sc.T,)) for b in self.budgets]
        if self.kind == "efficiency":
            return [(T, sc.snr_db, self.budget) for T in self.T_values]
        return [(sc.T, snr, self.budget) for snr in self.snr_values]


def _floats(value, lineno, name):
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad number list for {name}: {value!r}", line=lineno) from None


_KNOWN = {"name", "experiment", "methods", "deflation", "eta", "max_iters", "budgets", "budget",
          "T_values", "snr_values", "init", "sources", "K", "L", "T", "mixing", "complex", "snr_db",
          "trials", "seed"}


def load_experiment(path, trials=None, seed=None):
    """Parse an experiment config file (``key = value`` lines)."""
    entries = read_keyvalue(path)
    for key, (_, lineno) in entries.items():
        if key not in _KNOWN:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
    overrides = {}
    if trials is not None:
        overrides["trials"] = int(trials)
    if seed is not None:
        overrides["seed"] = int(seed)
    scenario = scenario_from_mapping(entries, **overrides)

    def get(key, default=None):
        return entries[key] if key in entries else (default, None)

    kind, ln = get("experiment", "convergence")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}", line=ln)
    deflation, _ = get("deflation", "orthogonalization")
    methods_raw, ln = get("methods")
    if not methods_raw:
        raise ConfigError("no methods given", line=ln)
    try:
        methods = tuple(parse_method(t, deflation) for t in methods_raw.split(",") if t.strip())
    except ConfigError as exc:
        raise ConfigError(str(exc), line=ln) from None
    eta, ln_eta = get("eta", "0.5e-6")
    max_it, ln_it = get("max_iters", "1000")
    budgets, ln_b = get("budgets", "")
    budget, ln_b1 = get("budget", "")
    T_values, ln_t = get("T_values", "")
    snr_values, ln_s = get("snr_values", "")
    init, _ = get("init", "canonical")
    try:
        exp = Experiment(
            name=get("name", Path(path).stem)[0],
            kind=kind,
            scenario=scenario,
            methods=methods,
            eta=float(eta),
            max_iterations=int(max_it),
            budgets=_floats(budgets, ln_b, "budgets"),
            budget=float(budget) if budget else None,
            T_values=tuple(int(v) for v in _floats(T_values, ln_t, "T_values")),
            snr_values=_floats(snr_values, ln_s, "snr_values"),
            init=init,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if kind == "quality_cost" and not exp.budgets:
        raise ConfigError("quality_cost needs 'budgets'")
    if kind in ("efficiency", "noise") and exp.budget is None:
        raise ConfigError(f"{kind} needs 'budget'")
    if kind == "efficiency" and not exp.T_values:
        raise ConfigError("efficiency needs 'T_values'")
    if kind == "noise" and not exp.snr_values:
        raise ConfigError("noise needs 'snr_values'")
    if not 0 <= exp.eta < 1:
        raise ConfigError("eta must lie in [0, 1)", line=ln_eta)
    if exp.max_iterations < 1:
        raise ConfigError("max_iters must be positive", line=ln_it)
    return exp


def iterations_for_budget(method, budget, K, L, T, complex_):
    """Largest per-source iteration count whose total cost fits the budget.

    ``budget`` is in flops/source/sample.  Returns 0 if not even one
    iteration is affordable.
    """
    dim = K if method.prewhiten else L
    fixed = (prewhitening_flops(complex_, K, T) if method.prewhiten else 0) + setup_flops(
        method.algorithm, complex_, dim, T)
    per_it = per_iteration_flops(method.algorithm, complex_, dim, T)
    return max(0, int(math.floor((budget * K * T - fixed) / (K * per_it) + 1e-9)))


@dataclass
class TrialResult:
    seed: int
    trial: int
    method: str
    K: int
    L: int
    T: int
    snr_db: float | None
    budget: float | None
    iterations: list
    flops: int
    smse: float
    monotone_violations: int = 0
    sign_mismatches: int = 0

    @property
    def smse_db(self):
        return max(10.0 * math.log10(self.smse), -300.0) if self.smse > 0 else -300.0


def monotone_violations(report, atol=MONOTONE_ATOL):
    """Number of iterations where the monitored contrast decreased by more than ``atol``."""
    k = np.asarray(report.contrast_trajectory, dtype=float)
    score = np.abs(k) if report.kurtosis_sign == 0 else report.kurtosis_sign * k
    return int(np.sum(np.diff(score) < -atol))


def run_trial(exp, method, trial, T, snr_db, budget):
    sc = replace(exp.scenario, T=T, snr_db=snr_db)
    s, model = generate(sc, trial)
    x = mix(model, s, rng_seed=noise_seed(sc, trial))
    K, L = sc.K, sc.n_sensors
    if method.algorithm == "mmse":
        H = model.H
        Wm = np.linalg.solve(H @ H.conj().T + model.noise_power * np.eye(L), H)
        est = Wm.conj().T @ x
        return TrialResult(sc.seed, trial, method.name, K, L, T, snr_db, budget, [0] * K, 0,
                           smse(s, est).average)
    if budget is not None:
        n = iterations_for_budget(method, budget, K, L, T, np.iscomplexobj(x))
        if n < 1:
            return None
        cfg = ExtractionConfig(max_iterations=n, eta=0.0, init=exp.init, seed=sc.seed + trial)
    else:
        cfg = ExtractionConfig(max_iterations=exp.max_iterations, eta=exp.eta, init=exp.init,
                               seed=sc.seed + trial)
    sep = extract_all(x, n_sources=K, algorithm=method.algorithm, deflation=method.deflation,
                      prewhiten_data=method.prewhiten, config=cfg,
                      assume_white=sc.white_mixture)
    viol = sum(monotone_violations(r) for r in sep.reports) if method.algorithm == "robustica" else 0
    return TrialResult(sc.seed, trial, method.name, K, L, T, snr_db, budget, sep.iterations,
                       sep.flops.total, smse(s, sep.sources).average, viol,
                       sum(r.sign_mismatch for r in sep.reports))


def _run_chunk(args):
    exp, tasks = args
    return [run_trial(exp, *task) for task in tasks]


def tasks_for(exp):
    out = []
    for T, snr, budget in exp.settings():
        for m in exp.methods:
            for trial in range(exp.scenario.trials):
                out.append((m, trial, T, snr, budget))
    return out


def run(exp, jobs=1, progress=None):
    """Run every trial of ``exp``; returns the list of :class:`TrialResult`.

    On ``KeyboardInterrupt`` the results gathered so far are attached to the
    exception as ``partial`` before it propagates.
    """
    tasks = tasks_for(exp)
    results = []
    try:
        if jobs <= 1:
            for i, task in enumerate(tasks):
                results.append(run_trial(exp, *task))
                if progress:
                    progress(i + 1, len(tasks))
        else:
            size = max(1, len(tasks) // (jobs * 8))
            chunks = [(exp, tasks[i:i + size]) for i in range(0, len(tasks), size)]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for i, part in enumerate(pool.map(_run_chunk, chunks)):
                    results.extend(part)
                    if progress:
                        progress(min((i + 1) * size, len(tasks)), len(tasks))
    except KeyboardInterrupt as exc:
        exc.partial = [r for r in results if r is not None]
        raise
    return [r for r in results if r is not None]


# ----------------------------------------------------------------------------
# aggregation and output

def _num(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 10))
    return str(v)


@dataclass
class Summary:
    method: str
    K: int
    T: int
    snr_db: float | None
    budget: float | None
    trials: int
    smse_db: float
    iter_mean: float
    iter_std: float
    kflops_mean: float
    kflops_std: float
    flops_per_source_sample: float
    fail_count: int
    monotone_violations: int


def aggregate(results):
    """Group by (method, T, snr, budget); SMSE is averaged linearly then converted to dB."""
    groups = {}
    for r in results:
        groups.setdefault((r.method, r.T, r.snr_db, r.budget), []).append(r)
    out = []
    for (method, T, snr, budget), rs in groups.items():
        its = np.array([n for r in rs for n in r.iterations], dtype=float)
        kfl = np.array([r.flops / r.K / 1e3 for r in rs])
        lin = np.mean([r.smse for r in rs])
        out.append(Summary(
            method=method, K=rs[0].K, T=T, snr_db=snr, budget=budget, trials=len(rs),
            smse_db=max(10 * math.log10(lin), -300.0) if lin > 0 else -300.0,
            iter_mean=float(its.mean()), iter_std=float(its.std()),
            kflops_mean=float(kfl.mean()), kflops_std=float(kfl.std()),
            flops_per_source_sample=float(np.mean([r.flops / (r.K * r.T) for r in rs])),
            fail_count=int(sum(r.smse_db > FAIL_DB for r in rs)),
            monotone_violations=int(sum(r.monotone_violations for r in rs)),
        ))
    return out


TRIAL_COLUMNS = ("seed", "trial", "algorithm", "K", "L", "T", "SNR", "budget", "iterations", "flops", "SMSE_dB")
AGGREGATE_COLUMNS = ("method", "K", "T", "SNR", "budget", "trials", "SMSE_dB", "iter_mean", "iter_std",
                     "kflops_mean", "kflops_std", "flops_per_source_sample", "fail_count")


def _sort_key(r):
    return (r.T, -1e300 if r.snr_db is None else r.snr_db, -1 if r.budget is None else r.budget, r.method,
            getattr(r, "trial", 0))


def trial_rows(results):
    for r in sorted(results, key=_sort_key):
        yield (r.seed, r.trial, r.method, r.K, r.L, r.T, _num(r.snr_db), _num(r.budget),
               _num(float(np.mean(r.iterations))), r.flops, _num(r.smse_db))


def aggregate_rows(summaries):
    for s in sorted(summaries, key=_sort_key):
        yield (s.method, s.K, s.T, _num(s.snr_db), _num(s.budget), s.trials, _num(s.smse_db),
               _num(s.iter_mean), _num(s.iter_std), _num(s.kflops_mean), _num(s.kflops_std),
               _num(s.flops_per_source_sample), s.fail_count)


def curve_rows(exp, summaries):
    """Plot data: (method, x, SMSE_dB) with x chosen by the sweep kind."""
    for s in sorted(summaries, key=_sort_key):
        if exp.kind == "quality_cost":
            x = s.flops_per_source_sample
        elif exp.kind == "efficiency":
            x = s.T
        elif exp.kind == "noise":
            x = s.snr_db
        else:
            x = s.T
        yield (s.method, s.T, _num(x), _num(s.smse_db))


CURVE_X = {"quality_cost": "flops_per_source_sample", "efficiency": "T", "noise": "SNR",
           "convergence": "T"}


def _write(path, header, columns, rows):
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def write_outputs(exp, results, outdir, timestamp=True):
    """Write trials.csv, aggregate.csv and curve_<kind>.csv into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header = None
    if timestamp:
        header = f"# {exp.name} generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}"
    summaries = aggregate(results)
    _write(outdir / "trials.csv", header, TRIAL_COLUMNS, trial_rows(results))
    _write(outdir / "aggregate.csv", header, AGGREGATE_COLUMNS, aggregate_rows(summaries))
    if exp.kind != "convergence":
        _write(outdir / f"curve_{exp.kind}.csv", header, ("method", "T", CURVE_X[exp.kind], "SMSE_dB"),
               curve_rows(exp, summaries))
    return summaries
