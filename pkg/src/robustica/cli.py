"""Command-line interface.

``robustica run CONFIG OUTDIR``
    run a Monte-Carlo experiment and write trials/aggregate/curve CSV files.
``robustica extract INPUT OUTPUT``
    separate the channels of a signal file and write the estimated sources
    plus a per-source report log.
``robustica generate CONFIG OUTPUT``
    write one trial's observations (and optionally its sources) to a file.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
runtime or numerical errors, 130 when interrupted.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .benchgen import generate, load_scenario, noise_seed
from .deflation import extract_all
from .exceptions import ConfigError, DegenerateError, DimensionError
from .experiments import load_experiment, run, write_outputs
from .extraction import ExtractionConfig, parse_sign
from .fileio import read_block, write_block
from .signals import mix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_INTERRUPT = 130

ALGORITHM_CHOICES = ("robustica", "fastica", "nc-fastica", "kmf")


def bundled_configs():
    """Names of the experiment configs shipped with the package."""
    root = resources.files("robustica") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config(name):
    """A file path, or the name of a bundled config (with or without ``.cfg``)."""
    path = Path(name)
    if path.is_file():
        return path
    stem = name[:-4] if name.endswith(".cfg") else name
    candidate = resources.files("robustica") / "configs" / f"{stem}.cfg"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"no such config file or bundled config: {name!r}")


def parse_sign_schedule(text):
    """``"+,-,any"`` -> ``[1, -1, 0]``.  The Unicode minus sign is accepted."""
    if text is None or not text.strip():
        return None
    out = []
    for token in text.replace("−", "-").split(","):
        token = token.strip()
        try:
            out.append(parse_sign(token))
        except ValueError:
            raise ConfigError(f"bad entry {token!r} in sign schedule") from None
    return out


def _on_off(value):
    v = value.lower()
    if v in ("on", "yes", "true", "1"):
        return True
    if v in ("off", "no", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="robustica", description="Deflationary ICA by exact line search.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte-Carlo experiment config")
    p.add_argument("config", help="config file or bundled config name (see 'list')")
    p.add_argument("outdir")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("extract", help="separate a signal file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--algorithm", choices=ALGORITHM_CHOICES, default="robustica")
    p.add_argument("--prewhiten", type=_on_off, default=False, metavar="{on,off}")
    p.add_argument("--deflation", choices=("ortho", "regression"),
                   help="default: regression for robustica, ortho for the baselines")
    p.add_argument("--sign-schedule", help="comma-separated kurtosis signs, e.g. '+,-' (write "
                        "--sign-schedule=-,+ when the list starts with '-')")
    p.add_argument("--sources", type=int, help="number of sources (default: all channels)")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--eta", type=float, default=0.5e-6)
    p.add_argument("--seed", type=int, default=0, help="seed for random restarts")
    p.add_argument("--assume-white", action="store_true",
                   help="treat unwhitened input as white (baselines only)")
    p.add_argument("--format", choices=("csv", "bin"), help="output format (default: from suffix)")
    p.add_argument("--report", help="report log path (default: OUTPUT.log)")

    p = sub.add_parser("generate", help="write one trial of a scenario to a signal file")
    p.add_argument("config")
    p.add_argument("output")
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--sources-out", help="also write the true sources here")
    p.add_argument("--format", choices=("csv", "bin"))

    sub.add_parser("list", help="list bundled configs")
    return parser


def cmd_run(args):
    exp = load_experiment(resolve_config(args.config), trials=args.trials, seed=args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs must be positive")

    show = not args.quiet and sys.stderr.isatty()

    def progress(done, total):
        if show and (done == total or done % max(1, total // 100) == 0):
            print(f"\r{exp.name}: {done}/{total} runs", end="", file=sys.stderr, flush=True)

    try:
        results = run(exp, jobs=args.jobs, progress=progress)
    except KeyboardInterrupt as exc:
        partial = getattr(exc, "partial", [])
        if partial:
            write_outputs(exp, partial, args.outdir, timestamp=not args.no_timestamp)
        print(f"\ninterrupted; {len(partial)} completed runs written to {args.outdir}", file=sys.stderr)
        return EXIT_INTERRUPT
    if show:
        print(file=sys.stderr)
    summaries = write_outputs(exp, results, args.outdir, timestamp=not args.no_timestamp)
    violations = sum(s.monotone_violations for s in summaries)
    if violations:
        print(f"error: {violations} contrast decreases beyond tolerance", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        for s in sorted(summaries, key=lambda s: (s.T, s.budget or 0, s.snr_db or 0, s.method)):
            extra = f" budget={s.budget:g}" if s.budget is not None else ""
            extra += f" snr={s.snr_db:g}" if s.snr_db is not None else ""
            print(f"{s.method:18s} T={s.T}{extra} SMSE={s.smse_db:7.2f} dB "
                  f"iter={s.iter_mean:.2f}+-{s.iter_std:.2f} kflops={s.kflops_mean:.2f} fails={s.fail_count}")
    return EXIT_OK


def cmd_extract(args):
    signs = parse_sign_schedule(args.sign_schedule)
    if args.algorithm != "robustica" and signs:
        raise ConfigError("--sign-schedule applies to robustica only")
    try:
        x = read_block(args.input)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read {args.input}: {exc}") from None
    try:
        cfg = ExtractionConfig(max_iterations=args.max_iters, eta=args.eta, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    deflation = args.deflation or ("regression" if args.algorithm == "robustica" else "ortho")
    sep = extract_all(x, n_sources=args.sources, algorithm=args.algorithm, deflation=deflation,
                      prewhiten_data=args.prewhiten, config=cfg, signs=signs,
                      assume_white=args.assume_white)
    write_block(args.output, sep.sources, fmt=args.format)
    lines = [f"input={args.input} shape={x.shape[0]}x{x.shape[1]} algorithm={args.algorithm} "
             f"deflation={sep.mode} prewhiten={'on' if args.prewhiten else 'off'} total_flops={sep.flops.total}"]
    for k, rep in enumerate(sep.reports):
        lines.append(f"[source {k}]")
        lines.append(rep.to_log())
    Path(args.report or f"{args.output}.log").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_generate(args):
    sc = load_scenario(resolve_config(args.config))
    if not 0 <= args.trial < sc.trials:
        raise ConfigError(f"--trial must lie in [0, {sc.trials})")
    s, model = generate(sc, args.trial)
    x = mix(model, s, rng_seed=noise_seed(sc, args.trial))
    write_block(args.output, x, fmt=args.format)
    if args.sources_out:
        write_block(args.sources_out, s, fmt=args.format)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    handlers = {"run": cmd_run, "extract": cmd_extract, "generate": cmd_generate}
    if args.command == "list":
        print("\n".join(bundled_configs()))
        return EXIT_OK
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DimensionError, DegenerateError, ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_INTERRUPT


if __name__ == "__main__":
    sys.exit(main())
